#ifndef RESISTNET_GRAPH_IO_HPP
#define RESISTNET_GRAPH_IO_HPP

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "netgraph.hpp"

namespace resistnet
{

// Line-oriented format:
//   vertices N edges M kind TAG
//   id tail head            (M lines, ids 0..M-1 in order)
//   cut i id id ...         (optional)
//   terminal u v            (optional)
// Lattice labels and tags are not part of the format.

inline void write_graph(std::ostream& out, const Network& net)
{
    out << "vertices " << net.vertex_count() << " edges " << net.edge_count() << " kind "
        << to_string(net.kind()) << '\n';
    for (const auto& e : net.edges())
        out << e.id << ' ' << e.tail << ' ' << e.head << '\n';
    for (std::size_t i = 0; i < net.cuts().size(); ++i) {
        out << "cut " << i;
        for (auto e : net.cuts()[i])
            out << ' ' << e;
        out << '\n';
    }
    if (const auto& t = net.terminals())
        out << "terminal " << t->first << ' ' << t->second << '\n';
}

inline Network read_graph(std::istream& in)
{
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                return true;
        }
        return false;
    };

    if (!next_line())
        throw ParseError("empty graph file");
    std::istringstream header(line);
    std::string w1, w2, w3, tag;
    std::size_t n_vertices = 0, n_edges = 0;
    if (!(header >> w1 >> n_vertices >> w2 >> n_edges >> w3 >> tag) || w1 != "vertices" || w2 != "edges" ||
        w3 != "kind")
        throw ParseError("expected 'vertices N edges M kind TAG'", lineno);
    const auto kind = kind_from_string(tag);
    if (!kind)
        throw ParseError("unknown kind '" + tag + "'", lineno);
    if (static_cast<double>(n_edges) > static_cast<double>(edge_budget()))
        throw BudgetExceeded("graph file exceeds edge budget");

    std::vector<HalfEdge> edges;
    edges.reserve(n_edges);
    for (std::size_t i = 0; i < n_edges; ++i) {
        if (!next_line())
            throw ParseError("unexpected end of file in edge list", lineno);
        std::istringstream ls(line);
        HalfEdge e;
        std::string extra;
        if (!(ls >> e.id >> e.tail >> e.head) || (ls >> extra))
            throw ParseError("expected 'id tail head'", lineno);
        if (e.id != i)
            throw ParseError("edge ids must be consecutive from 0", lineno);
        if (e.tail >= n_vertices || e.head >= n_vertices)
            throw ParseError("edge endpoint out of range", lineno);
        edges.push_back(e);
    }

    Network net(*kind, n_vertices, std::move(edges));
    std::vector<std::vector<std::size_t>> cuts;
    while (next_line()) {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "cut") {
            std::size_t index = 0;
            if (!(ls >> index) || index != cuts.size())
                throw ParseError("cuts must be listed in order", lineno);
            std::vector<std::size_t> members;
            std::size_t e = 0;
            while (ls >> e) {
                if (e >= n_edges)
                    throw ParseError("cut references unknown edge", lineno);
                members.push_back(e);
            }
            if (!ls.eof())
                throw ParseError("malformed cut line", lineno);
            cuts.push_back(std::move(members));
        } else if (word == "terminal") {
            std::size_t u = 0, v = 0;
            if (!(ls >> u >> v) || u >= n_vertices || v >= n_vertices)
                throw ParseError("malformed terminal line", lineno);
            net.set_terminals(u, v);
        } else {
            throw ParseError("unknown record '" + word + "'", lineno);
        }
    }
    if (!cuts.empty())
        net.set_cuts(std::move(cuts));
    return net;
}

} // namespace resistnet

#endif // RESISTNET_GRAPH_IO_HPP
