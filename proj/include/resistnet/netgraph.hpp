#ifndef RESISTNET_NETGRAPH_HPP
#define RESISTNET_NETGRAPH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace resistnet
{

enum class NetworkKind { box, torus, path, wedge, glued_trees, zd_wired, zd_free, custom };

inline std::string_view to_string(NetworkKind k)
{
    switch (k) {
    case NetworkKind::box: return "box";
    case NetworkKind::torus: return "torus";
    case NetworkKind::path: return "path";
    case NetworkKind::wedge: return "wedge";
    case NetworkKind::glued_trees: return "glued_trees";
    case NetworkKind::zd_wired: return "zd_wired";
    case NetworkKind::zd_free: return "zd_free";
    case NetworkKind::custom: return "custom";
    }
    return "custom";
}

inline std::optional<NetworkKind> kind_from_string(std::string_view s)
{
    for (auto k : {NetworkKind::box, NetworkKind::torus, NetworkKind::path, NetworkKind::wedge,
                   NetworkKind::glued_trees, NetworkKind::zd_wired, NetworkKind::zd_free,
                   NetworkKind::custom}) {
        if (to_string(k) == s)
            return k;
    }
    return std::nullopt;
}

/// One representative orientation of an undirected edge; the reversed
/// orientation is implicit and carries the negated value of any flow.
struct HalfEdge
{
    std::size_t id = 0;
    std::size_t tail = 0;
    std::size_t head = 0;

    bool is_loop() const noexcept { return tail == head; }
};

/// Position of an edge in Z^d: unit step along `axis` starting at `tail`.
struct LatticeEdge
{
    std::vector<std::int64_t> tail;
    int axis = 0;
};

inline constexpr std::size_t unreachable = std::numeric_limits<std::size_t>::max();

class Network
{
public:
    Network() = default;

    Network(NetworkKind kind, std::size_t vertex_count, std::vector<HalfEdge> edges)
        : kind_(kind), vertex_count_(vertex_count), edges_(std::move(edges))
    {
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            if (edges_[i].id != i)
                throw InvalidInput("edge ids must be dense and ordered");
            if (edges_[i].tail >= vertex_count_ || edges_[i].head >= vertex_count_)
                throw InvalidInput("edge " + std::to_string(i) + " has an endpoint out of range");
        }
    }

    NetworkKind kind() const noexcept { return kind_; }
    std::size_t vertex_count() const noexcept { return vertex_count_; }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::vector<HalfEdge>& edges() const noexcept { return edges_; }
    const HalfEdge& edge(std::size_t e) const { return edges_.at(e); }

    const std::optional<std::pair<std::size_t, std::size_t>>& terminals() const noexcept
    {
        return terminals_;
    }
    void set_terminals(std::size_t u, std::size_t v)
    {
        if (u >= vertex_count_ || v >= vertex_count_)
            throw InvalidInput("terminal out of range");
        terminals_ = std::make_pair(u, v);
    }

    /// Direction-1 cuts E_0..E_{n-1}; empty unless the network is a torus.
    const std::vector<std::vector<std::size_t>>& cuts() const noexcept { return cuts_; }
    bool has_cuts() const noexcept { return !cuts_.empty(); }
    void set_cuts(std::vector<std::vector<std::size_t>> cuts)
    {
        for (const auto& c : cuts)
            for (auto e : c)
                if (e >= edges_.size())
                    throw InvalidInput("cut references unknown edge");
        cuts_ = std::move(cuts);
    }

    /// Lattice labels, one per edge, for networks cut out of Z^d.
    const std::vector<LatticeEdge>& lattice() const noexcept { return lattice_; }
    void set_lattice(std::vector<LatticeEdge> lattice, int dimension, std::size_t side)
    {
        if (!lattice.empty() && lattice.size() != edges_.size())
            throw InvalidInput("lattice labels must cover every edge");
        lattice_ = std::move(lattice);
        dimension_ = dimension;
        side_ = side;
    }
    int dimension() const noexcept { return dimension_; }
    std::size_t side() const noexcept { return side_; }

    const std::map<std::string, std::size_t>& tags() const noexcept { return tags_; }
    void tag(std::string name, std::size_t e)
    {
        if (e >= edges_.size())
            throw InvalidInput("tag references unknown edge");
        tags_[std::move(name)] = e;
    }
    std::size_t tagged(const std::string& name) const
    {
        auto it = tags_.find(name);
        if (it == tags_.end())
            throw InvalidInput("no edge tagged '" + name + "'");
        return it->second;
    }

private:
    NetworkKind kind_ = NetworkKind::custom;
    std::size_t vertex_count_ = 0;
    std::vector<HalfEdge> edges_;
    std::optional<std::pair<std::size_t, std::size_t>> terminals_;
    std::vector<std::vector<std::size_t>> cuts_;
    std::vector<LatticeEdge> lattice_;
    int dimension_ = 0;
    std::size_t side_ = 0;
    std::map<std::string, std::size_t> tags_;
};

/// Compressed undirected adjacency; self-loops are dropped.
class Adjacency
{
public:
    explicit Adjacency(const Network& net) : offsets_(net.vertex_count() + 1, 0)
    {
        for (const auto& e : net.edges()) {
            if (e.is_loop())
                continue;
            ++offsets_[e.tail + 1];
            ++offsets_[e.head + 1];
        }
        for (std::size_t i = 1; i < offsets_.size(); ++i)
            offsets_[i] += offsets_[i - 1];
        neighbours_.resize(offsets_.back());
        std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
        for (const auto& e : net.edges()) {
            if (e.is_loop())
                continue;
            neighbours_[fill[e.tail]++] = e.head;
            neighbours_[fill[e.head]++] = e.tail;
        }
    }

    std::span<const std::size_t> neighbours(std::size_t v) const
    {
        return {neighbours_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
    }

    std::size_t vertex_count() const noexcept { return offsets_.size() - 1; }

    std::vector<std::size_t> distances_from(std::size_t source) const
    {
        std::vector<std::size_t> dist(vertex_count(), unreachable);
        std::deque<std::size_t> queue{source};
        dist[source] = 0;
        while (!queue.empty()) {
            const auto x = queue.front();
            queue.pop_front();
            for (auto y : neighbours(x)) {
                if (dist[y] == unreachable) {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        return dist;
    }

private:
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> neighbours_;
};

inline bool is_connected(const Network& net)
{
    if (net.vertex_count() == 0)
        return false;
    const auto dist = Adjacency(net).distances_from(0);
    return std::none_of(dist.begin(), dist.end(), [](auto d) { return d == unreachable; });
}

namespace detail
{

inline void check_budget(double projected_edges)
{
    if (projected_edges > static_cast<double>(edge_budget()))
        throw BudgetExceeded("network would need " + std::to_string(static_cast<long long>(projected_edges)) +
                             " half-edges, budget is " + std::to_string(edge_budget()));
}

inline void require_connected(const Network& net)
{
    if (net.edge_count() == 0)
        throw InvalidInput("network has no edges");
    if (!is_connected(net))
        throw InvalidInput("network is not connected");
}

inline std::size_t ipow(std::size_t base, int exp)
{
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i)
        r *= base;
    return r;
}

// Row-major coordinates with axis 0 varying fastest.
inline std::vector<std::int64_t> unflatten(std::size_t index, std::size_t side, int d)
{
    std::vector<std::int64_t> x(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
        x[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(index % side);
        index /= side;
    }
    return x;
}

inline std::size_t flatten(std::span<const std::int64_t> x, std::size_t side)
{
    std::size_t index = 0;
    for (std::size_t a = x.size(); a-- > 0;)
        index = index * side + static_cast<std::size_t>(x[a]);
    return index;
}

inline std::int64_t wrap(std::int64_t x, std::int64_t n) { return ((x % n) + n) % n; }

} // namespace detail

/// Discrete torus (Z/nZ)^d. Edge id = vertex * d + axis, each edge pointing
/// from x to x + e_axis. For n = 2 the two orientations of every adjacency are
/// distinct representatives and appear as parallel edges.
inline Network build_torus(std::size_t n, int d)
{
    if (n < 2)
        throw InvalidInput("torus side must be at least 2");
    if (d < 1)
        throw InvalidInput("torus dimension must be at least 1");
    detail::check_budget(std::pow(static_cast<double>(n), d) * d);

    const std::size_t vertices = detail::ipow(n, d);
    std::vector<HalfEdge> edges;
    std::vector<LatticeEdge> lattice;
    edges.reserve(vertices * static_cast<std::size_t>(d));
    lattice.reserve(vertices * static_cast<std::size_t>(d));
    std::vector<std::vector<std::size_t>> cuts(n);
    const auto side = static_cast<std::int64_t>(n);

    for (std::size_t v = 0; v < vertices; ++v) {
        const auto x = detail::unflatten(v, n, d);
        for (int a = 0; a < d; ++a) {
            auto y = x;
            y[static_cast<std::size_t>(a)] = detail::wrap(y[static_cast<std::size_t>(a)] + 1, side);
            const std::size_t id = edges.size();
            edges.push_back({id, v, detail::flatten(y, n)});
            lattice.push_back({x, a});
            if (a == 0)
                cuts[static_cast<std::size_t>(x[0])].push_back(id);
        }
    }

    Network net(NetworkKind::torus, vertices, std::move(edges));
    net.set_cuts(std::move(cuts));
    net.set_lattice(std::move(lattice), d, n);
    return net;
}

/// Box {0..n}^d with the face x_1 = 0 merged into terminal u (vertex 0) and
/// x_1 = n merged into terminal v (vertex 1). Edges inside a merged face
/// become self-loops and are kept.
inline Network build_box(std::size_t n, int d)
{
    if (n < 1)
        throw InvalidInput("box side must be at least 1");
    if (d < 2)
        throw InvalidInput("box dimension must be at least 2");
    const std::size_t side = n + 1;
    detail::check_budget(std::pow(static_cast<double>(side), d) * d);

    const std::size_t grid = detail::ipow(side, d);
    std::vector<std::size_t> label(grid);
    std::size_t next = 2;
    for (std::size_t g = 0; g < grid; ++g) {
        const auto x0 = g % side;
        label[g] = x0 == 0 ? 0 : (x0 == n ? 1 : next++);
    }

    std::vector<HalfEdge> edges;
    std::vector<LatticeEdge> lattice;
    for (std::size_t g = 0; g < grid; ++g) {
        const auto x = detail::unflatten(g, side, d);
        for (int a = 0; a < d; ++a) {
            if (static_cast<std::size_t>(x[static_cast<std::size_t>(a)]) == n)
                continue;
            auto y = x;
            ++y[static_cast<std::size_t>(a)];
            edges.push_back({edges.size(), label[g], label[detail::flatten(y, side)]});
            lattice.push_back({x, a});
        }
    }

    Network net(NetworkKind::box, next, std::move(edges));
    net.set_terminals(0, 1);
    net.set_lattice(std::move(lattice), d, n);
    detail::require_connected(net);
    return net;
}

/// Path 1..2K+1 with, for k = 1..K, a pair of complete binary trees of depth k
/// glued at their leaves hanging from 2k (free root x'_{2k}) and a copy hanging
/// from 2k+1 (free root x'_{2k+1}), plus the bridge x'_{2k} -- x'_{2k+1}.
/// Path vertex j has index j-1. Edges e_{2k} and e'_{2k} are tagged "e_2k" and "e'_2k".
inline Network build_glued_trees(std::size_t K)
{
    if (K < 1)
        throw InvalidInput("glued trees need K >= 1");
    double projected = 2.0 * static_cast<double>(K);
    for (std::size_t k = 1; k <= K; ++k)
        projected += 2.0 * 2.0 * (std::pow(2.0, static_cast<double>(k) + 1) - 2) + 1;
    detail::check_budget(projected);

    std::vector<HalfEdge> edges;
    std::size_t vertices = 2 * K + 1;
    auto add_edge = [&](std::size_t a, std::size_t b) {
        edges.push_back({edges.size(), a, b});
        return edges.size() - 1;
    };

    std::vector<std::size_t> path_edge(2 * K + 1);
    for (std::size_t j = 1; j <= 2 * K; ++j)
        path_edge[j] = add_edge(j - 1, j);

    // Two depth-k trees sharing their 2^k leaves; returns the far root.
    auto glue = [&](std::size_t root, std::size_t k) {
        std::vector<std::size_t> level{root};
        for (std::size_t depth = 1; depth <= k; ++depth) {
            std::vector<std::size_t> next_level;
            for (auto parent : level)
                for (int c = 0; c < 2; ++c) {
                    const auto child = vertices++;
                    add_edge(parent, child);
                    next_level.push_back(child);
                }
            level = std::move(next_level);
        }
        for (std::size_t depth = k; depth-- > 0;) {
            std::vector<std::size_t> next_level;
            for (std::size_t i = 0; i < level.size(); i += 2) {
                const auto parent = vertices++;
                add_edge(level[i], parent);
                add_edge(level[i + 1], parent);
                next_level.push_back(parent);
            }
            level = std::move(next_level);
        }
        return level.front();
    };

    std::vector<std::pair<std::size_t, std::size_t>> tagged;
    for (std::size_t k = 1; k <= K; ++k) {
        const auto x2k = 2 * k - 1;
        const auto x2k1 = 2 * k;
        const auto far_a = glue(x2k, k);
        const auto far_b = glue(x2k1, k);
        tagged.emplace_back(path_edge[2 * k], add_edge(far_a, far_b));
    }

    Network net(NetworkKind::glued_trees, vertices, std::move(edges));
    for (std::size_t k = 1; k <= K; ++k) {
        net.tag("e_" + std::to_string(2 * k), tagged[k - 1].first);
        net.tag("e'_" + std::to_string(2 * k), tagged[k - 1].second);
    }
    net.set_terminals(0, 2 * K);
    detail::require_connected(net);
    return net;
}

namespace detail
{

// Largest integer y >= 0 with y <= x^alpha.
inline std::int64_t wedge_height(std::int64_t x, double alpha)
{
    if (x == 0)
        return 0;
    const double xd = static_cast<double>(x);
    auto y = static_cast<std::int64_t>(std::floor(std::pow(xd, alpha)));
    const double slack = 1e-9 * xd;
    while (std::pow(static_cast<double>(y + 1), 1.0 / alpha) <= xd + slack)
        ++y;
    while (y > 0 && std::pow(static_cast<double>(y), 1.0 / alpha) > xd + slack)
        --y;
    return y;
}

} // namespace detail

/// Induced subgraph of Z^2 on {(x, y) : |y| <= |x|^alpha, |x| <= xmax}.
/// Terminals: the origin and (xmax, 0).
inline Network build_wedge(double alpha, std::int64_t xmax)
{
    if (!(alpha > 0.0 && alpha <= 1.0 / 3.0 + 1e-15))
        throw InvalidInput("wedge exponent must lie in (0, 1/3]");
    if (xmax < 0)
        throw InvalidInput("wedge extent must be nonnegative");
    double projected = 0;
    for (std::int64_t x = -xmax; x <= xmax; ++x)
        projected += 2.0 * (2.0 * static_cast<double>(detail::wedge_height(std::abs(x), alpha)) + 1);
    detail::check_budget(projected);

    std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> index;
    for (std::int64_t x = -xmax; x <= xmax; ++x) {
        const auto h = detail::wedge_height(std::abs(x), alpha);
        for (std::int64_t y = -h; y <= h; ++y)
            index.emplace(std::make_pair(x, y), index.size());
    }

    std::vector<HalfEdge> edges;
    std::vector<LatticeEdge> lattice;
    for (const auto& [p, v] : index) {
        const auto [x, y] = p;
        const std::pair<std::int64_t, std::int64_t> steps[] = {{x + 1, y}, {x, y + 1}};
        for (int a = 0; a < 2; ++a) {
            auto it = index.find(steps[a]);
            if (it == index.end())
                continue;
            edges.push_back({edges.size(), v, it->second});
            lattice.push_back({{x, y}, a});
        }
    }

    Network net(NetworkKind::wedge, index.size(), std::move(edges));
    net.set_lattice(std::move(lattice), 2, 0);
    detail::require_connected(net);
    net.set_terminals(index.at({0, 0}), index.at({xmax, 0}));
    return net;
}

enum class PatchMode { wired, free, periodic };

inline std::int64_t patch_low(std::size_t n) { return -static_cast<std::int64_t>(n / 2); }
inline std::int64_t patch_high(std::size_t n) { return static_cast<std::int64_t>((n - 1) / 2); }

/// Patch V_n = {-floor(n/2), ..., floor((n-1)/2)}^d of Z^d.
///  - free: induced subgraph on V_n;
///  - wired: V_n plus one extra vertex (the last index) standing for all of Z^d
///    outside V_n, with every lattice edge touching V_n;
///  - periodic: the torus of side n with centered lattice labels (ids and cuts
///    as in build_torus).
inline Network build_zd_patch(std::size_t n, int d, PatchMode mode)
{
    if (n < 2)
        throw InvalidInput("patch side must be at least 2");
    if (d < 1)
        throw InvalidInput("patch dimension must be at least 1");

    if (mode == PatchMode::periodic) {
        Network torus = build_torus(n, d);
        auto lattice = torus.lattice();
        const auto side = static_cast<std::int64_t>(n);
        for (auto& le : lattice)
            for (auto& c : le.tail)
                c = detail::wrap(c - patch_low(n), side) + patch_low(n);
        torus.set_lattice(std::move(lattice), d, n);
        return torus;
    }

    detail::check_budget(std::pow(static_cast<double>(n + 1), d) * d);
    const std::size_t inner = detail::ipow(n, d);
    const std::size_t outside = inner;
    const auto lo = patch_low(n);
    const auto hi = patch_high(n);

    auto inside = [&](const std::vector<std::int64_t>& x) {
        return std::all_of(x.begin(), x.end(), [&](auto c) { return c >= lo && c <= hi; });
    };
    auto index_of = [&](const std::vector<std::int64_t>& x) {
        std::size_t idx = 0;
        for (std::size_t a = x.size(); a-- > 0;)
            idx = idx * n + static_cast<std::size_t>(x[a] - lo);
        return idx;
    };

    std::vector<HalfEdge> edges;
    std::vector<LatticeEdge> lattice;
    for (std::size_t v = 0; v < inner; ++v) {
        auto x = detail::unflatten(v, n, d);
        for (auto& c : x)
            c += lo;
        for (int a = 0; a < d; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            auto y = x;
            ++y[ua];
            if (inside(y)) {
                edges.push_back({edges.size(), v, index_of(y)});
                lattice.push_back({x, a});
            } else if (mode == PatchMode::wired) {
                edges.push_back({edges.size(), v, outside});
                lattice.push_back({x, a});
            }
            if (mode == PatchMode::wired) {
                auto w = x;
                --w[ua];
                if (!inside(w)) {
                    edges.push_back({edges.size(), outside, v});
                    lattice.push_back({w, a});
                }
            }
        }
    }

    const auto kind = mode == PatchMode::wired ? NetworkKind::zd_wired : NetworkKind::zd_free;
    Network net(kind, mode == PatchMode::wired ? inner + 1 : inner, std::move(edges));
    net.set_lattice(std::move(lattice), d, n);
    detail::require_connected(net);
    return net;
}

/// m unit edges in series: vertices 0..m, terminals (0, m).
inline Network build_path(std::size_t m)
{
    if (m < 1)
        throw InvalidInput("path needs at least one edge");
    detail::check_budget(static_cast<double>(m));
    std::vector<HalfEdge> edges;
    for (std::size_t i = 0; i < m; ++i)
        edges.push_back({i, i, i + 1});
    Network net(NetworkKind::path, m + 1, std::move(edges));
    net.set_terminals(0, m);
    return net;
}

/// k parallel edges between vertex 0 and vertex 1.
inline Network build_parallel(std::size_t k)
{
    if (k < 1)
        throw InvalidInput("parallel bundle needs at least one edge");
    detail::check_budget(static_cast<double>(k));
    std::vector<HalfEdge> edges;
    for (std::size_t i = 0; i < k; ++i)
        edges.push_back({i, 0, 1});
    Network net(NetworkKind::custom, 2, std::move(edges));
    net.set_terminals(0, 1);
    return net;
}

/// Arbitrary multigraph from (tail, head) pairs; must be connected.
inline Network build_custom(std::size_t vertex_count, std::span<const std::pair<std::size_t, std::size_t>> ends)
{
    detail::check_budget(static_cast<double>(ends.size()));
    std::vector<HalfEdge> edges;
    for (const auto& [a, b] : ends)
        edges.push_back({edges.size(), a, b});
    Network net(NetworkKind::custom, vertex_count, std::move(edges));
    detail::require_connected(net);
    return net;
}

/// Maximal graph distance between an endpoint of e and an endpoint of e'.
inline std::size_t edge_distance(const Network& net, std::size_t e, std::size_t e2)
{
    const auto& a = net.edge(e);
    const auto& b = net.edge(e2);
    const Adjacency adj(net);
    std::size_t best = 0;
    for (auto x : {a.tail, a.head}) {
        const auto dist = adj.distances_from(x);
        best = std::max({best, dist[b.tail], dist[b.head]});
    }
    return best;
}

/// edge_distance(e, e') for every e', from two breadth-first searches.
inline std::vector<std::size_t> edge_distances_from(const Network& net, const Adjacency& adj, std::size_t e)
{
    const auto& base = net.edge(e);
    const auto d1 = adj.distances_from(base.tail);
    const auto d2 = adj.distances_from(base.head);
    std::vector<std::size_t> out(net.edge_count());
    for (const auto& f : net.edges())
        out[f.id] = std::max({d1[f.tail], d1[f.head], d2[f.tail], d2[f.head]});
    return out;
}

inline std::vector<std::size_t> edge_distances_from(const Network& net, std::size_t e)
{
    return edge_distances_from(net, Adjacency(net), e);
}

/// Full edge-distance matrix (row-major, edge_count^2); for small graphs.
inline std::vector<std::size_t> edge_distance_matrix(const Network& net)
{
    const Adjacency adj(net);
    std::vector<std::vector<std::size_t>> vdist(net.vertex_count());
    for (std::size_t v = 0; v < net.vertex_count(); ++v)
        vdist[v] = adj.distances_from(v);
    const auto m = net.edge_count();
    std::vector<std::size_t> out(m * m);
    for (const auto& a : net.edges())
        for (const auto& b : net.edges())
            out[a.id * m + b.id] = std::max({vdist[a.tail][b.tail], vdist[a.tail][b.head],
                                             vdist[a.head][b.tail], vdist[a.head][b.head]});
    return out;
}

/// diam(S) = max over e, e' in S of edge_distance(e, e'); 0 for the empty set.
inline std::size_t diameter(const Network& net, std::span<const std::size_t> edge_set)
{
    std::size_t best = 0;
    const Adjacency adj(net);
    for (auto e : edge_set) {
        const auto row = edge_distances_from(net, adj, e);
        for (auto f : edge_set)
            best = std::max(best, row[f]);
    }
    return best;
}

/// Image of a torus edge under the translation x -> x + shift.
inline std::size_t torus_translate_edge(const Network& net, std::size_t e, std::span<const std::int64_t> shift)
{
    if (net.kind() != NetworkKind::torus || net.lattice().empty())
        throw InvalidInput("translation requires a torus network");
    const auto n = net.side();
    const auto d = net.dimension();
    if (shift.size() != static_cast<std::size_t>(d))
        throw InvalidInput("shift dimension mismatch");
    const auto& le = net.lattice()[e];
    std::vector<std::int64_t> x(le.tail.size());
    for (std::size_t a = 0; a < x.size(); ++a)
        x[a] = detail::wrap(le.tail[a] + shift[a], static_cast<std::int64_t>(n));
    return detail::flatten(x, n) * static_cast<std::size_t>(d) + static_cast<std::size_t>(le.axis);
}

} // namespace resistnet

#endif // RESISTNET_NETGRAPH_HPP
