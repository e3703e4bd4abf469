#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "resistnet/flowsolve.hpp"
#include "resistnet/graph_io.hpp"
#include "resistnet/netgraph.hpp"

using namespace resistnet;

namespace
{

std::size_t count_loops(const Network& net)
{
    return static_cast<std::size_t>(
        std::count_if(net.edges().begin(), net.edges().end(), [](const HalfEdge& e) { return e.is_loop(); }));
}

Eigen::VectorXd laplacian_spectrum(const Network& net)
{
    const auto n = static_cast<Eigen::Index>(net.vertex_count());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : net.edges()) {
        if (e.is_loop())
            continue;
        const auto a = static_cast<Eigen::Index>(e.tail), b = static_cast<Eigen::Index>(e.head);
        L(a, a) += 1;
        L(b, b) += 1;
        L(a, b) -= 1;
        L(b, a) -= 1;
    }
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(L).eigenvalues();
}

} // namespace

TEST(Torus, ThreeByThreeCounts)
{
    const auto net = build_torus(3, 2);
    EXPECT_EQ(net.vertex_count(), 9u);
    EXPECT_EQ(net.edge_count(), 18u);
    ASSERT_EQ(net.cuts().size(), 3u);
    EXPECT_EQ(net.cuts()[0].size(), 3u);
}

TEST(Torus, OneDimensionalIsACycle)
{
    for (std::size_t n : {2u, 3u, 7u}) {
        const auto net = build_torus(n, 1);
        EXPECT_EQ(net.vertex_count(), n);
        EXPECT_EQ(net.edge_count(), n);
        ASSERT_EQ(net.cuts().size(), n);
        for (const auto& c : net.cuts())
            EXPECT_EQ(c.size(), 1u);
    }
}

TEST(Torus, SideTwoHasParallelPairs)
{
    const auto net = build_torus(2, 2);
    EXPECT_EQ(net.vertex_count(), 4u);
    EXPECT_EQ(net.edge_count(), 8u);
    std::map<std::pair<std::size_t, std::size_t>, int> mult;
    for (const auto& e : net.edges())
        ++mult[{std::min(e.tail, e.head), std::max(e.tail, e.head)}];
    EXPECT_EQ(mult.size(), 4u);
    for (const auto& [k, v] : mult)
        EXPECT_EQ(v, 2);
}

TEST(Torus, CutsPartitionDirectionOneEdges)
{
    for (auto [n, d] : {std::pair{3u, 2}, {4u, 3}, {5u, 2}}) {
        const auto net = build_torus(n, d);
        std::vector<int> seen(net.edge_count(), 0);
        for (const auto& c : net.cuts())
            for (auto e : c)
                ++seen[e];
        for (std::size_t e = 0; e < net.edge_count(); ++e)
            EXPECT_EQ(seen[e], net.lattice()[e].axis == 0 ? 1 : 0);
    }
}

TEST(Box, SideOneSquare)
{
    const auto net = build_box(1, 2);
    EXPECT_EQ(net.vertex_count(), 2u);
    EXPECT_EQ(count_loops(net), 2u);
    std::size_t between = 0;
    for (const auto& e : net.edges())
        between += (!e.is_loop() && std::set{e.tail, e.head} == std::set<std::size_t>{0, 1}) ? 1 : 0;
    EXPECT_EQ(between, 2u);
}

TEST(Box, SideTwoSquare)
{
    const auto net = build_box(2, 2);
    EXPECT_EQ(net.vertex_count(), 5u);
    EXPECT_EQ(net.terminals()->first, 0u);
    EXPECT_EQ(net.terminals()->second, 1u);
}

TEST(Box, UnitCube)
{
    const auto net = build_box(1, 3);
    std::size_t between = 0;
    for (const auto& e : net.edges())
        between += e.is_loop() ? 0 : 1;
    EXPECT_EQ(between, 4u);
    EXPECT_GT(count_loops(net), 0u);
    EXPECT_EQ(net.vertex_count(), 2u);
}

TEST(Box, RejectsBadSizes)
{
    EXPECT_THROW(build_box(0, 2), InvalidInput);
    EXPECT_THROW(build_box(3, 1), InvalidInput);
}

TEST(GluedTrees, DepthOne)
{
    const auto net = build_glued_trees(1);
    // Path 1-2-3 occupies vertices 0, 1, 2.
    EXPECT_EQ(net.edge(0).tail, 0u);
    EXPECT_EQ(net.edge(0).head, 1u);
    EXPECT_EQ(net.edge(1).tail, 1u);
    EXPECT_EQ(net.edge(1).head, 2u);
    EXPECT_NO_THROW(net.tagged("e_2"));
    EXPECT_NO_THROW(net.tagged("e'_2"));
    EXPECT_THROW(net.tagged("e_4"), InvalidInput);
    EXPECT_EQ(net.terminals()->first, 0u);
    EXPECT_EQ(net.terminals()->second, 2u);
}

TEST(GluedTrees, TaggedPairDistances)
{
    const auto net = build_glued_trees(2);
    EXPECT_EQ(edge_distance(net, net.tagged("e_2"), net.tagged("e'_2")), 3u);
    EXPECT_EQ(edge_distance(net, net.tagged("e_4"), net.tagged("e'_4")), 5u);
    const auto big = build_glued_trees(5);
    for (std::size_t k = 1; k <= 5; ++k) {
        const auto s = std::to_string(2 * k);
        EXPECT_EQ(edge_distance(big, big.tagged("e_" + s), big.tagged("e'_" + s)), 2 * k + 1);
    }
}

// T_k on its own: the component of root x once path edges and bridges are
// removed, relabeled so x is vertex 0. Returns the network and the far root.
std::pair<Network, std::size_t> tree_pair(const Network& net, std::size_t K, std::size_t root, std::size_t far)
{
    std::set<std::size_t> cut;
    for (std::size_t j = 0; j < 2 * K; ++j)
        cut.insert(j);
    for (std::size_t k = 1; k <= K; ++k)
        cut.insert(net.tagged("e'_" + std::to_string(2 * k)));
    std::map<std::size_t, std::size_t> label{{root, 0}};
    std::set<std::size_t> seen;
    std::vector<std::size_t> stack{root};
    std::vector<HalfEdge> edges;
    while (!stack.empty()) {
        const auto x = stack.back();
        stack.pop_back();
        for (const auto& e : net.edges()) {
            if (cut.count(e.id) || (e.tail != x && e.head != x) || !seen.insert(e.id).second)
                continue;
            const auto y = e.tail == x ? e.head : e.tail;
            if (label.emplace(y, label.size()).second)
                stack.push_back(y);
            edges.push_back({edges.size(), label[e.tail], label[e.head]});
        }
    }
    const auto far_label = label.at(far);
    return {Network(NetworkKind::custom, label.size(), std::move(edges)), far_label};
}

// Root-to-root resistance of T_k alone is 2 (1 - 2^-k): the bound 1 holds only for k = 1.
TEST(GluedTrees, RootToRootResistance)
{
    const std::size_t K = 4;
    const auto net = build_glued_trees(K);
    for (std::size_t k = 1; k <= K; ++k) {
        const auto far = net.edge(net.tagged("e'_" + std::to_string(2 * k))).tail;
        const auto [t, far_label] = tree_pair(net, K, 2 * k - 1, far);
        EXPECT_EQ(t.edge_count(), 2 * ((std::size_t{2} << k) - 2));
        const std::vector<double> ones(t.edge_count(), 1.0);
        const double r = minimal_current(t, ResistanceVector::constant(t.edge_count(), 1.0), 0, far_label).resistance;
        EXPECT_NEAR(r, 2 * (1 - std::pow(2.0, -static_cast<double>(k))), 1e-9);
        EXPECT_NEAR(r, oracle::point_current(t, ones, 0, far_label).energy, 1e-9);
        if (k == 1)
            EXPECT_LE(r, 1 + 1e-12);
    }
}

TEST(Wedge, UnitExtent)
{
    const auto net = build_wedge(1.0 / 3.0, 1);
    EXPECT_EQ(net.vertex_count(), 7u);
    EXPECT_TRUE(is_connected(net));
}

TEST(Wedge, EmptyIsRejected) { EXPECT_THROW(build_wedge(1.0 / 3.0, 0), InvalidInput); }

TEST(Wedge, VertexCountMatchesEnumeration)
{
    std::size_t expected = 0;
    for (int x = -8; x <= 8; ++x) {
        int h = 0;
        while (std::pow(h + 1, 3) <= std::abs(x))
            ++h;
        expected += static_cast<std::size_t>(2 * h + 1);
    }
    const auto net = build_wedge(1.0 / 3.0, 8);
    EXPECT_EQ(net.vertex_count(), expected);
    EXPECT_TRUE(is_connected(net));
}

TEST(ZdPatch, WiredFreePeriodic)
{
    const auto wired = build_zd_patch(3, 2, PatchMode::wired);
    EXPECT_EQ(wired.vertex_count(), 10u);
    EXPECT_EQ(wired.edge_count(), 24u);

    const auto free = build_zd_patch(3, 2, PatchMode::free);
    EXPECT_EQ(free.vertex_count(), 9u);
    EXPECT_EQ(free.edge_count(), 12u);

    const auto per = build_zd_patch(3, 2, PatchMode::periodic);
    const auto torus = build_torus(3, 2);
    EXPECT_EQ(per.vertex_count(), torus.vertex_count());
    EXPECT_EQ(per.edge_count(), torus.edge_count());
    const auto a = laplacian_spectrum(per), b = laplacian_spectrum(torus);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        EXPECT_NEAR(a[i], b[i], 1e-10);
}

TEST(EdgeDistance, Basics)
{
    const auto path = build_path(3);
    EXPECT_EQ(edge_distance(path, 0, 1), 2u);
    EXPECT_EQ(edge_distance(path, 1, 1), 1u);
    EXPECT_EQ(edge_distance(path, 0, 2), 3u);
}

TEST(EdgeDistance, SymmetricAndTriangleBound)
{
    for (const auto& net : {build_torus(4, 2), build_box(3, 2), build_glued_trees(2), build_zd_patch(4, 2, PatchMode::wired)}) {
        const auto D = edge_distance_matrix(net);
        const auto m = net.edge_count();
        std::mt19937_64 gen(17);
        std::uniform_int_distribution<std::size_t> pick(0, m - 1);
        for (int t = 0; t < 300; ++t) {
            const auto a = pick(gen), b = pick(gen), c = pick(gen);
            EXPECT_EQ(D[a * m + b], D[b * m + a]);
            EXPECT_EQ(D[a * m + b], edge_distance(net, a, b));
            EXPECT_LE(D[a * m + c], D[a * m + b] + D[b * m + c] + 1);
        }
    }
}

TEST(EdgeDistance, DiameterOfSingletonIsOne)
{
    const auto net = build_torus(3, 2);
    const std::vector<std::size_t> one{4};
    EXPECT_EQ(diameter(net, one), 1u);
}

TEST(Builders, AllConnected)
{
    EXPECT_TRUE(is_connected(build_torus(5, 2)));
    EXPECT_TRUE(is_connected(build_box(3, 3)));
    EXPECT_TRUE(is_connected(build_glued_trees(3)));
    EXPECT_TRUE(is_connected(build_wedge(0.25, 20)));
    EXPECT_TRUE(is_connected(build_zd_patch(4, 3, PatchMode::wired)));
    EXPECT_TRUE(is_connected(build_zd_patch(4, 2, PatchMode::free)));
    EXPECT_TRUE(is_connected(build_path(4)));
    EXPECT_TRUE(is_connected(build_parallel(3)));
}

TEST(Builders, CustomRejectsDisconnected)
{
    const std::vector<std::pair<std::size_t, std::size_t>> ends{{0, 1}, {2, 3}};
    EXPECT_THROW(build_custom(4, ends), InvalidInput);
}

TEST(Builders, BudgetFromEnvironment)
{
    ::setenv("RESISTNET_BUDGET", "100", 1);
    EXPECT_THROW(build_torus(10, 2), BudgetExceeded);
    EXPECT_NO_THROW(build_torus(5, 2));
    ::unsetenv("RESISTNET_BUDGET");
    EXPECT_NO_THROW(build_torus(10, 2));
}

TEST(Torus, TranslationMapsCutsToCuts)
{
    const std::size_t n = 5;
    const auto net = build_torus(n, 2);
    std::vector<std::size_t> cut_of(net.edge_count(), n);
    for (std::size_t i = 0; i < n; ++i)
        for (auto e : net.cuts()[i])
            cut_of[e] = i;
    for (std::int64_t t : {1, 2, 4}) {
        const std::vector<std::int64_t> shift{t, 3};
        std::set<std::size_t> image;
        for (std::size_t e = 0; e < net.edge_count(); ++e) {
            const auto f = torus_translate_edge(net, e, shift);
            image.insert(f);
            EXPECT_EQ(net.lattice()[f].axis, net.lattice()[e].axis);
            if (cut_of[e] < n)
                EXPECT_EQ(cut_of[f], (cut_of[e] + static_cast<std::size_t>(t)) % n);
        }
        EXPECT_EQ(image.size(), net.edge_count());
    }
}

// Sourceless flows carry the same flux through every cut.
TEST(Torus, SourcelessFluxIsCutIndependent)
{
    const std::size_t n = 4;
    const auto net = build_torus(n, 2);
    std::mt19937_64 gen(5);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 5; ++trial) {
        const auto r = oracle::random_resistances(net.edge_count(), 2.0, 100 + trial);
        auto theta = torus_current(net, ResistanceVector(r, 2.0)).flow;
        theta *= z(gen);
        // plaquette circulations around random unit squares
        for (int k = 0; k < 10; ++k) {
            const auto v = std::uniform_int_distribution<std::size_t>(0, net.vertex_count() - 1)(gen);
            const double c = z(gen);
            const auto e0 = v * 2, e1 = v * 2 + 1;
            const auto x = net.edge(e0).head, y = net.edge(e1).head;
            theta[e0] += c;
            theta[x * 2 + 1] += c;
            theta[e1] -= c;
            theta[y * 2] -= c;
        }
        const auto div = divergence(net, theta);
        for (auto dv : div)
            ASSERT_NEAR(dv, 0.0, 1e-8);
        const auto diag = flow_diagnostics(net, ResistanceVector(r, 2.0), theta);
        for (std::size_t i = 1; i < n; ++i)
            EXPECT_NEAR(diag.flux_per_cut[i], diag.flux_per_cut[0], 1e-8);
    }
}

TEST(GraphIo, RoundTrip)
{
    for (const auto& net : {build_torus(3, 2), build_box(2, 2), build_glued_trees(2)}) {
        std::stringstream ss;
        write_graph(ss, net);
        const auto back = read_graph(ss);
        EXPECT_EQ(back.kind(), net.kind());
        ASSERT_EQ(back.edge_count(), net.edge_count());
        EXPECT_EQ(back.vertex_count(), net.vertex_count());
        for (std::size_t e = 0; e < net.edge_count(); ++e) {
            EXPECT_EQ(back.edge(e).tail, net.edge(e).tail);
            EXPECT_EQ(back.edge(e).head, net.edge(e).head);
        }
        EXPECT_EQ(back.cuts(), net.cuts());
        EXPECT_EQ(back.terminals(), net.terminals());
    }
}

TEST(GraphIo, ErrorsCarryLineNumbers)
{
    std::stringstream ss("vertices 2 edges 2 kind custom\n0 0 1\n1 0 7\n");
    try {
        read_graph(ss);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::stringstream bad_header("nodes 2\n");
    EXPECT_THROW(read_graph(bad_header), ParseError);
}
