#include <bit>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "resistnet/walsh.hpp"

using namespace resistnet;

namespace
{

const auto bern = EdgeDistribution::bernoulli(1, 2, 0.5);

struct Pair
{
    Network net = build_parallel(2);
    ProductLaw law = iid(bern, 2);
    FunctionTable table;
    WalshDecomposition dec;
    Pair()
    {
        EnumerateOptions o;
        o.record_currents = true;
        table = enumerate_table(net, law, Functional::terminals(net), o);
        dec = decompose(table, law);
    }
};

// A table with arbitrary values on an arbitrary product law.
FunctionTable synthetic(const ProductLaw& law, std::uint64_t seed)
{
    FunctionTable t;
    t.edge_count = law.size();
    std::size_t total = 1;
    for (const auto& d : law) {
        t.radix.push_back(d.atom_count());
        total *= d.atom_count();
    }
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    t.values.resize(total);
    for (auto& v : t.values)
        v = z(gen);
    return t;
}

} // namespace

TEST(Enumerate, ParallelPairTable)
{
    const Pair p;
    const std::vector<double> expected{0.5, 2.0 / 3.0, 2.0 / 3.0, 1.0};
    ASSERT_EQ(p.table.values.size(), 4u);
    for (std::size_t x = 0; x < 4; ++x) {
        const auto d = oracle::digits(x, {2, 2});
        const double r1 = 1.0 + static_cast<double>(d[0]), r2 = 1.0 + static_cast<double>(d[1]);
        EXPECT_NEAR(p.table.values[x], oracle::parallel(r1, r2), 1e-12);
        EXPECT_NEAR(p.table.values[x], expected[x], 1e-12);
    }
}

TEST(Enumerate, SingleEdge)
{
    const auto net = build_path(1);
    const auto t = enumerate_table(net, bern, Functional::terminals(net));
    ASSERT_EQ(t.values.size(), 2u);
    EXPECT_NEAR(t.values[0], 1.0, 1e-12);
    EXPECT_NEAR(t.values[1], 2.0, 1e-12);
}

TEST(Enumerate, OneDimensionalTorus)
{
    const auto net = build_torus(3, 1);
    const auto t = enumerate_table(net, bern, Functional::torus());
    ASSERT_EQ(t.values.size(), 8u);
    for (std::size_t x = 0; x < 8; ++x) {
        const auto d = oracle::digits(x, {2, 2, 2});
        EXPECT_NEAR(t.values[x], 3.0 + static_cast<double>(d[0] + d[1] + d[2]), 1e-12);
    }
}

TEST(Enumerate, BudgetAndLawChecks)
{
    const auto net = build_torus(4, 2);
    EnumerateOptions o;
    o.budget = 1000;
    EXPECT_THROW(enumerate_table(net, bern, Functional::torus(), o), BudgetExceeded);
    EXPECT_THROW(enumerate_table(build_path(2), iid(bern, 3), Functional::point(0, 2)), InvalidInput);
    EXPECT_THROW(enumerate_table(build_path(2), EdgeDistribution::uniform(1, 2), Functional::point(0, 2)), InvalidInput);
}

TEST(Enumerate, WorkersDoNotChangeTheTable)
{
    const auto net = build_torus(2, 2);
    EnumerateOptions a, b;
    a.workers = 1;
    b.workers = 3;
    const auto ta = enumerate_table(net, bern, Functional::torus(), a);
    const auto tb = enumerate_table(net, bern, Functional::torus(), b);
    EXPECT_EQ(ta.values, tb.values);
}

TEST(Weights, MatchOracle)
{
    const ProductLaw law{bern, EdgeDistribution::discrete({{1, 0.2}, {1.5, 0.3}, {3, 0.5}}), EdgeDistribution::bernoulli(1, 4, 0.9)};
    const auto t = synthetic(law, 1);
    const auto w = configuration_weights(t, law);
    const auto ref = oracle::weights(law);
    for (std::size_t x = 0; x < w.size(); ++x)
        EXPECT_NEAR(w[x], ref[x], 1e-15);
}

TEST(Decompose, ParallelPairSpectrum)
{
    const Pair p;
    const auto& f = p.table.values;
    // oracle values first, then the closed fractions
    EXPECT_NEAR(oracle::component_norm_sq(f, p.law, 0b01), 9.0 / 576, 1e-15);
    EXPECT_NEAR(oracle::component_norm_sq(f, p.law, 0b10), 9.0 / 576, 1e-15);
    EXPECT_NEAR(oracle::component_norm_sq(f, p.law, 0b11), 1.0 / 576, 1e-15);
    EXPECT_NEAR(p.dec.mean(), 17.0 / 24, 1e-14);
    EXPECT_NEAR(p.dec.norm_sq(0b01), 9.0 / 576, 1e-14);
    EXPECT_NEAR(p.dec.norm_sq(0b10), 9.0 / 576, 1e-14);
    EXPECT_NEAR(p.dec.norm_sq(0b11), 1.0 / 576, 1e-14);
    EXPECT_NEAR(p.dec.total_variance(), 19.0 / 576, 1e-14);
    double ef2 = 0, ef = 0;
    for (std::size_t x = 0; x < 4; ++x) {
        ef2 += 0.25 * f[x] * f[x];
        ef += 0.25 * f[x];
    }
    EXPECT_NEAR(p.dec.total_variance(), ef2 - ef * ef, 1e-14);
}

TEST(Decompose, LevelWeightsAndInfluence)
{
    const Pair p;
    const auto w = p.dec.level_weights();
    EXPECT_NEAR(w[1], 18.0 / 576, 1e-14);
    EXPECT_NEAR(w[2], 1.0 / 576, 1e-14);
    EXPECT_NEAR(w[1] / p.dec.total_variance(), 18.0 / 19, 1e-12);
    EXPECT_NEAR(p.dec.influence(0), 9.0 / 576, 1e-14);
}

TEST(Decompose, AdditiveFunctionHasOnlyLevelOne)
{
    const ProductLaw law{bern, EdgeDistribution::discrete({{1, 0.2}, {1.5, 0.3}, {3, 0.5}}), bern, bern};
    auto t = synthetic(law, 2);
    const std::vector<double> a{0.3, -1.2, 2.0, 0.7};
    for (std::size_t x = 0; x < t.size(); ++x) {
        double s = 0;
        for (std::size_t e = 0; e < law.size(); ++e)
            s += a[e] * law[e].atoms()[t.digit(x, e)].value;
        t.values[x] = s;
    }
    const auto dec = decompose(t, law);
    const auto w = dec.level_weights();
    for (std::size_t k = 2; k < w.size(); ++k)
        EXPECT_NEAR(w[k], 0.0, 1e-14);
    const auto es = efron_stein_report(dec, t, law);
    ASSERT_TRUE(es.tightness_ratio.has_value());
    EXPECT_NEAR(*es.tightness_ratio, 1.0, 1e-12);
}

TEST(Decompose, ConstantFunction)
{
    const ProductLaw law = iid(bern, 3);
    auto t = synthetic(law, 3);
    std::fill(t.values.begin(), t.values.end(), 2.5);
    const auto dec = decompose(t, law);
    EXPECT_NEAR(dec.mean(), 2.5, 1e-14);
    for (std::uint64_t s = 1; s < 8; ++s)
        EXPECT_NEAR(dec.norm_sq(s), 0.0, 1e-28);
    EXPECT_FALSE(efron_stein_report(dec, t, law).tightness_ratio.has_value());
}

TEST(Decompose, MatchesConditionalExpectationOracle)
{
    const ProductLaw law{bern, EdgeDistribution::discrete({{1, 0.2}, {1.5, 0.3}, {3, 0.5}}), EdgeDistribution::bernoulli(1, 4, 0.9)};
    const auto t = synthetic(law, 4);
    const auto dec = decompose(t, law);
    for (std::uint64_t s = 0; s < 8; ++s)
        EXPECT_NEAR(dec.norm_sq(s), oracle::component_norm_sq(t.values, law, s), 1e-12);
    for (std::uint64_t s = 1; s < 8; ++s) {
        const auto c = component(t, law, s);
        const auto cs = component_spectral(dec, law, s);
        for (std::size_t x = 0; x < t.size(); ++x) {
            EXPECT_NEAR(c.at_configuration(t, x), oracle::component_at(t.values, law, s, x), 1e-12);
            EXPECT_NEAR(cs.at_configuration(t, x), oracle::component_at(t.values, law, s, x), 1e-12);
        }
    }
}

// Exact identities on a torus of side 2 (8 edges) and a synthetic 3-atom law.
TEST(Properties, ReconstructionOrthogonalityParsevalDelta)
{
    const auto net = build_torus(2, 2);
    const ProductLaw law = iid(bern, net.edge_count());
    const auto t = enumerate_table(net, law, Functional::torus());
    const auto dec = decompose(t, law);
    const auto w = configuration_weights(t, law);

    const auto rec = reconstruct_from_components(t, law);
    const auto rec2 = reconstruct(dec, law);
    for (std::size_t x = 0; x < t.size(); ++x) {
        EXPECT_NEAR(rec[x], t.values[x], 1e-12);
        EXPECT_NEAR(rec2[x], t.values[x], 1e-12);
    }

    std::mt19937_64 gen(6);
    std::uniform_int_distribution<std::size_t> edge(0, net.edge_count() - 1), size(1, 4);
    auto random_mask = [&] {
        std::uint64_t s = 0;
        for (std::size_t k = size(gen); k > 0; --k)
            s |= std::uint64_t{1} << edge(gen);
        return s;
    };
    for (int k = 0; k < 100;) {
        const auto a = random_mask(), b = random_mask();
        if (a == b)
            continue;
        EXPECT_NEAR(inner_product(component(t, law, a), component(t, law, b), law), 0.0, 1e-12);
        ++k;
    }

    double ef2 = 0, total = 0;
    for (std::size_t x = 0; x < t.size(); ++x)
        ef2 += w[x] * t.values[x] * t.values[x];
    for (auto v : dec.norms())
        total += v;
    EXPECT_NEAR(total, ef2, 1e-12);

    for (std::size_t e = 0; e < net.edge_count(); ++e)
        EXPECT_NEAR(delta_sq_direct(t, law, e, w), dec.delta_sq(e), 1e-12);
}

TEST(Properties, ThreeAtomLaw)
{
    const auto law = iid(EdgeDistribution::discrete({{1, 0.25}, {2, 0.5}, {3, 0.25}}), 5);
    const auto t = synthetic(law, 8);
    const auto dec = decompose(t, law);
    const auto rec = reconstruct_from_components(t, law);
    for (std::size_t x = 0; x < t.size(); ++x)
        EXPECT_NEAR(rec[x], t.values[x], 1e-12);
    const auto w = configuration_weights(t, law);
    for (std::size_t e = 0; e < 5; ++e)
        EXPECT_NEAR(delta_sq_direct(t, law, e, w), dec.delta_sq(e), 1e-12);
}

TEST(Properties, ChebyshevTailAndBracket)
{
    const auto net = build_torus(2, 2);
    const auto law = iid(bern, net.edge_count());
    EnumerateOptions o;
    o.record_currents = true;
    const auto t = enumerate_table(net, law, Functional::torus(), o);
    const auto dec = decompose(t, law);
    for (const auto& row : chebyshev_tails(dec))
        EXPECT_LE(row.tail, row.bound * (1 + 1e-12));
    for (const auto& row : delta_bracket(t, law))
        EXPECT_TRUE(row.holds());
}

TEST(DiameterTail, AtOneIsTheVariance)
{
    const Pair p;
    EXPECT_NEAR(diameter_tail(p.dec, p.net, 1), p.dec.total_variance(), 1e-15);
    EXPECT_NEAR(diameter_tail(p.dec, p.net, 2), 0.0, 1e-15);
}

TEST(DiameterTail, SubsetDiametersMatchDirect)
{
    const auto net = build_torus(2, 2);
    const auto diam = subset_diameters(net);
    for (std::uint64_t s : {1u, 3u, 5u, 0x81u, 0xF0u, 0xFFu}) {
        const auto edges = mask_edges(s);
        EXPECT_EQ(diam[s], diameter(net, edges));
    }
}

TEST(Influence, ConstantOnEdgeOrbits)
{
    const auto net = build_torus(3, 2);
    const auto law = iid(bern, net.edge_count());
    const auto t = enumerate_table(net, law, Functional::torus());
    const auto dec = decompose(t, law);
    std::vector<double> axis0, axis1;
    for (std::size_t e = 0; e < net.edge_count(); ++e)
        (net.lattice()[e].axis == 0 ? axis0 : axis1).push_back(dec.influence(e));
    for (auto v : axis0)
        EXPECT_NEAR(v, axis0.front(), 1e-12);
    for (auto v : axis1)
        EXPECT_NEAR(v, axis1.front(), 1e-12);
}

TEST(Noise, Limits)
{
    const Pair p;
    EXPECT_NEAR(p.dec.noise_covariance(0), p.dec.total_variance(), 1e-15);
    EXPECT_NEAR(p.dec.noise_covariance(1), 0.0, 1e-15);
    EXPECT_NEAR(noise_covariance_direct(p.table, p.law, 0), p.dec.total_variance(), 1e-14);
    EXPECT_NEAR(noise_covariance_direct(p.table, p.law, 1), 0.0, 1e-14);
}

TEST(Noise, ParallelPairClosedForm)
{
    const Pair p;
    for (double eps : {0.1, 0.3, 0.7}) {
        const double expected = (1 - eps) * 18.0 / 576 + (1 - eps) * (1 - eps) / 576;
        EXPECT_NEAR(p.dec.noise_covariance(eps), expected, 1e-12);
        EXPECT_NEAR(noise_covariance_direct(p.table, p.law, eps), expected, 1e-12);
    }
}

TEST(EfronStein, ParallelPair)
{
    const Pair p;
    const auto es = efron_stein_report(p.dec, p.table, p.law);
    EXPECT_NEAR(es.weighted_sum, 20.0 / 576, 1e-14);
    EXPECT_NEAR(es.sum_delta_sq, es.sum_delta_sq_spectral, 1e-12);
    EXPECT_NEAR(*es.tightness_ratio, 20.0 / 19, 1e-12);
    EXPECT_NEAR(p.dec.weighted_sum(2), 22.0 / 576, 1e-14);
}

TEST(Singleton, SingleEdgeRatioIsOne)
{
    const auto net = build_path(1);
    const auto law = iid(bern, 1);
    EnumerateOptions o;
    o.record_currents = true;
    const auto t = enumerate_table(net, law, Functional::terminals(net), o);
    const auto rep = singleton_norm_bounds(t, law, 2);
    EXPECT_NEAR(rep.rows[0].norm_p, bern.moment(2), 1e-12);
    EXPECT_NEAR(*rep.rows[0].ratio, 1.0, 1e-12);
}

TEST(Singleton, SeriesRatioIsOne)
{
    const auto net = build_path(3);
    const auto law = iid(bern, 3);
    EnumerateOptions o;
    o.record_currents = true;
    const auto t = enumerate_table(net, law, Functional::terminals(net), o);
    const auto rep = singleton_norm_bounds(t, law, 2);
    for (const auto& row : rep.rows)
        EXPECT_NEAR(*row.ratio, 1.0, 1e-12);
    EXPECT_TRUE(rep.holds());
}

TEST(Singleton, ParallelPairExact)
{
    const Pair p;
    const auto rep = singleton_norm_bounds(p.table, p.law, 2);
    // E[i_1^2] over the four configurations, i_1 = r2 / (r1 + r2)
    double ei2 = 0;
    for (std::size_t x = 0; x < 4; ++x) {
        const auto d = oracle::digits(x, {2, 2});
        const double r1 = 1.0 + static_cast<double>(d[0]), r2 = 1.0 + static_cast<double>(d[1]);
        ei2 += 0.25 * (r2 / (r1 + r2)) * (r2 / (r1 + r2));
    }
    EXPECT_NEAR(rep.rows[0].norm_p, 3.0 / 24, 1e-12);
    EXPECT_NEAR(*rep.rows[0].ratio, (3.0 / 24) / (0.5 * ei2), 1e-12);
    EXPECT_TRUE(rep.holds());
    EXPECT_THROW(singleton_norm_bounds(p.table, p.law, 4), InvalidInput);
}

TEST(Spectrum, CsvHasOneRowPerSubset)
{
    const Pair p;
    std::ostringstream os;
    write_spectrum_csv(os, p.dec, subset_diameters(p.net));
    const auto s = os.str();
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 5);
    EXPECT_EQ(s.substr(0, s.find('\n')), "mask,level,diameter,norm_sq");
}
