#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "resistnet/distribution.hpp"
#include "resistnet/parallel.hpp"
#include "resistnet/rng.hpp"
#include "resistnet/stats.hpp"

using namespace resistnet;

TEST(Distribution, BernoulliSyntax)
{
    const auto d = parse_distribution("bernoulli:1,2,0.5");
    ASSERT_EQ(d.atom_count(), 2u);
    EXPECT_EQ(d.atoms()[0].value, 1.0);
    EXPECT_EQ(d.atoms()[0].prob, 0.5);
    EXPECT_EQ(d.atoms()[1].value, 2.0);
    EXPECT_EQ(d.atoms()[1].prob, 0.5);
    EXPECT_EQ(d.lambda(), 2.0);
    EXPECT_FALSE(d.mc_only());
}

TEST(Distribution, ProbabilityRefersToSecondAtom)
{
    const auto d = parse_distribution("bernoulli:1,3,0.2");
    EXPECT_NEAR(d.mean(), 0.8 * 1 + 0.2 * 3, 1e-15);
}

TEST(Distribution, Uniform)
{
    const auto d = parse_distribution("uniform:1,3");
    EXPECT_TRUE(d.mc_only());
    EXPECT_EQ(d.lambda(), 3.0);
    EXPECT_NEAR(d.mean(), 2.0, 1e-15);
    EXPECT_NEAR(d.variance(), 4.0 / 12, 1e-15);
    EXPECT_NEAR(d.sample(0.25), 1.5, 1e-15);
}

TEST(Distribution, Rejections)
{
    EXPECT_THROW(parse_distribution("bernoulli:0.5,2,0.5"), InvalidInput);
    EXPECT_THROW(parse_distribution("bernoulli:1,2"), InvalidInput);
    EXPECT_THROW(parse_distribution("bernoulli:1,2,1.5"), InvalidInput);
    EXPECT_THROW(parse_distribution("uniform:2,2"), InvalidInput);
    EXPECT_THROW(parse_distribution("const:abc"), InvalidInput);
    EXPECT_THROW(parse_distribution("gamma:1"), InvalidInput);
    EXPECT_THROW(parse_distribution("const"), InvalidInput);
}

TEST(Distribution, MomentsAndSampling)
{
    const auto d = EdgeDistribution::discrete({{1, 0.25}, {2, 0.5}, {4, 0.25}});
    EXPECT_NEAR(d.mean(), 2.25, 1e-15);
    EXPECT_NEAR(d.moment(2) * d.moment(2), d.variance(), 1e-14);
    EXPECT_NEAR(d.moment(1), 0.25 * 1.25 + 0.5 * 0.25 + 0.25 * 1.75, 1e-14);
    EXPECT_EQ(d.sample(0.1), 1.0);
    EXPECT_EQ(d.sample(0.5), 2.0);
    EXPECT_EQ(d.sample(0.9), 4.0);
    EXPECT_TRUE(EdgeDistribution::constant(1.5).degenerate());
    EXPECT_EQ(EdgeDistribution::constant(1.5).variance(), 0.0);
}

TEST(Rng, CounterDrawsAreStable)
{
    EXPECT_EQ(counter_hash(1, 2, 3, 4), counter_hash(1, 2, 3, 4));
    EXPECT_NE(counter_hash(1, 2, 3, 4), counter_hash(1, 2, 3, 5));
    double lo = 1, hi = 0, sum = 0;
    for (std::uint64_t k = 0; k < 20000; ++k) {
        const double u = counter_uniform(7, 0, k);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    EXPECT_GE(lo, 0.0);
    EXPECT_LT(hi, 1.0);
    EXPECT_NEAR(sum / 20000, 0.5, 0.01);
}

TEST(Jackknife, MeanMatchesClassicalError)
{
    std::mt19937_64 gen(1);
    std::normal_distribution<double> z(3, 2);
    std::vector<double> x(500);
    for (auto& v : x)
        v = z(gen);
    const auto e = jackknife_mean(x);
    EXPECT_NEAR(e.value, sample_mean(x), 1e-12);
    EXPECT_NEAR(e.se, std::sqrt(sample_variance(x) / 500), 1e-12);
}

TEST(Jackknife, FastPathsMatchGeneric)
{
    std::mt19937_64 gen(2);
    std::exponential_distribution<double> z(1.0);
    std::vector<double> x(200), y(200);
    for (std::size_t i = 0; i < 200; ++i) {
        x[i] = z(gen);
        y[i] = x[i] + z(gen);
    }
    auto without = [](const std::vector<double>& v, std::size_t skip) {
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (i != skip)
                out.push_back(v[i]);
        return out;
    };
    const auto gv = jackknife(x.size(), [&](std::size_t s) { return sample_variance(without(x, s)); });
    const auto fv = jackknife_variance(x);
    EXPECT_NEAR(gv.value, fv.value, 1e-12);
    EXPECT_NEAR(gv.se, fv.se, 1e-10);

    const auto gp = jackknife(x.size(), [&](std::size_t s) { return pearson(without(x, s), without(y, s)); });
    const auto fp = jackknife_pearson(x, y);
    EXPECT_NEAR(gp.value, fp.value, 1e-12);
    EXPECT_NEAR(gp.se, fp.se, 1e-10);
}

TEST(Ks, KnownValues)
{
    const std::vector<double> one{0.0};
    EXPECT_NEAR(ks_distance_normal(one), 0.5, 1e-15);
    std::vector<double> far(10, 10.0);
    EXPECT_NEAR(ks_distance_normal(far), 1.0, 1e-12);
    EXPECT_THROW(standardize(std::vector<double>(5, 1.0)), InvalidInput);
}

TEST(LogLogFit, RecoversPowerLaw)
{
    const std::vector<double> x{8, 12, 16, 24, 32};
    std::vector<double> y, se;
    for (auto v : x) {
        y.push_back(3.0 * std::pow(v, -2.0));
        se.push_back(0.1 * y.back());
    }
    const auto fit = loglog_fit(x, y, se);
    EXPECT_NEAR(fit.slope, -2.0, 1e-12);
    EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-12);
    EXPECT_NEAR(fit.slope_se, 0.0, 1e-7);
    EXPECT_GT(fit.slope_se_propagated, 0.0);
    const std::vector<double> two{1, 2};
    EXPECT_THROW(loglog_fit(two, two), InvalidInput);
    const std::vector<double> xs{1, 2, 3}, zero{1, 0, 1};
    EXPECT_THROW(loglog_fit(xs, zero), InvalidInput);
}

TEST(Parallel, ChunksCoverEverythingOnce)
{
    for (unsigned w : {1u, 2u, 7u}) {
        std::vector<int> hits(1000, 0);
        parallel_for(hits.size(), w, [&](std::size_t i) { ++hits[i]; });
        for (auto h : hits)
            EXPECT_EQ(h, 1);
    }
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                     if (i == 4)
                         throw InvalidInput("boom");
                 }),
                 InvalidInput);
}
