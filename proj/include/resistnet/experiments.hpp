#ifndef RESISTNET_EXPERIMENTS_HPP
#define RESISTNET_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "distribution.hpp"
#include "flowsolve.hpp"
#include "netgraph.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "walsh.hpp"

namespace resistnet
{

// Generator streams per (seed, replica, edge).
inline constexpr std::uint64_t stream_base = 0;
inline constexpr std::uint64_t stream_noise_coin = 1;
inline constexpr std::uint64_t stream_noise_value = 2;
inline constexpr std::uint64_t stream_swap_value = 3;
inline constexpr std::uint64_t stream_lattice = 4;
inline constexpr std::uint64_t stream_pick = 5;

inline Network build_family(const std::string& family, std::size_t n, int d)
{
    if (family == "torus")
        return build_torus(n, d);
    if (family == "box")
        return build_box(n, d);
    if (family == "path")
        return build_path(n);
    if (family == "glued_trees")
        return build_glued_trees(n);
    if (family == "parallel")
        return build_parallel(n);
    throw InvalidInput("unknown family '" + family + "'");
}

/// Torus resistance on tori, terminal-to-terminal resistance elsewhere.
inline Functional family_functional(const Network& net)
{
    if (net.kind() == NetworkKind::torus)
        return Functional::torus();
    return Functional::terminals(net);
}

inline ResistanceVector sample_resistances(const EdgeDistribution& dist, std::size_t edge_count, std::uint64_t seed,
                                           std::uint64_t replica)
{
    std::vector<double> r(edge_count);
    for (std::size_t e = 0; e < edge_count; ++e)
        r[e] = dist.sample(counter_uniform(seed, replica, e, stream_base));
    return {std::move(r), dist.lambda()};
}

inline ResistanceVector sample_resistances(const EdgeDistribution& dist, const Network& net, std::uint64_t seed,
                                           std::uint64_t replica)
{
    return sample_resistances(dist, net.edge_count(), seed, replica);
}

/// r^eps: each edge independently redrawn with probability eps. The coin and
/// the fresh value do not depend on eps, so resampled sets are nested in eps.
inline ResistanceVector noisy_resistances(const EdgeDistribution& dist, const ResistanceVector& r,
                                          std::uint64_t seed, std::uint64_t replica, double eps)
{
    auto v = r.values();
    for (std::size_t e = 0; e < v.size(); ++e)
        if (counter_uniform(seed, replica, e, stream_noise_coin) < eps)
            v[e] = dist.sample(counter_uniform(seed, replica, e, stream_noise_value));
    return {std::move(v), dist.lambda()};
}

/// r with edge e replaced by an independent copy.
inline ResistanceVector swap_one(const EdgeDistribution& dist, const ResistanceVector& r, std::uint64_t seed,
                                 std::uint64_t replica, std::size_t e)
{
    return r.with(e, dist.sample(counter_uniform(seed, replica, e, stream_swap_value)));
}

struct McConfig
{
    std::string family = "torus";
    int d = 2;
    std::vector<std::size_t> sizes;
    EdgeDistribution dist = EdgeDistribution::bernoulli(1, 2, 0.5);
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    SolverOptions solver{};
    /// Largest tolerated fraction of non-convergent replicas.
    double max_failure_fraction = 0.01;

    void validate() const
    {
        if (samples < 2)
            throw InvalidInput("samples must be at least 2");
        if (sizes.empty())
            throw InvalidInput("at least one size is required");
        for (std::size_t i = 1; i < sizes.size(); ++i)
            if (sizes[i] <= sizes[i - 1])
                throw InvalidInput("sizes must be strictly increasing");
    }
};

/// Runs fn(replica) for every replica; non-convergent replicas are dropped
/// and counted. Too many failures abort the whole run.
template <class T, class Fn>
std::vector<T> run_replicas(const McConfig& cfg, std::size_t& failed, Fn&& fn)
{
    std::vector<std::optional<T>> slots(cfg.samples);
    parallel_for(cfg.samples, cfg.workers, [&](std::size_t k) {
        try {
            slots[k] = fn(static_cast<std::uint64_t>(k));
        } catch (const NonConvergence&) {
            slots[k].reset();
        }
    });
    std::vector<T> out;
    failed = 0;
    for (auto& s : slots) {
        if (s)
            out.push_back(std::move(*s));
        else
            ++failed;
    }
    if (static_cast<double>(failed) > cfg.max_failure_fraction * static_cast<double>(cfg.samples))
        throw NonConvergence(std::to_string(failed) + " of " + std::to_string(cfg.samples) +
                                 " replicas failed to converge",
                             std::numeric_limits<double>::quiet_NaN(), 0);
    return out;
}

inline double evaluate_functional(const Network& net, const ResistanceVector& r, const Functional& f,
                                  const SolverOptions& opts)
{
    return f.evaluate(FlowSolver(net, r, opts)).resistance;
}

struct SizeRow
{
    std::size_t n = 0;
    std::size_t edges = 0;
    Estimate mean;
    Estimate variance; ///< se^2 is the variance-of-variance estimate
    std::size_t samples = 0;
    std::size_t failed = 0;
};

struct ScanReport
{
    std::string family;
    int d = 0;
    bool exploratory = false;
    std::vector<SizeRow> rows;
    std::optional<LogLogFit> fit;
    std::string fit_status;
    std::vector<std::vector<double>> raw;
};

inline ScanReport variance_scan(const McConfig& cfg)
{
    cfg.validate();
    ScanReport rep;
    rep.family = cfg.family;
    rep.d = cfg.d;
    rep.exploratory = cfg.family != "torus";
    for (auto n : cfg.sizes) {
        const auto net = build_family(cfg.family, n, cfg.d);
        const auto f = family_functional(net);
        SizeRow row;
        row.n = n;
        row.edges = net.edge_count();
        auto values = run_replicas<double>(cfg, row.failed, [&](std::uint64_t k) {
            return evaluate_functional(net, sample_resistances(cfg.dist, net, cfg.seed, k), f, cfg.solver);
        });
        row.samples = values.size();
        row.mean = jackknife_mean(values);
        row.variance = values.size() >= 3 ? jackknife_variance(values) : Estimate{sample_variance(values), 0};
        rep.rows.push_back(row);
        rep.raw.push_back(std::move(values));
    }

    if (rep.rows.size() < 3) {
        rep.fit_status = "too few sizes";
        return rep;
    }
    std::vector<double> xs, ys, se;
    for (const auto& r : rep.rows) {
        if (is_degenerate_variance(r.variance.value, r.mean.value)) {
            rep.fit_status = "degenerate";
            return rep;
        }
        xs.push_back(static_cast<double>(r.n));
        ys.push_back(r.variance.value);
        se.push_back(r.variance.se);
    }
    rep.fit = loglog_fit(xs, ys, se);
    rep.fit_status = "ok";
    return rep;
}

struct CltReport
{
    std::size_t n = 0;
    double ks_distance = 0;
    double mean = 0;
    double variance = 0;
    std::vector<double> standardized;
    std::size_t samples = 0;
    std::size_t failed = 0;
};

inline CltReport clt_test(const McConfig& cfg)
{
    cfg.validate();
    if (cfg.sizes.size() != 1)
        throw InvalidInput("the CLT test takes exactly one size");
    CltReport rep;
    rep.n = cfg.sizes.front();
    const auto net = build_family(cfg.family, rep.n, cfg.d);
    const auto f = family_functional(net);
    const auto values = run_replicas<double>(cfg, rep.failed, [&](std::uint64_t k) {
        return evaluate_functional(net, sample_resistances(cfg.dist, net, cfg.seed, k), f, cfg.solver);
    });
    rep.samples = values.size();
    rep.mean = sample_mean(values);
    rep.variance = sample_variance(values);
    rep.standardized = standardize(values);
    rep.ks_distance = ks_distance_normal(rep.standardized);
    return rep;
}

struct NoiseRow
{
    double eps = 0;
    Estimate correlation;
};

struct NoiseStep
{
    double eps_from = 0;
    double eps_to = 0;
    Estimate drop; ///< corr(eps_from) - corr(eps_to), paired jackknife
    bool consistent = false; ///< drop >= -2 se
};

struct NoiseReport
{
    std::size_t n = 0;
    std::vector<NoiseRow> rows;
    std::vector<NoiseStep> steps;
    bool monotone = false;
    std::size_t samples = 0;
    std::size_t failed = 0;
};

inline NoiseReport noise_correlation_scan(const McConfig& cfg, std::vector<double> eps_list)
{
    cfg.validate();
    if (cfg.sizes.size() != 1)
        throw InvalidInput("the noise scan takes exactly one size");
    for (auto e : eps_list)
        if (!(e >= 0 && e <= 1))
            throw InvalidInput("noise parameters must lie in [0, 1]");
    NoiseReport rep;
    rep.n = cfg.sizes.front();
    const auto net = build_family(cfg.family, rep.n, cfg.d);
    const auto f = family_functional(net);
    const auto rows = run_replicas<std::vector<double>>(cfg, rep.failed, [&](std::uint64_t k) {
        const auto r = sample_resistances(cfg.dist, net, cfg.seed, k);
        std::vector<double> out{evaluate_functional(net, r, f, cfg.solver)};
        for (auto eps : eps_list)
            out.push_back(evaluate_functional(net, noisy_resistances(cfg.dist, r, cfg.seed, k, eps), f, cfg.solver));
        return out;
    });
    rep.samples = rows.size();
    std::vector<double> base;
    for (const auto& r : rows)
        base.push_back(r[0]);
    std::vector<std::vector<double>> loo;
    std::vector<double> full;
    for (std::size_t j = 0; j < eps_list.size(); ++j) {
        std::vector<double> y;
        for (const auto& r : rows)
            y.push_back(r[j + 1]);
        loo.push_back(pearson_leave_one_out(base, y));
        full.push_back(pearson(base, y));
        rep.rows.push_back({eps_list[j], jackknife_from_loo(full.back(), loo.back())});
    }
    rep.monotone = true;
    for (std::size_t j = 0; j + 1 < eps_list.size(); ++j) {
        std::vector<double> diff(loo[j].size());
        for (std::size_t i = 0; i < diff.size(); ++i)
            diff[i] = loo[j][i] - loo[j + 1][i];
        NoiseStep s{eps_list[j], eps_list[j + 1], jackknife_from_loo(full[j] - full[j + 1], diff), false};
        s.consistent = s.drop.value >= -2 * s.drop.se;
        rep.monotone = rep.monotone && s.consistent;
        rep.steps.push_back(s);
    }
    return rep;
}

/// Energy of the single-edge unit current of e beyond edge distance L, for each L:
/// sum_{edge_distance(e', e) >= L} r(e') u(e')^2 with u = j^e on tori, i^e elsewhere.
inline std::vector<double> tail_energies(const FlowSolver& solver, std::span<const std::size_t> distances,
                                         std::size_t e, std::span<const std::size_t> L_list)
{
    const auto& net = solver.network();
    const auto& r = solver.resistances();
    const auto& he = net.edge(e);
    const auto u = net.kind() == NetworkKind::torus && net.has_cuts() ? solver.constrained_unit_current(e).flow
                                                                       : solver.minimal_current(he.tail, he.head).flow;
    std::vector<double> out;
    for (auto L : L_list) {
        double s = 0;
        for (std::size_t f = 0; f < u.size(); ++f)
            if (distances[f] >= L)
                s += r[f] * u[f] * u[f];
        out.push_back(s);
    }
    return out;
}

inline double tail_energy(const Network& net, const ResistanceVector& r, std::size_t e, std::size_t L,
                          SolverOptions opts = {})
{
    const auto dist = edge_distances_from(net, e);
    const std::size_t Ls[] = {L};
    return tail_energies(FlowSolver(net, r, opts), dist, e, Ls).front();
}

struct AlphaConfig
{
    EdgeDistribution dist = EdgeDistribution::bernoulli(1, 2, 0.5);
    std::size_t trials = 1;
    std::vector<std::size_t> base_edges; ///< empty: pick `edge_sample` edges
    std::size_t edge_sample = 5;
    std::vector<std::size_t> L_list;
    std::uint64_t seed = 0;
    bool adversarial = true;
    unsigned workers = 0;
    SolverOptions solver{};
};

struct AlphaReport
{
    std::vector<std::size_t> L;
    std::vector<double> alpha;             ///< max of sampled and adversarial
    std::vector<double> alpha_sampled;
    std::vector<double> alpha_adversarial;
    std::size_t configurations = 0;
    std::vector<std::size_t> base_edges;
    std::size_t failed = 0;
    double lambda = 1;
    /// The supremum over all r is not computable; these are lower estimates.
    static constexpr const char* estimate_kind = "lower estimate";

    bool nonincreasing() const
    {
        for (std::size_t k = 1; k < alpha.size(); ++k)
            if (L[k] >= L[k - 1] && alpha[k] > alpha[k - 1] * (1 + 1e-12))
                return false;
        return true;
    }
};

namespace detail
{

inline std::vector<std::size_t> pick_edges(const Network& net, std::size_t count, std::uint64_t seed)
{
    std::vector<std::size_t> out;
    std::vector<std::size_t> candidates;
    for (const auto& e : net.edges())
        if (!e.is_loop())
            candidates.push_back(e.id);
    for (std::size_t k = 0; k < candidates.size() && out.size() < count; ++k) {
        const auto j = k + static_cast<std::size_t>(counter_uniform(seed, 0, k, stream_pick) *
                                                    static_cast<double>(candidates.size() - k));
        std::swap(candidates[k], candidates[j]);
        out.push_back(candidates[k]);
    }
    return out;
}

/// Extreme-atom configurations around base edge e.
inline std::vector<std::vector<double>> adversarial_configurations(const Network& net, std::size_t e, double lo,
                                                                   double hi)
{
    const auto m = net.edge_count();
    std::vector<std::vector<double>> out;
    out.emplace_back(m, lo);
    out.emplace_back(m, hi);
    auto one = std::vector<double>(m, lo);
    one[e] = hi;
    out.push_back(one);
    one = std::vector<double>(m, hi);
    one[e] = lo;
    out.push_back(one);
    // Cheap near e, expensive far away, and the reverse.
    const auto dist = edge_distances_from(net, e);
    std::size_t maxd = 0;
    for (auto x : dist)
        if (x != unreachable)
            maxd = std::max(maxd, x);
    for (std::size_t cut = 2; cut <= maxd; cut *= 2) {
        std::vector<double> near_lo(m), near_hi(m);
        for (std::size_t f = 0; f < m; ++f) {
            near_lo[f] = dist[f] < cut ? lo : hi;
            near_hi[f] = dist[f] < cut ? hi : lo;
        }
        out.push_back(std::move(near_lo));
        out.push_back(std::move(near_hi));
    }
    if (!net.lattice().empty()) {
        const auto axis = net.lattice()[e].axis;
        std::vector<double> along(m), across(m);
        for (std::size_t f = 0; f < m; ++f) {
            along[f] = net.lattice()[f].axis == axis ? lo : hi;
            across[f] = net.lattice()[f].axis == axis ? hi : lo;
        }
        out.push_back(std::move(along));
        out.push_back(std::move(across));
    }
    return out;
}

} // namespace detail

inline AlphaReport alpha_scan(const Network& net, const AlphaConfig& cfg)
{
    if (cfg.trials < 1)
        throw InvalidInput("alpha scan needs at least one trial");
    if (cfg.L_list.empty())
        throw InvalidInput("alpha scan needs at least one L");
    AlphaReport rep;
    rep.L = cfg.L_list;
    rep.lambda = cfg.dist.lambda();
    rep.base_edges = cfg.base_edges.empty() ? detail::pick_edges(net, cfg.edge_sample, cfg.seed) : cfg.base_edges;
    for (auto e : rep.base_edges)
        if (e >= net.edge_count() || net.edge(e).is_loop())
            throw InvalidInput("base edge " + std::to_string(e) + " is out of range or a self-loop");

    const Adjacency adj(net);
    std::vector<std::vector<std::size_t>> distances;
    for (auto e : rep.base_edges)
        distances.push_back(edge_distances_from(net, adj, e));

    auto envelope = [&](const ResistanceVector& r) {
        std::vector<double> best(cfg.L_list.size(), 0.0);
        const FlowSolver solver(net, r, cfg.solver);
        for (std::size_t i = 0; i < rep.base_edges.size(); ++i) {
            const auto t = tail_energies(solver, distances[i], rep.base_edges[i], cfg.L_list);
            for (std::size_t k = 0; k < t.size(); ++k)
                best[k] = std::max(best[k], t[k]);
        }
        return best;
    };
    auto merge = [](std::vector<double>& into, const std::vector<double>& from) {
        for (std::size_t k = 0; k < into.size(); ++k)
            into[k] = std::max(into[k], from[k]);
    };

    McConfig mc;
    mc.samples = cfg.trials;
    mc.workers = cfg.workers;
    const auto sampled = run_replicas<std::vector<double>>(mc, rep.failed, [&](std::uint64_t k) {
        return envelope(sample_resistances(cfg.dist, net, cfg.seed, k));
    });
    rep.alpha_sampled.assign(cfg.L_list.size(), 0.0);
    for (const auto& s : sampled)
        merge(rep.alpha_sampled, s);
    rep.configurations = sampled.size();

    rep.alpha_adversarial.assign(cfg.L_list.size(), 0.0);
    if (cfg.adversarial) {
        const double lo = cfg.dist.min_value();
        const double hi = cfg.dist.lambda();
        for (auto e : rep.base_edges)
            for (auto& v : detail::adversarial_configurations(net, e, lo, hi)) {
                merge(rep.alpha_adversarial, envelope(ResistanceVector(std::move(v), hi)));
                ++rep.configurations;
            }
    }
    rep.alpha = rep.alpha_sampled;
    merge(rep.alpha, rep.alpha_adversarial);
    return rep;
}

struct DeltaEstimate
{
    std::size_t edge = 0;
    Estimate delta_sq; ///< ||Delta_e R||^2 = E[(R - R^{(e)})^2] / 2
};

struct InfluenceRow
{
    std::size_t n = 0;
    std::size_t vertices = 0;
    Estimate variance;
    std::vector<DeltaEstimate> deltas;
    double max_delta_sq = 0;
    double beta_proxy = 0;
    double beta_proxy_scaled = 0; ///< beta_proxy * |V|
    std::size_t samples = 0;
    std::size_t failed = 0;
};

struct InfluenceReport
{
    std::vector<InfluenceRow> rows;
    /// max / min of beta_proxy_scaled over sizes.
    double spread = 0;
};

inline std::vector<std::size_t> default_influence_edges(const Network& net)
{
    if (net.kind() == NetworkKind::torus) {
        std::vector<std::size_t> out;
        for (int a = 0; a < net.dimension(); ++a)
            out.push_back(static_cast<std::size_t>(a));
        return out;
    }
    std::vector<std::size_t> out;
    const auto m = net.edge_count();
    const std::size_t k = std::min<std::size_t>(m, 8);
    for (std::size_t i = 0; i < k; ++i)
        out.push_back(i * m / k);
    return out;
}

/// Per-edge resampling estimate of ||Delta_e R||^2 and beta_proxy = max / Var.
inline InfluenceReport influence_ratio(const McConfig& cfg, std::vector<std::size_t> edges = {})
{
    cfg.validate();
    InfluenceReport rep;
    for (auto n : cfg.sizes) {
        const auto net = build_family(cfg.family, n, cfg.d);
        const auto f = family_functional(net);
        const auto sample = edges.empty() ? default_influence_edges(net) : edges;
        for (auto e : sample)
            if (e >= net.edge_count())
                throw InvalidInput("influence edge out of range");
        InfluenceRow row;
        row.n = n;
        row.vertices = net.vertex_count();
        const auto rows = run_replicas<std::vector<double>>(cfg, row.failed, [&](std::uint64_t k) {
            const auto r = sample_resistances(cfg.dist, net, cfg.seed, k);
            const double base = evaluate_functional(net, r, f, cfg.solver);
            std::vector<double> out{base};
            for (auto e : sample) {
                const double d = base - evaluate_functional(net, swap_one(cfg.dist, r, cfg.seed, k, e), f, cfg.solver);
                out.push_back(0.5 * d * d);
            }
            return out;
        });
        row.samples = rows.size();
        std::vector<double> base;
        for (const auto& r : rows)
            base.push_back(r[0]);
        row.variance = jackknife_variance(base);
        for (std::size_t j = 0; j < sample.size(); ++j) {
            std::vector<double> v;
            for (const auto& r : rows)
                v.push_back(r[j + 1]);
            row.deltas.push_back({sample[j], jackknife_mean(v)});
            row.max_delta_sq = std::max(row.max_delta_sq, row.deltas.back().delta_sq.value);
        }
        if (is_degenerate_variance(row.variance.value, sample_mean(base)))
            throw InvalidInput("degenerate: zero variance");
        row.beta_proxy = row.max_delta_sq / row.variance.value;
        row.beta_proxy_scaled = row.beta_proxy * static_cast<double>(row.vertices);
        rep.rows.push_back(std::move(row));
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (const auto& r : rep.rows) {
        lo = std::min(lo, r.beta_proxy_scaled);
        hi = std::max(hi, r.beta_proxy_scaled);
    }
    rep.spread = hi / lo;
    return rep;
}

struct WehrLink
{
    std::string name;
    double lhs = 0;
    double rhs = 0;
    double se = 0;       ///< standard error of lhs - rhs (0 for exact links)
    bool exact = false;  ///< an inequality on the empirical measure
    bool asserted = true;
    bool holds = false;
};

struct WehrReport
{
    std::size_t n = 0;
    std::size_t edges = 0;
    double lambda = 1;
    Estimate variance;       ///< Q0
    Estimate sum_delta_sq;   ///< Q1
    double q2 = 0, q3 = 0, q4 = 0, q5 = 0;
    std::vector<WehrLink> links;
    std::size_t samples = 0;
    std::size_t failed = 0;

    bool holds() const
    {
        for (const auto& l : links)
            if (l.asserted && !l.holds)
                return false;
        return true;
    }
};

/// Var >= C^{-1} sum ||Delta_e R||^2 >= ... >= Lambda^{-6} |E|^{-1} inf m_2^2 E[R]^2,
/// every link evaluated on the same replicas.
inline WehrReport wehr_chain_check(const McConfig& cfg)
{
    cfg.validate();
    if (cfg.sizes.size() != 1)
        throw InvalidInput("the chain check takes exactly one size");
    WehrReport rep;
    rep.n = cfg.sizes.front();
    const auto net = build_family(cfg.family, rep.n, cfg.d);
    const auto f = family_functional(net);
    const auto m = net.edge_count();
    rep.edges = m;
    rep.lambda = cfg.dist.lambda();

    struct Replica
    {
        double R;
        double half_sq_diff;
        std::vector<double> flow;
    };
    const auto rows = run_replicas<Replica>(cfg, rep.failed, [&](std::uint64_t k) {
        const auto r = sample_resistances(cfg.dist, net, cfg.seed, k);
        const auto main = f.evaluate(FlowSolver(net, r, cfg.solver));
        const auto e = std::min(m - 1, static_cast<std::size_t>(counter_uniform(cfg.seed, k, 0, stream_pick) *
                                                                static_cast<double>(m)));
        const double d = main.resistance - evaluate_functional(net, swap_one(cfg.dist, r, cfg.seed, k, e), f, cfg.solver);
        return Replica{main.resistance, 0.5 * d * d * static_cast<double>(m), main.flow.values()};
    });
    rep.samples = rows.size();

    std::vector<double> R, q1;
    for (const auto& row : rows) {
        R.push_back(row.R);
        q1.push_back(row.half_sq_diff);
    }
    rep.variance = jackknife_variance(R);
    rep.sum_delta_sq = jackknife_mean(q1);

    const double m2 = cfg.dist.moment(2);
    const double l4 = std::pow(rep.lambda, 4);
    const auto ns = static_cast<double>(rows.size());
    std::vector<double> ei2(m, 0.0), ei4(m, 0.0);
    for (const auto& row : rows)
        for (std::size_t e = 0; e < m; ++e) {
            const double i2 = row.flow[e] * row.flow[e];
            ei2[e] += i2 / ns;
            ei4[e] += i2 * i2 / ns;
        }
    double sum_ei2 = 0;
    for (std::size_t e = 0; e < m; ++e) {
        rep.q2 += m2 * m2 * ei4[e] / l4;
        rep.q3 += m2 * m2 * ei2[e] * ei2[e] / l4;
        sum_ei2 += m2 * ei2[e];
    }
    rep.q4 = sum_ei2 * sum_ei2 / (l4 * static_cast<double>(m));
    const double mean_R = sample_mean(R);
    rep.q5 = m2 * m2 * mean_R * mean_R / (l4 * rep.lambda * rep.lambda * static_cast<double>(m));

    const double var = rep.variance.value;
    const double q1v = rep.sum_delta_sq.value;
    const double se01 = std::hypot(rep.variance.se, rep.sum_delta_sq.se);
    rep.links.push_back({"efron_stein: sum ||Delta_e R||^2 >= Var", q1v, var, se01, false, true, q1v >= var - 2 * se01});
    rep.links.push_back({"tightness: Var >= C^-1 sum ||Delta_e R||^2 (ratio reported)", var, q1v, se01, false, false,
                         var > 0});
    rep.links.push_back({"delta_lower: sum ||Delta_e R||^2 >= Lambda^-4 sum m2^2 E[i^4]", q1v, rep.q2,
                         rep.sum_delta_sq.se, false, true, q1v >= rep.q2 - 2 * rep.sum_delta_sq.se});
    const double tol = 1e-12;
    rep.links.push_back({"jensen: E[i^4] >= E[i^2]^2", rep.q2, rep.q3, 0, true, true, rep.q2 >= rep.q3 * (1 - tol)});
    rep.links.push_back({"cauchy_schwarz: sum a_e^2 >= (sum a_e)^2 / |E|", rep.q3, rep.q4, 0, true, true,
                         rep.q3 >= rep.q4 * (1 - tol)});
    rep.links.push_back({"energy: sum i^2 >= R / Lambda", rep.q4, rep.q5, 0, true, true, rep.q4 >= rep.q5 * (1 - tol)});
    rep.links.push_back({"final: Var >= Lambda^-6 |E|^-1 inf m2^2 E[R]^2", var, rep.q5, rep.variance.se, false, true,
                         var >= rep.q5 - 2 * rep.variance.se});
    return rep;
}

struct ConvergenceRow
{
    std::size_t n = 0;
    double max_diff = 0; ///< max over window edges of |j^e_n - i^e|
};

struct ConvergenceReport
{
    std::size_t reference_size = 0;
    std::size_t window = 0;
    std::vector<ConvergenceRow> rows;
};

namespace detail
{

inline std::uint64_t lattice_key(std::span<const std::int64_t> x)
{
    std::uint64_t h = 0x51ed270b27a3c1f5ULL;
    for (auto c : x)
        h = splitmix64(h ^ static_cast<std::uint64_t>(c));
    return h;
}

inline ResistanceVector lattice_resistances(const Network& net, const EdgeDistribution& dist, std::uint64_t seed)
{
    std::vector<double> r(net.edge_count());
    for (std::size_t e = 0; e < r.size(); ++e) {
        const auto& le = net.lattice()[e];
        r[e] = dist.sample(counter_uniform(seed, lattice_key(le.tail), static_cast<std::uint64_t>(le.axis),
                                           stream_lattice));
    }
    return {std::move(r), dist.lambda()};
}

inline std::map<std::pair<std::vector<std::int64_t>, int>, std::size_t> lattice_index(const Network& net)
{
    std::map<std::pair<std::vector<std::int64_t>, int>, std::size_t> idx;
    for (std::size_t e = 0; e < net.edge_count(); ++e)
        idx.emplace(std::make_pair(net.lattice()[e].tail, net.lattice()[e].axis), e);
    return idx;
}

} // namespace detail

/// j^e on periodic patches of growing side against i^e on a large wired
/// patch, one shared environment on Z^d, compared on the edges of the box
/// [-window, window]^d. e is the axis-0 edge at the origin.
inline ConvergenceReport convergence_diagnostic(int d, std::vector<std::size_t> periodic_sizes,
                                                std::size_t reference_size, std::size_t window,
                                                const EdgeDistribution& dist, std::uint64_t seed,
                                                SolverOptions opts = {})
{
    ConvergenceReport rep;
    rep.reference_size = reference_size;
    rep.window = window;
    const auto w = static_cast<std::int64_t>(window);

    const auto ref = build_zd_patch(reference_size, d, PatchMode::wired);
    const auto ref_r = detail::lattice_resistances(ref, dist, seed);
    const auto ref_idx = detail::lattice_index(ref);
    const std::vector<std::int64_t> origin(static_cast<std::size_t>(d), 0);
    const auto ref_e = ref_idx.at({origin, 0});
    const auto& he = ref.edge(ref_e);
    const auto ref_flow = FlowSolver(ref, ref_r, opts).minimal_current(he.tail, he.head).flow;

    std::vector<std::pair<std::vector<std::int64_t>, int>> window_edges;
    for (const auto& [key, e] : ref_idx) {
        const auto& [x, axis] = key;
        bool in = true;
        for (std::size_t a = 0; a < x.size(); ++a) {
            const auto top = x[a] + (static_cast<int>(a) == axis ? 1 : 0);
            in = in && x[a] >= -w && top <= w;
        }
        if (in)
            window_edges.push_back(key);
    }

    for (auto n : periodic_sizes) {
        if (patch_low(n) > -w - 1 || patch_high(n) < w + 1)
            throw InvalidInput("periodic patch smaller than the comparison window");
        const auto per = build_zd_patch(n, d, PatchMode::periodic);
        const auto r = detail::lattice_resistances(per, dist, seed);
        const auto idx = detail::lattice_index(per);
        const auto j = FlowSolver(per, r, opts).constrained_unit_current(idx.at({origin, 0})).flow;
        double worst = 0;
        for (const auto& key : window_edges)
            worst = std::max(worst, std::abs(j[idx.at(key)] - ref_flow[ref_idx.at(key)]));
        rep.rows.push_back({n, worst});
    }
    return rep;
}

} // namespace resistnet

#endif // RESISTNET_EXPERIMENTS_HPP
