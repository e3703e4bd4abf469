#ifndef RESISTNET_SENSITIVITY_HPP
#define RESISTNET_SENSITIVITY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "flowsolve.hpp"

namespace resistnet
{

/// Which resistance is being differentiated: point-to-point R^{u,v} or the
/// torus resistance R_n (unit flux through E_0).
struct ResistanceTarget
{
    enum class Mode { point, torus };
    Mode mode = Mode::point;
    std::size_t u = 0;
    std::size_t v = 0;

    static ResistanceTarget point(std::size_t u, std::size_t v) { return {Mode::point, u, v}; }
    static ResistanceTarget torus() { return {Mode::torus, 0, 0}; }
    static ResistanceTarget terminals(const Network& net)
    {
        if (!net.terminals())
            throw InvalidInput("network has no terminals");
        return point(net.terminals()->first, net.terminals()->second);
    }
};

/// The minimal flow defining the target resistance: i^{u,v}_r or i^{per}_{r,n}.
inline SolveReport target_current(const FlowSolver& solver, const ResistanceTarget& t)
{
    return t.mode == ResistanceTarget::Mode::torus ? solver.torus_current() : solver.minimal_current(t.u, t.v);
}

/// Unit current across a single edge: i^e_r (point mode) or j^e_{r,n} (torus mode).
inline SolveReport edge_unit_current(const FlowSolver& solver, ResistanceTarget::Mode mode, std::size_t e)
{
    if (mode == ResistanceTarget::Mode::torus)
        return solver.constrained_unit_current(e);
    const auto& he = solver.network().edge(e);
    return solver.minimal_current(he.tail, he.head);
}

/// e -> d R / d r(e) = i(e)^2.
inline std::vector<double> resistance_gradient(const Network& net, const ResistanceVector& r,
                                               const ResistanceTarget& t, SolverOptions options = {})
{
    const FlowSolver solver(net, r, options);
    const auto rep = target_current(solver, t);
    std::vector<double> g(net.edge_count());
    for (std::size_t e = 0; e < g.size(); ++e)
        g[e] = rep.flow[e] * rep.flow[e];
    return g;
}

/// e -> d i(e) / d r(e'), from (i(e') / r(e')) (unit_current^{e'} - chi_{e'}).
inline std::vector<double> current_derivative(const Network& net, const ResistanceVector& r,
                                              const ResistanceTarget& t, std::size_t e_prime,
                                              SolverOptions options = {})
{
    if (e_prime >= net.edge_count())
        throw InvalidInput("edge out of range");
    std::vector<double> out(net.edge_count(), 0.0);
    if (net.edge(e_prime).is_loop())
        return out;
    const FlowSolver solver(net, r, options);
    const auto main = target_current(solver, t);
    const auto unit = edge_unit_current(solver, t.mode, e_prime);
    const double scale = main.flow[e_prime] / r[e_prime];
    for (std::size_t e = 0; e < out.size(); ++e)
        out[e] = scale * (unit.flow[e] - (e == e_prime ? 1.0 : 0.0));
    return out;
}

struct DerivReport
{
    double analytic = 0;
    double numeric = 0;
    double abs_err = 0;
    double rel_err = 0;
};

inline constexpr double rel_err_floor = 1e-12;

inline DerivReport make_deriv_report(double analytic, double numeric, double scale)
{
    DerivReport d{analytic, numeric, std::abs(analytic - numeric), 0};
    d.rel_err = d.abs_err / std::max(scale, rel_err_floor);
    return d;
}

/// Per-edge gradient vs central differences of R computed by re-solving.
/// Relative errors are normalized by the largest gradient entry.
inline std::vector<DerivReport> check_gradient_fd(const Network& net, const ResistanceVector& r,
                                                  const ResistanceTarget& t, double h = 1e-4,
                                                  SolverOptions fd_options = {1e-13, 50, std::nullopt})
{
    const auto grad = resistance_gradient(net, r, t);
    double scale = 0;
    for (auto g : grad)
        scale = std::max(scale, std::abs(g));
    std::vector<DerivReport> out;
    for (std::size_t e = 0; e < net.edge_count(); ++e) {
        const auto rp = r.with(e, r[e] + h);
        const auto rm = r.with(e, r[e] - h);
        const double fp = target_current(FlowSolver(net, rp, fd_options), t).resistance;
        const double fm = target_current(FlowSolver(net, rm, fd_options), t).resistance;
        out.push_back(make_deriv_report(grad[e], (fp - fm) / (2 * h), scale));
    }
    return out;
}

/// Current derivative w.r.t. r(e') vs central differences of the flow.
/// Relative errors are normalized by the largest analytic entry.
inline std::vector<DerivReport> check_current_derivative_fd(const Network& net, const ResistanceVector& r,
                                                            const ResistanceTarget& t, std::size_t e_prime,
                                                            double h = 1e-4,
                                                            SolverOptions fd_options = {1e-13, 50, std::nullopt})
{
    const auto analytic = current_derivative(net, r, t, e_prime);
    const auto fp = target_current(FlowSolver(net, r.with(e_prime, r[e_prime] + h), fd_options), t).flow;
    const auto fm = target_current(FlowSolver(net, r.with(e_prime, r[e_prime] - h), fd_options), t).flow;
    double scale = 0;
    for (auto a : analytic)
        scale = std::max(scale, std::abs(a));
    std::vector<DerivReport> out;
    for (std::size_t e = 0; e < analytic.size(); ++e)
        out.push_back(make_deriv_report(analytic[e], (fp[e] - fm[e]) / (2 * h), scale));
    return out;
}

inline double max_rel_err(std::span<const DerivReport> reports)
{
    double m = 0;
    for (const auto& d : reports)
        m = std::max(m, d.rel_err);
    return m;
}

/// max over pairs of | u^e(e') / r(e) - u^{e'}(e) / r(e') |, u the single-edge unit current.
inline double check_reciprocity(const Network& net, const ResistanceVector& r,
                                std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                ResistanceTarget::Mode mode = ResistanceTarget::Mode::point,
                                SolverOptions options = {})
{
    const FlowSolver solver(net, r, options);
    double worst = 0;
    for (const auto& [e, f] : pairs) {
        if (net.edge(e).is_loop() || net.edge(f).is_loop())
            continue;
        const auto ue = edge_unit_current(solver, mode, e);
        const auto uf = edge_unit_current(solver, mode, f);
        worst = std::max(worst, std::abs(ue.flow[f] / r[e] - uf.flow[e] / r[f]));
    }
    return worst;
}

/// sum_{e'} (u^e(e'))^2 / r(e)^2 and its bound 1 / r(e).
inline std::pair<double, double> unit_current_sum_rule(const FlowSolver& solver, ResistanceTarget::Mode mode,
                                                       std::size_t e)
{
    const auto& r = solver.resistances();
    const auto u = edge_unit_current(solver, mode, e);
    double s = 0;
    for (auto x : u.flow.values())
        s += x * x;
    return {s / (r[e] * r[e]), 1.0 / r[e]};
}

struct MonotonicityReport
{
    std::vector<double> grid;
    std::vector<double> magnitude; ///< |i(e)| with r(e) set to each grid value
    /// min over consecutive grid points of |i|(x_k) - |i|(x_{k+1}); >= 0 when nonincreasing.
    double monotone_slack = 0;
    /// min over pairs x0 <= x1 of (x1/x0)|i|(x1) - |i|(x0); >= 0 when the ratio bound holds.
    double ratio_slack = 0;

    bool holds(double tol) const { return monotone_slack >= -tol && ratio_slack >= -tol; }
};

/// Sweeps r(e) over an ascending grid and checks
/// |i(x1)| <= |i(x0)| <= (x1/x0) |i(x1)| for x0 <= x1.
inline MonotonicityReport check_single_edge_monotonicity(const Network& net, const ResistanceVector& r,
                                                         const ResistanceTarget& t, std::size_t e,
                                                         std::span<const double> grid, SolverOptions options = {})
{
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw InvalidInput("grid must be sorted ascending");
    MonotonicityReport rep;
    rep.grid.assign(grid.begin(), grid.end());
    for (auto x : grid) {
        const auto rx = r.with(e, x);
        rep.magnitude.push_back(std::abs(target_current(FlowSolver(net, rx, options), t).flow[e]));
    }
    rep.monotone_slack = rep.ratio_slack = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < grid.size(); ++k)
        rep.monotone_slack = std::min(rep.monotone_slack, rep.magnitude[k] - rep.magnitude[k + 1]);
    for (std::size_t a = 0; a < grid.size(); ++a)
        for (std::size_t b = a; b < grid.size(); ++b)
            rep.ratio_slack =
                std::min(rep.ratio_slack, grid[b] / grid[a] * rep.magnitude[b] - rep.magnitude[a]);
    if (grid.size() < 2)
        rep.monotone_slack = 0;
    return rep;
}

struct MultiswapReport
{
    std::optional<double> ratio; ///< empty when degenerate
    double bound = 0;            ///< (2 + 4 Lambda^8 + 4 Lambda^4)^{|S|}
    bool degenerate = false;

    bool holds() const { return degenerate || *ratio <= bound; }
};

inline double multiswap_constant(double lambda, std::size_t set_size)
{
    const double l4 = std::pow(lambda, 4);
    return std::pow(2 + 4 * l4 * l4 + 4 * l4, static_cast<double>(set_size));
}

/// max_{e in S} i_{r^{S<-r'}}(e)^2 / sum_{e' in S} i_r(e')^2.
inline MultiswapReport check_multiswap_bound(const Network& net, const ResistanceVector& r,
                                             const ResistanceVector& r_prime, std::span<const std::size_t> edge_set,
                                             const ResistanceTarget& t, SolverOptions options = {})
{
    if (edge_set.size() > 8)
        throw InvalidInput("multi-swap check limited to |S| <= 8");
    if (r_prime.size() != r.size())
        throw InvalidInput("r and r' differ in size");
    const double lambda = std::max(r.lambda(), r_prime.lambda());

    auto swapped = r.values();
    for (auto e : edge_set)
        swapped.at(e) = r_prime[e];
    const ResistanceVector rs(std::move(swapped), lambda);

    const auto base = target_current(FlowSolver(net, r, options), t).flow;
    const auto after = target_current(FlowSolver(net, rs, options), t).flow;

    MultiswapReport rep;
    rep.bound = multiswap_constant(lambda, edge_set.size());
    double denom = 0;
    double numer = 0;
    for (auto e : edge_set) {
        denom += base[e] * base[e];
        numer = std::max(numer, after[e] * after[e]);
    }
    if (denom < 1e-18) {
        rep.degenerate = true;
        return rep;
    }
    rep.ratio = numer / denom;
    return rep;
}

} // namespace resistnet

#endif // RESISTNET_SENSITIVITY_HPP
