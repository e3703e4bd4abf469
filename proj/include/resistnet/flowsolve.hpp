#ifndef RESISTNET_FLOWSOLVE_HPP
#define RESISTNET_FLOWSOLVE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include "errors.hpp"
#include "json_writer.hpp"
#include "netgraph.hpp"

namespace resistnet
{

/// Edge resistances r(e) indexed by half-edge id.
///
/// Elliptic vectors satisfy 1 <= r(e) <= lambda. Vectors built with
/// `positive()` only require r(e) > 0; they exist for perturbation analysis
/// (finite differences stepping slightly outside [1, lambda]).
class ResistanceVector
{
public:
    ResistanceVector() = default;

    ResistanceVector(std::vector<double> values, double lambda) : values_(std::move(values)), lambda_(lambda)
    {
        if (!(lambda >= 1.0) || !std::isfinite(lambda))
            throw InvalidInput("ellipticity bound must be a finite number >= 1");
        for (std::size_t e = 0; e < values_.size(); ++e)
            if (!(values_[e] >= 1.0 && values_[e] <= lambda))
                throw InvalidInput("resistance of edge " + std::to_string(e) + " = " + format_real(values_[e]) +
                                   " lies outside [1, " + format_real(lambda) + "]");
    }

    static ResistanceVector constant(std::size_t m, double value) { return {std::vector<double>(m, value), value}; }

    static ResistanceVector positive(std::vector<double> values)
    {
        double hi = 1.0;
        for (auto v : values) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw InvalidInput("resistances must be positive and finite");
            hi = std::max(hi, v);
        }
        ResistanceVector r;
        r.values_ = std::move(values);
        r.lambda_ = hi;
        r.elliptic_ = false;
        return r;
    }

    /// Copy with r(e) replaced by x; stays elliptic when x is in [1, lambda].
    ResistanceVector with(std::size_t e, double x) const
    {
        auto v = values_;
        v.at(e) = x;
        if (elliptic_ && x >= 1.0 && x <= lambda_)
            return {std::move(v), lambda_};
        return positive(std::move(v));
    }

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t e) const { return values_[e]; }
    const std::vector<double>& values() const noexcept { return values_; }
    double lambda() const noexcept { return lambda_; }
    bool elliptic() const noexcept { return elliptic_; }

private:
    std::vector<double> values_;
    double lambda_ = 1.0;
    bool elliptic_ = true;
};

/// Antisymmetric edge function stored on representatives: value(-e) = -value(e).
class Flow
{
public:
    Flow() = default;
    explicit Flow(std::size_t m) : values_(m, 0.0) {}
    explicit Flow(std::vector<double> values) : values_(std::move(values)) {}

    static Flow unit(std::size_t m, std::size_t e)
    {
        Flow f(m);
        f.values_.at(e) = 1.0;
        return f;
    }

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t e) const { return values_[e]; }
    double& operator[](std::size_t e) { return values_[e]; }
    /// Value on the representative (forward) or on its reversal.
    double at(std::size_t e, bool forward = true) const { return forward ? values_.at(e) : -values_.at(e); }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }

    Flow& operator+=(const Flow& o)
    {
        for (std::size_t e = 0; e < values_.size(); ++e)
            values_[e] += o.values_[e];
        return *this;
    }
    Flow& operator*=(double s)
    {
        for (auto& v : values_)
            v *= s;
        return *this;
    }
    friend Flow operator+(Flow a, const Flow& b) { return a += b; }
    friend Flow operator-(Flow a, const Flow& b)
    {
        for (std::size_t e = 0; e < a.values_.size(); ++e)
            a.values_[e] -= b.values_[e];
        return a;
    }
    friend Flow operator*(double s, Flow a) { return a *= s; }

private:
    std::vector<double> values_;
};

struct SolveReport
{
    Flow flow;
    double energy = 0;
    double resistance = 0;
    double residual = 0;
    std::size_t iterations = 0;
};

struct SolverOptions
{
    double tolerance = 1e-10;
    double max_iteration_factor = 20;
    /// Random initial guess instead of zero; used to probe uniqueness.
    std::optional<std::uint64_t> start_seed;
};

/// E_r(theta) = sum over representatives of r(e) theta(e)^2.
inline double energy(const ResistanceVector& r, const Flow& theta)
{
    double s = 0;
    for (std::size_t e = 0; e < theta.size(); ++e)
        s += r[e] * theta[e] * theta[e];
    return s;
}

/// d* theta(x): net outflow at x over both orientations of every edge.
inline std::vector<double> divergence(const Network& net, const Flow& theta)
{
    std::vector<double> div(net.vertex_count(), 0.0);
    for (const auto& e : net.edges()) {
        div[e.tail] += theta[e.id];
        div[e.head] -= theta[e.id];
    }
    return div;
}

struct FlowDiagnostics
{
    std::vector<double> divergence;
    std::vector<double> flux_per_cut;
    double energy = 0;
};

inline FlowDiagnostics flow_diagnostics(const Network& net, const ResistanceVector& r, const Flow& theta)
{
    FlowDiagnostics d;
    d.divergence = divergence(net, theta);
    for (const auto& cut : net.cuts()) {
        double s = 0;
        for (auto e : cut)
            s += theta[e];
        d.flux_per_cut.push_back(s);
    }
    d.energy = energy(r, theta);
    return d;
}

namespace detail
{

inline void check_sizes(const Network& net, const ResistanceVector& r)
{
    if (r.size() != net.edge_count())
        throw InvalidInput("resistance vector has " + std::to_string(r.size()) + " entries, network has " +
                           std::to_string(net.edge_count()) + " edges");
}

} // namespace detail

/// Weighted graph Laplacian with one pinned vertex, solved by
/// Jacobi-preconditioned conjugate gradients. Reusable across right-hand
/// sides for a fixed (network, resistances) pair.
class LaplacianSystem
{
public:
    struct Solution
    {
        std::vector<double> potential;
        double residual = 0;
        std::size_t iterations = 0;
    };

    LaplacianSystem(const Network& net, const ResistanceVector& r, SolverOptions options = {},
                    std::size_t pinned = 0)
        : net_(&net), r_(r), options_(options), pinned_(pinned)
    {
        detail::check_sizes(net, r);
        if (net.vertex_count() < 2)
            throw InvalidInput("network needs at least two vertices");
        if (pinned >= net.vertex_count())
            throw InvalidInput("pinned vertex out of range");

        const auto n = static_cast<Eigen::Index>(net.vertex_count() - 1);
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(4 * net.edge_count());
        for (const auto& e : net.edges()) {
            if (e.is_loop())
                continue;
            const double c = 1.0 / r[e.id];
            const auto a = unknown(e.tail);
            const auto b = unknown(e.head);
            if (a >= 0)
                triplets.emplace_back(a, a, c);
            if (b >= 0)
                triplets.emplace_back(b, b, c);
            if (a >= 0 && b >= 0) {
                triplets.emplace_back(a, b, -c);
                triplets.emplace_back(b, a, -c);
            }
        }
        matrix_.resize(n, n);
        matrix_.setFromTriplets(triplets.begin(), triplets.end());
        solver_.compute(matrix_);
        solver_.setTolerance(0.5 * options_.tolerance);
    }

    const Network& network() const noexcept { return *net_; }
    const ResistanceVector& resistances() const noexcept { return r_; }
    const SolverOptions& options() const noexcept { return options_; }

    /// Potentials v with d*(c dv) = div; div must sum to zero.
    Solution solve(std::span<const double> div) const
    {
        const auto n = matrix_.rows();
        Eigen::VectorXd b(n);
        for (std::size_t x = 0; x < net_->vertex_count(); ++x)
            if (auto k = unknown(x); k >= 0)
                b[k] = div[x];

        Solution sol;
        sol.potential.assign(net_->vertex_count(), 0.0);
        const double bnorm = b.norm();
        if (bnorm == 0.0)
            return sol;

        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        if (options_.start_seed) {
            std::mt19937_64 gen(*options_.start_seed);
            std::uniform_real_distribution<double> unif(-1.0, 1.0);
            for (Eigen::Index i = 0; i < n; ++i)
                x[i] = unif(gen);
        }

        const auto max_iter =
            static_cast<std::size_t>(std::max(1.0, options_.max_iteration_factor * static_cast<double>(n)));
        double residual = (b - matrix_ * x).norm() / bnorm;
        std::size_t used = 0;
        // CG's recursive residual can drift from the true one; restart until
        // the true residual meets the tolerance or the budget is spent.
        while (residual > options_.tolerance && used < max_iter) {
            solver_.setMaxIterations(static_cast<Eigen::Index>(max_iter - used));
            x = solver_.solveWithGuess(b, x);
            used += static_cast<std::size_t>(std::max<Eigen::Index>(solver_.iterations(), 1));
            residual = (b - matrix_ * x).norm() / bnorm;
        }
        if (residual > options_.tolerance)
            throw NonConvergence("conjugate gradient stalled at relative residual " + format_real(residual), residual,
                                 used);

        for (std::size_t v = 0; v < net_->vertex_count(); ++v)
            if (auto k = unknown(v); k >= 0)
                sol.potential[v] = x[k];
        sol.residual = residual;
        sol.iterations = used;
        return sol;
    }

    /// i = c (dv + battery), dv(e) = v(e_-) - v(e_+); self-loops carry nothing.
    Flow current(std::span<const double> potential, const Flow* battery = nullptr) const
    {
        Flow f(net_->edge_count());
        for (const auto& e : net_->edges()) {
            if (e.is_loop())
                continue;
            double drop = potential[e.tail] - potential[e.head];
            if (battery)
                drop += (*battery)[e.id];
            f[e.id] = drop / r_[e.id];
        }
        return f;
    }

private:
    Eigen::Index unknown(std::size_t v) const
    {
        if (v == pinned_)
            return -1;
        return static_cast<Eigen::Index>(v < pinned_ ? v : v - 1);
    }

    const Network* net_;
    ResistanceVector r_;
    SolverOptions options_;
    std::size_t pinned_;
    Eigen::SparseMatrix<double> matrix_;
    mutable Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                                     Eigen::DiagonalPreconditioner<double>>
        solver_;
};

/// All energy-minimization problems for one (network, resistances) pair.
/// The torus "battery" solution is computed once and cached.
class FlowSolver
{
public:
    FlowSolver(const Network& net, const ResistanceVector& r, SolverOptions options = {})
        : system_(net, r, options)
    {
    }

    const Network& network() const noexcept { return system_.network(); }
    const ResistanceVector& resistances() const noexcept { return system_.resistances(); }

    /// Unique minimal unit current from u to v.
    SolveReport minimal_current(std::size_t u, std::size_t v) const
    {
        const auto& net = network();
        if (u >= net.vertex_count() || v >= net.vertex_count())
            throw InvalidInput("terminal out of range");
        if (u == v)
            throw InvalidInput("minimal current needs distinct terminals");
        std::vector<double> div(net.vertex_count(), 0.0);
        div[u] = 1.0;
        div[v] = -1.0;
        return finish(system_.solve(div));
    }

    /// Energy minimizer over {theta : d* theta = d* theta0}.
    SolveReport prescribed_divergence_current(const Flow& theta0) const
    {
        if (theta0.size() != network().edge_count())
            throw InvalidInput("reference flow has the wrong number of edges");
        const auto div = divergence(network(), theta0);
        return finish(system_.solve(div));
    }

    /// Minimizer over sourceless flows with unit flux through the cut E_0.
    SolveReport torus_current() const
    {
        const auto& b = battery();
        auto flow = (1.0 / b.flux) * b.flow;
        return report(std::move(flow), b.residual, b.iterations);
    }

    /// Minimizer over unit flows from e_- to e_+ whose flux through E_0 equals 1{e in E_0}.
    SolveReport constrained_unit_current(std::size_t e) const
    {
        const auto& net = network();
        if (e >= net.edge_count())
            throw InvalidInput("edge out of range");
        const auto& he = net.edge(e);
        if (he.is_loop())
            throw InvalidInput("constrained unit current is undefined on a self-loop");
        const auto& b = battery();

        std::vector<double> div(net.vertex_count(), 0.0);
        div[he.tail] = 1.0;
        div[he.head] = -1.0;
        const auto point = system_.solve(div);
        auto flow = system_.current(point.potential);
        const double target = in_cut0(e) ? 1.0 : 0.0;
        const double lambda = (target - cut0_flux(flow)) / b.flux;
        flow += lambda * b.flow;
        return report(std::move(flow), std::max(point.residual, b.residual), point.iterations + b.iterations);
    }

private:
    struct Battery
    {
        Flow flow;
        double flux = 0;
        double residual = 0;
        std::size_t iterations = 0;
    };

    bool in_cut0(std::size_t e) const
    {
        const auto& cut = network().cuts().front();
        return std::find(cut.begin(), cut.end(), e) != cut.end();
    }

    double cut0_flux(const Flow& f) const
    {
        double s = 0;
        for (auto e : network().cuts().front())
            s += f[e];
        return s;
    }

    // Sourceless flow c (dv + 1_{E_0}) and its flux through E_0.
    const Battery& battery() const
    {
        if (battery_)
            return *battery_;
        const auto& net = network();
        if (!net.has_cuts())
            throw InvalidInput("torus solve requires a network with direction-1 cuts");
        Flow ones(net.edge_count());
        for (auto e : net.cuts().front())
            ones[e] = 1.0;
        const auto& r = resistances();
        Flow c_ones(net.edge_count());
        for (auto e : net.cuts().front())
            c_ones[e] = 1.0 / r[e];
        auto rhs = divergence(net, c_ones);
        for (auto& x : rhs)
            x = -x;
        const auto sol = system_.solve(rhs);
        Battery b;
        b.flow = system_.current(sol.potential, &ones);
        b.flux = cut0_flux(b.flow);
        b.residual = sol.residual;
        b.iterations = sol.iterations;
        if (!(std::abs(b.flux) > 0))
            throw InvalidInput("cut E_0 carries no flux; network is not a torus");
        battery_ = std::move(b);
        return *battery_;
    }

    SolveReport finish(const LaplacianSystem::Solution& sol) const
    {
        return report(system_.current(sol.potential), sol.residual, sol.iterations);
    }

    SolveReport report(Flow flow, double residual, std::size_t iterations) const
    {
        SolveReport rep;
        rep.energy = energy(resistances(), flow);
        rep.resistance = rep.energy;
        rep.flow = std::move(flow);
        rep.residual = residual;
        rep.iterations = iterations;
        return rep;
    }

    LaplacianSystem system_;
    mutable std::optional<Battery> battery_;
};

inline SolveReport minimal_current(const Network& net, const ResistanceVector& r, std::size_t u, std::size_t v,
                                   SolverOptions options = {})
{
    return FlowSolver(net, r, options).minimal_current(u, v);
}

inline SolveReport prescribed_divergence_current(const Network& net, const ResistanceVector& r, const Flow& theta0,
                                                 SolverOptions options = {})
{
    return FlowSolver(net, r, options).prescribed_divergence_current(theta0);
}

inline SolveReport torus_current(const Network& net, const ResistanceVector& r, SolverOptions options = {})
{
    return FlowSolver(net, r, options).torus_current();
}

inline SolveReport constrained_unit_current(const Network& net, const ResistanceVector& r, std::size_t e,
                                            SolverOptions options = {})
{
    return FlowSolver(net, r, options).constrained_unit_current(e);
}

inline void write_flow_csv(std::ostream& out, const Flow& flow)
{
    out << "edge_id,value\n";
    for (std::size_t e = 0; e < flow.size(); ++e)
        out << e << ',' << format_real(flow[e]) << '\n';
}

inline json to_json(const SolveReport& rep)
{
    json j;
    j["energy"] = rep.energy;
    j["resistance"] = rep.resistance;
    j["residual"] = rep.residual;
    j["iterations"] = rep.iterations;
    return j;
}

} // namespace resistnet

#endif // RESISTNET_FLOWSOLVE_HPP
