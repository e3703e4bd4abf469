#ifndef RESISTNET_WALSH_HPP
#define RESISTNET_WALSH_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "distribution.hpp"
#include "flowsolve.hpp"
#include "json_writer.hpp"
#include "netgraph.hpp"
#include "parallel.hpp"
#include "stats.hpp"

namespace resistnet
{

/// Scalar functional of the resistances evaluated per configuration.
struct Functional
{
    enum class Kind { point_resistance, torus_resistance, prescribed_divergence };
    Kind kind = Kind::point_resistance;
    std::size_t u = 0;
    std::size_t v = 0;
    Flow theta0;

    static Functional point(std::size_t u, std::size_t v) { return {Kind::point_resistance, u, v, {}}; }
    static Functional terminals(const Network& net)
    {
        if (!net.terminals())
            throw InvalidInput("network has no terminals");
        return point(net.terminals()->first, net.terminals()->second);
    }
    static Functional torus() { return {Kind::torus_resistance, 0, 0, {}}; }
    static Functional divergence(Flow theta0) { return {Kind::prescribed_divergence, 0, 0, std::move(theta0)}; }

    std::string tag() const
    {
        switch (kind) {
        case Kind::point_resistance:
            return "point_resistance(" + std::to_string(u) + "," + std::to_string(v) + ")";
        case Kind::torus_resistance:
            return "torus_resistance";
        default:
            return "prescribed_divergence";
        }
    }

    SolveReport evaluate(const FlowSolver& solver) const
    {
        switch (kind) {
        case Kind::point_resistance:
            return solver.minimal_current(u, v);
        case Kind::torus_resistance:
            return solver.torus_current();
        default:
            return solver.prescribed_divergence_current(theta0);
        }
    }
};

/// Independent per-edge laws, one per half-edge representative.
using ProductLaw = std::vector<EdgeDistribution>;

inline ProductLaw iid(const EdgeDistribution& d, std::size_t m) { return ProductLaw(m, d); }

/// f tabulated over every configuration of a finite product law.
/// Configuration index: sum_e a_e * stride_e with stride_0 = 1.
struct FunctionTable
{
    std::size_t edge_count = 0;
    std::vector<std::size_t> radix;
    std::vector<double> values;
    std::string functional;
    /// Minimal flow per configuration (config-major), when recorded.
    std::vector<double> currents;

    std::size_t size() const noexcept { return values.size(); }
    bool has_currents() const noexcept { return !currents.empty(); }
    double current(std::size_t config, std::size_t e) const { return currents[config * edge_count + e]; }

    std::vector<std::size_t> strides() const
    {
        std::vector<std::size_t> s(radix.size());
        std::size_t acc = 1;
        for (std::size_t e = 0; e < radix.size(); ++e) {
            s[e] = acc;
            acc *= radix[e];
        }
        return s;
    }

    std::size_t digit(std::size_t config, std::size_t e) const { return config / strides()[e] % radix[e]; }
};

inline constexpr std::size_t default_table_budget = std::size_t{1} << 22;

/// Configuration-count budget for exact enumeration.
inline std::size_t table_budget() { return budget_from_env(default_table_budget); }

struct EnumerateOptions
{
    std::size_t budget = table_budget();
    bool record_currents = false;
    unsigned workers = 0;
    SolverOptions solver{};
};

namespace detail
{

inline void check_law(const ProductLaw& law, std::size_t m)
{
    if (law.size() != m)
        throw InvalidInput("product law has " + std::to_string(law.size()) + " factors for " + std::to_string(m) +
                           " edges");
    for (const auto& d : law) {
        if (d.mc_only())
            throw InvalidInput("exact enumeration needs discrete laws; continuous laws are Monte Carlo only");
        for (const auto& a : d.atoms())
            if (!(a.prob > 0))
                throw InvalidInput("exact enumeration needs atoms of positive probability");
    }
}

inline std::vector<std::size_t> radix_of(const ProductLaw& law)
{
    std::vector<std::size_t> k;
    for (const auto& d : law)
        k.push_back(d.atom_count());
    return k;
}

/// Advances a mixed-radix counter (digit 0 fastest).
inline void increment(std::vector<std::size_t>& digits, std::span<const std::size_t> radix)
{
    for (std::size_t e = 0; e < digits.size(); ++e) {
        if (++digits[e] < radix[e])
            return;
        digits[e] = 0;
    }
}

/// Calls fn(base) for the first index of every fiber along coordinate e.
template <class Fn>
void for_each_fiber(std::size_t total, std::size_t stride, std::size_t k, Fn&& fn)
{
    const std::size_t block = stride * k;
    for (std::size_t outer = 0; outer < total; outer += block)
        for (std::size_t inner = 0; inner < stride; ++inner)
            fn(outer + inner);
}

} // namespace detail

inline FunctionTable enumerate_table(const Network& net, const ProductLaw& law, const Functional& f,
                                     const EnumerateOptions& options = {})
{
    const auto m = net.edge_count();
    detail::check_law(law, m);
    double projected = 1;
    for (const auto& d : law)
        projected *= static_cast<double>(d.atom_count());
    if (projected > static_cast<double>(options.budget))
        throw BudgetExceeded("configuration space of " + format_real(projected) + " entries exceeds budget " +
                             std::to_string(options.budget));

    FunctionTable t;
    t.edge_count = m;
    t.radix = detail::radix_of(law);
    t.functional = f.tag();
    const auto total = static_cast<std::size_t>(projected);
    t.values.assign(total, 0.0);
    if (options.record_currents)
        t.currents.assign(total * m, 0.0);
    double lambda = 1;
    for (const auto& d : law)
        lambda = std::max(lambda, d.lambda());

    parallel_chunks(total, options.workers, [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> digits(m);
        for (std::size_t e = 0, rest = begin; e < m; ++e) {
            digits[e] = rest % t.radix[e];
            rest /= t.radix[e];
        }
        std::vector<double> r(m);
        for (std::size_t c = begin; c < end; ++c) {
            for (std::size_t e = 0; e < m; ++e)
                r[e] = law[e].atoms()[digits[e]].value;
            const ResistanceVector rv(r, lambda);
            try {
                const auto rep = f.evaluate(FlowSolver(net, rv, options.solver));
                t.values[c] = rep.resistance;
                if (options.record_currents)
                    std::copy(rep.flow.values().begin(), rep.flow.values().end(),
                              t.currents.begin() + static_cast<std::ptrdiff_t>(c * m));
            } catch (const NonConvergence& ex) {
                throw NonConvergence("configuration " + std::to_string(c) + ": " + ex.what(), ex.best_residual(),
                                     ex.iterations());
            }
            detail::increment(digits, t.radix);
        }
    });
    return t;
}

inline FunctionTable enumerate_table(const Network& net, const EdgeDistribution& dist, const Functional& f,
                                     const EnumerateOptions& options = {})
{
    return enumerate_table(net, iid(dist, net.edge_count()), f, options);
}

/// P(configuration) for every entry of the table.
inline std::vector<double> configuration_weights(const FunctionTable& t, const ProductLaw& law)
{
    std::vector<double> w(t.size(), 1.0);
    const auto strides = t.strides();
    for (std::size_t e = 0; e < t.radix.size(); ++e)
        detail::for_each_fiber(t.size(), strides[e], t.radix[e], [&](std::size_t base) {
            for (std::size_t a = 0; a < t.radix[e]; ++a)
                w[base + a * strides[e]] *= law[e].atoms()[a].prob;
        });
    return w;
}

inline double expectation(std::span<const double> weights, std::span<const double> f)
{
    CompensatedSum s;
    for (std::size_t i = 0; i < f.size(); ++i)
        s += weights[i] * f[i];
    return s.value();
}

/// Orthonormal basis of L^2(mu) for one coordinate: row 0 is sqrt(p),
/// completed by Gram-Schmidt. Basis function j is U[j][a] / sqrt(p_a).
inline std::vector<std::vector<double>> coordinate_basis(const EdgeDistribution& d)
{
    const auto k = d.atom_count();
    std::vector<std::vector<double>> u;
    std::vector<double> first(k);
    for (std::size_t a = 0; a < k; ++a)
        first[a] = std::sqrt(d.atoms()[a].prob);
    u.push_back(first);
    for (std::size_t c = 0; c < k && u.size() < k; ++c) {
        std::vector<double> v(k, 0.0);
        v[c] = 1.0;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : u) {
                double dot = 0;
                for (std::size_t a = 0; a < k; ++a)
                    dot += v[a] * b[a];
                for (std::size_t a = 0; a < k; ++a)
                    v[a] -= dot * b[a];
            }
        double norm = 0;
        for (auto x : v)
            norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-8)
            continue;
        for (auto& x : v)
            x /= norm;
        u.push_back(std::move(v));
    }
    return u;
}

/// Squared norms of all Efron-Stein components, from a probability-weighted
/// Walsh transform of the table.
class WalshDecomposition
{
public:
    std::size_t edge_count() const noexcept { return m_; }
    const std::vector<std::size_t>& radix() const noexcept { return radix_; }
    /// Squared norm of f_S, S given as a bitmask over edge ids.
    double norm_sq(std::uint64_t mask) const { return norms_.at(mask); }
    const std::vector<double>& norms() const noexcept { return norms_; }
    /// Coefficients in the product basis, indexed like the table.
    const std::vector<double>& coefficients() const noexcept { return coeffs_; }
    const std::vector<std::vector<std::vector<double>>>& bases() const noexcept { return bases_; }
    double mean() const noexcept { return mean_; }
    double total_variance() const noexcept { return variance_; }

    std::vector<double> level_weights() const
    {
        std::vector<CompensatedSum> acc(m_ + 1);
        for (std::uint64_t s = 0; s < norms_.size(); ++s)
            acc[static_cast<std::size_t>(std::popcount(s))] += norms_[s];
        std::vector<double> w;
        for (const auto& a : acc)
            w.push_back(a.value());
        return w;
    }

    double influence(std::size_t e) const { return norms_.at(std::uint64_t{1} << e); }

    /// sum_{S containing e} ||f_S||^2 = ||Delta_e f||^2.
    double delta_sq(std::size_t e) const
    {
        CompensatedSum s;
        for (std::uint64_t mask = 0; mask < norms_.size(); ++mask)
            if (mask >> e & 1)
                s += norms_[mask];
        return s.value();
    }

    /// sum_{S != empty} |S|^power ||f_S||^2.
    double weighted_sum(int power) const
    {
        CompensatedSum s;
        for (std::uint64_t mask = 1; mask < norms_.size(); ++mask)
            s += std::pow(static_cast<double>(std::popcount(mask)), power) * norms_[mask];
        return s.value();
    }

    /// Cov(f(r), f(r^eps)) = sum_{S != empty} (1 - eps)^{|S|} ||f_S||^2.
    double noise_covariance(double eps) const
    {
        if (!(eps >= 0 && eps <= 1))
            throw InvalidInput("noise parameter must lie in [0, 1]");
        CompensatedSum s;
        for (std::uint64_t mask = 1; mask < norms_.size(); ++mask)
            s += std::pow(1 - eps, std::popcount(mask)) * norms_[mask];
        return s.value();
    }

    friend WalshDecomposition decompose(const FunctionTable&, const ProductLaw&, unsigned);

private:
    std::size_t m_ = 0;
    std::vector<std::size_t> radix_;
    std::vector<double> norms_;
    std::vector<double> coeffs_;
    std::vector<std::vector<std::vector<double>>> bases_;
    double mean_ = 0;
    double variance_ = 0;
};

inline constexpr std::size_t max_decomposition_edges = 30;

inline WalshDecomposition decompose(const FunctionTable& t, const ProductLaw& law, unsigned workers = 0)
{
    if (law.size() != t.edge_count || t.radix != detail::radix_of(law) || t.values.empty())
        throw InvalidInput("table and law have inconsistent shapes");
    if (t.edge_count > max_decomposition_edges)
        throw BudgetExceeded("subset spectrum limited to " + std::to_string(max_decomposition_edges) + " edges");

    WalshDecomposition dec;
    dec.m_ = t.edge_count;
    dec.radix_ = t.radix;
    dec.coeffs_ = t.values;
    const auto strides = t.strides();
    const auto total = t.size();

    for (std::size_t e = 0; e < dec.m_; ++e) {
        const auto k = t.radix[e];
        auto basis = coordinate_basis(law[e]);
        std::vector<double> sqrt_p(k);
        for (std::size_t a = 0; a < k; ++a)
            sqrt_p[a] = std::sqrt(law[e].atoms()[a].prob);
        if (k > 1) {
            const std::size_t stride = strides[e];
            const std::size_t fibers = total / k;
            parallel_chunks(fibers, workers, [&](std::size_t begin, std::size_t end) {
                std::vector<double> in(k), out(k);
                for (std::size_t fi = begin; fi < end; ++fi) {
                    const std::size_t base = fi / stride * stride * k + fi % stride;
                    for (std::size_t a = 0; a < k; ++a)
                        in[a] = sqrt_p[a] * dec.coeffs_[base + a * stride];
                    for (std::size_t j = 0; j < k; ++j) {
                        double s = 0;
                        for (std::size_t a = 0; a < k; ++a)
                            s += basis[j][a] * in[a];
                        out[j] = s;
                    }
                    for (std::size_t j = 0; j < k; ++j)
                        dec.coeffs_[base + j * stride] = out[j];
                }
            });
        }
        dec.bases_.push_back(std::move(basis));
    }

    dec.norms_.assign(std::size_t{1} << dec.m_, 0.0);
    std::vector<std::size_t> digits(dec.m_, 0);
    std::uint64_t mask = 0;
    for (std::size_t c = 0; c < total; ++c) {
        dec.norms_[mask] += dec.coeffs_[c] * dec.coeffs_[c];
        for (std::size_t e = 0; e < dec.m_; ++e) {
            if (++digits[e] < t.radix[e]) {
                mask |= std::uint64_t{1} << e;
                break;
            }
            digits[e] = 0;
            mask &= ~(std::uint64_t{1} << e);
        }
    }
    dec.mean_ = dec.coeffs_[0];
    CompensatedSum variance;
    for (std::uint64_t s = 1; s < dec.norms_.size(); ++s)
        variance += dec.norms_[s];
    dec.variance_ = variance.value();
    return dec;
}

/// f rebuilt from every coefficient by the inverse transform.
inline std::vector<double> reconstruct(const WalshDecomposition& dec, const ProductLaw& law, unsigned workers = 0)
{
    auto f = dec.coefficients();
    const auto& radix = dec.radix();
    std::vector<std::size_t> strides(radix.size());
    for (std::size_t e = 0, acc = 1; e < radix.size(); acc *= radix[e], ++e)
        strides[e] = acc;
    for (std::size_t e = 0; e < radix.size(); ++e) {
        const auto k = radix[e];
        if (k == 1)
            continue;
        const auto& basis = dec.bases()[e];
        const std::size_t stride = strides[e];
        parallel_chunks(f.size() / k, workers, [&](std::size_t begin, std::size_t end) {
            std::vector<double> out(k);
            for (std::size_t fi = begin; fi < end; ++fi) {
                const std::size_t base = fi / stride * stride * k + fi % stride;
                for (std::size_t a = 0; a < k; ++a) {
                    double s = 0;
                    for (std::size_t j = 0; j < k; ++j)
                        s += basis[j][a] * f[base + j * stride];
                    out[a] = s / std::sqrt(law[e].atoms()[a].prob);
                }
                for (std::size_t a = 0; a < k; ++a)
                    f[base + a * stride] = out[a];
            }
        });
    }
    return f;
}

/// A component f_S stored as a table over the coordinates of S only
/// (first edge of S fastest).
struct Component
{
    std::uint64_t mask = 0;
    std::vector<std::size_t> edges;
    std::vector<std::size_t> radix;
    std::vector<double> values;

    double at_configuration(const FunctionTable& t, std::size_t config) const
    {
        const auto strides = t.strides();
        std::size_t idx = 0, acc = 1;
        for (std::size_t i = 0; i < edges.size(); ++i) {
            idx += config / strides[edges[i]] % t.radix[edges[i]] * acc;
            acc *= radix[i];
        }
        return values[idx];
    }
};

inline std::vector<std::size_t> mask_edges(std::uint64_t mask)
{
    std::vector<std::size_t> out;
    for (std::size_t e = 0; mask; ++e, mask >>= 1)
        if (mask & 1)
            out.push_back(e);
    return out;
}

inline constexpr std::size_t max_component_size = 4;

namespace detail
{

inline Component empty_component(std::uint64_t mask, const std::vector<std::size_t>& radix, bool capped = true)
{
    Component c;
    c.mask = mask;
    c.edges = mask_edges(mask);
    if (capped && c.edges.size() > max_component_size)
        throw InvalidInput("components are materialized only for |S| <= " + std::to_string(max_component_size));
    std::size_t size = 1;
    for (auto e : c.edges) {
        if (e >= radix.size())
            throw InvalidInput("subset mentions an edge outside the table");
        c.radix.push_back(radix[e]);
        size *= radix[e];
    }
    c.values.assign(size, 0.0);
    return c;
}

/// Replaces, in a small table over `edges`, coordinate i by its average.
inline void average_coordinate(std::vector<double>& g, std::span<const std::size_t> radix, std::size_t i,
                               const EdgeDistribution& d)
{
    std::size_t stride = 1;
    for (std::size_t j = 0; j < i; ++j)
        stride *= radix[j];
    const auto k = radix[i];
    for_each_fiber(g.size(), stride, k, [&](std::size_t base) {
        double s = 0;
        for (std::size_t a = 0; a < k; ++a)
            s += d.atoms()[a].prob * g[base + a * stride];
        for (std::size_t a = 0; a < k; ++a)
            g[base + a * stride] = s;
    });
}

inline Component conditional_expectation(const FunctionTable& t, std::uint64_t mask, std::span<const double> weights,
                                         bool capped)
{
    auto c = empty_component(mask, t.radix, capped);
    const auto strides = t.strides();
    std::vector<double> mass(c.values.size(), 0.0);
    for (std::size_t x = 0; x < t.size(); ++x) {
        std::size_t idx = 0, acc = 1;
        for (std::size_t i = 0; i < c.edges.size(); ++i) {
            idx += x / strides[c.edges[i]] % t.radix[c.edges[i]] * acc;
            acc *= c.radix[i];
        }
        c.values[idx] += weights[x] * t.values[x];
        mass[idx] += weights[x];
    }
    for (std::size_t i = 0; i < c.values.size(); ++i)
        c.values[i] /= mass[i];
    return c;
}

inline Component component(const FunctionTable& t, const ProductLaw& law, std::uint64_t mask,
                           std::span<const double> weights, bool capped)
{
    const auto g = conditional_expectation(t, mask, weights, capped);
    Component out = g;
    std::fill(out.values.begin(), out.values.end(), 0.0);
    const auto s = g.edges.size();
    for (std::uint64_t keep = 0; keep < (std::uint64_t{1} << s); ++keep) {
        auto gt = g.values;
        for (std::size_t i = 0; i < s; ++i)
            if (!(keep >> i & 1))
                average_coordinate(gt, g.radix, i, law[g.edges[i]]);
        const double sign = (s - static_cast<std::size_t>(std::popcount(keep))) % 2 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < gt.size(); ++i)
            out.values[i] += sign * gt[i];
    }
    return out;
}

} // namespace detail

/// E[f | r_S] as a table over the coordinates of S.
inline Component conditional_expectation(const FunctionTable& t, const ProductLaw& law, std::uint64_t mask)
{
    return detail::conditional_expectation(t, mask, configuration_weights(t, law), true);
}

/// f_S = sum_{T subset of S} (-1)^{|S \ T|} E[f | r_T].
inline Component component(const FunctionTable& t, const ProductLaw& law, std::uint64_t mask)
{
    return detail::component(t, law, mask, configuration_weights(t, law), true);
}

/// f_S from the coefficients whose support is exactly S.
inline Component component_spectral(const WalshDecomposition& dec, const ProductLaw& law, std::uint64_t mask)
{
    auto c = detail::empty_component(mask, dec.radix());
    std::vector<std::size_t> strides(dec.radix().size());
    for (std::size_t e = 0, acc = 1; e < strides.size(); acc *= dec.radix()[e], ++e)
        strides[e] = acc;

    std::vector<std::size_t> digits(c.edges.size(), 0);
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        bool full = true;
        std::size_t idx = 0;
        for (std::size_t j = 0; j < digits.size(); ++j) {
            full = full && digits[j] != 0;
            idx += digits[j] * strides[c.edges[j]];
        }
        c.values[i] = full ? dec.coefficients()[idx] : 0.0;
        detail::increment(digits, c.radix);
    }

    std::size_t stride = 1;
    for (std::size_t j = 0; j < c.edges.size(); ++j) {
        const auto k = c.radix[j];
        const auto& basis = dec.bases()[c.edges[j]];
        const auto& atoms = law[c.edges[j]].atoms();
        std::vector<double> out(k);
        detail::for_each_fiber(c.values.size(), stride, k, [&](std::size_t base) {
            for (std::size_t a = 0; a < k; ++a) {
                double s = 0;
                for (std::size_t q = 0; q < k; ++q)
                    s += basis[q][a] * c.values[base + q * stride];
                out[a] = s / std::sqrt(atoms[a].prob);
            }
            for (std::size_t a = 0; a < k; ++a)
                c.values[base + a * stride] = out[a];
        });
        stride *= k;
    }
    return c;
}

/// E[f_S f_S'] by enumerating the coordinates of S union S'.
inline double inner_product(const Component& a, const Component& b, const ProductLaw& law)
{
    const auto edges = mask_edges(a.mask | b.mask);
    std::vector<std::size_t> radix;
    for (auto e : edges)
        radix.push_back(law[e].atom_count());
    auto locate = [&](const Component& c, std::span<const std::size_t> digits) {
        std::size_t idx = 0, acc = 1;
        for (std::size_t i = 0; i < c.edges.size(); ++i) {
            const auto pos = static_cast<std::size_t>(std::find(edges.begin(), edges.end(), c.edges[i]) - edges.begin());
            idx += digits[pos] * acc;
            acc *= c.radix[i];
        }
        return idx;
    };
    std::size_t total = 1;
    for (auto k : radix)
        total *= k;
    std::vector<std::size_t> digits(edges.size(), 0);
    double s = 0;
    for (std::size_t i = 0; i < total; ++i) {
        double p = 1;
        for (std::size_t j = 0; j < edges.size(); ++j)
            p *= law[edges[j]].atoms()[digits[j]].prob;
        s += p * a.values[locate(a, digits)] * b.values[locate(b, digits)];
        detail::increment(digits, radix);
    }
    return s;
}

inline constexpr std::size_t max_reconstruction_edges = 12;

/// sum over all S of f_S, each from the conditional-expectation formula.
/// Costs 2^m table passes; meant for small graphs.
inline std::vector<double> reconstruct_from_components(const FunctionTable& t, const ProductLaw& law)
{
    if (t.edge_count > max_reconstruction_edges)
        throw BudgetExceeded("component-wise reconstruction limited to " + std::to_string(max_reconstruction_edges) +
                             " edges");
    const auto w = configuration_weights(t, law);
    std::vector<double> f(t.size(), 0.0);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << t.edge_count); ++mask) {
        const auto c = detail::component(t, law, mask, w, false);
        for (std::size_t x = 0; x < t.size(); ++x)
            f[x] += c.at_configuration(t, x);
    }
    return f;
}

/// L_e f: f with coordinate e averaged out.
inline std::vector<double> average_out(const FunctionTable& t, const ProductLaw& law, std::size_t e)
{
    auto g = t.values;
    const auto stride = t.strides()[e];
    const auto k = t.radix[e];
    detail::for_each_fiber(g.size(), stride, k, [&](std::size_t base) {
        double s = 0;
        for (std::size_t a = 0; a < k; ++a)
            s += law[e].atoms()[a].prob * g[base + a * stride];
        for (std::size_t a = 0; a < k; ++a)
            g[base + a * stride] = s;
    });
    return g;
}

/// ||Delta_e f||^2 = E[(f - L_e f)^2] by enumeration.
inline double delta_sq_direct(const FunctionTable& t, const ProductLaw& law, std::size_t e,
                              std::span<const double> weights)
{
    const auto g = average_out(t, law, e);
    CompensatedSum s;
    for (std::size_t x = 0; x < g.size(); ++x)
        s += weights[x] * (t.values[x] - g[x]) * (t.values[x] - g[x]);
    return s.value();
}

/// Cov(f(r), f(r^eps)) from the exact joint law: each coordinate is kept
/// with probability 1 - eps and resampled otherwise.
inline double noise_covariance_direct(const FunctionTable& t, const ProductLaw& law, double eps)
{
    if (!(eps >= 0 && eps <= 1))
        throw InvalidInput("noise parameter must lie in [0, 1]");
    auto g = t.values;
    const auto strides = t.strides();
    for (std::size_t e = 0; e < t.radix.size(); ++e) {
        const auto k = t.radix[e];
        detail::for_each_fiber(g.size(), strides[e], k, [&](std::size_t base) {
            double s = 0;
            for (std::size_t a = 0; a < k; ++a)
                s += law[e].atoms()[a].prob * g[base + a * strides[e]];
            for (std::size_t a = 0; a < k; ++a)
                g[base + a * strides[e]] = (1 - eps) * g[base + a * strides[e]] + eps * s;
        });
    }
    const auto w = configuration_weights(t, law);
    CompensatedSum efg, ef;
    for (std::size_t x = 0; x < g.size(); ++x) {
        efg += w[x] * t.values[x] * g[x];
        ef += w[x] * t.values[x];
    }
    return efg.value() - ef.value() * ef.value();
}

struct EfronSteinReport
{
    double sum_delta_sq = 0;          ///< sum_e ||Delta_e f||^2 by enumeration
    double sum_delta_sq_spectral = 0; ///< sum_S |S| ||f_S||^2
    double variance = 0;
    std::optional<double> tightness_ratio; ///< empty when degenerate
    double weighted_sum = 0;
    double weighted_sum2 = 0;
    std::vector<double> delta_sq; ///< per edge, by enumeration
};

inline EfronSteinReport efron_stein_report(const WalshDecomposition& dec, const FunctionTable& t,
                                           const ProductLaw& law)
{
    EfronSteinReport rep;
    const auto w = configuration_weights(t, law);
    for (std::size_t e = 0; e < t.edge_count; ++e) {
        rep.delta_sq.push_back(delta_sq_direct(t, law, e, w));
        rep.sum_delta_sq += rep.delta_sq.back();
    }
    rep.weighted_sum = dec.weighted_sum(1);
    rep.weighted_sum2 = dec.weighted_sum(2);
    rep.sum_delta_sq_spectral = rep.weighted_sum;
    rep.variance = dec.total_variance();
    if (!is_degenerate_variance(rep.variance, dec.mean()))
        rep.tightness_ratio = rep.sum_delta_sq / rep.variance;
    return rep;
}

/// diam(S) for every subset mask, built up from the lowest edge of S.
inline std::vector<std::uint32_t> subset_diameters(const Network& net)
{
    const auto m = net.edge_count();
    if (m > max_decomposition_edges)
        throw BudgetExceeded("subset diameters limited to " + std::to_string(max_decomposition_edges) + " edges");
    const auto dist = edge_distance_matrix(net);
    std::vector<std::uint32_t> diam(std::size_t{1} << m, 0);
    for (std::uint64_t mask = 1; mask < diam.size(); ++mask) {
        const auto low = static_cast<std::size_t>(std::countr_zero(mask));
        const auto rest = mask & (mask - 1);
        auto best = std::max<std::uint32_t>(diam[rest], static_cast<std::uint32_t>(dist[low * m + low]));
        for (auto r = rest; r; r &= r - 1)
            best = std::max(best, static_cast<std::uint32_t>(dist[low * m + static_cast<std::size_t>(std::countr_zero(r))]));
        diam[mask] = best;
    }
    return diam;
}

/// sum_{diam(S) >= L} ||f_S||^2 over nonempty S.
inline double diameter_tail(const WalshDecomposition& dec, std::span<const std::uint32_t> diameters, std::size_t L)
{
    CompensatedSum s;
    for (std::uint64_t mask = 1; mask < dec.norms().size(); ++mask)
        if (diameters[mask] >= L)
            s += dec.norms()[mask];
    return s.value();
}

inline double diameter_tail(const WalshDecomposition& dec, const Network& net, std::size_t L)
{
    return diameter_tail(dec, subset_diameters(net), L);
}

struct ChebyshevRow
{
    std::size_t k;
    double tail;  ///< sum_{|S| >= k} ||f_S||^2
    double bound; ///< rho / k^2 * Var
};

/// Level tails against the Chebyshev bound from rho = sum |S|^2 ||f_S||^2 / Var.
inline std::vector<ChebyshevRow> chebyshev_tails(const WalshDecomposition& dec)
{
    const auto w = dec.level_weights();
    const double var = dec.total_variance();
    const double rho = !is_degenerate_variance(var, dec.mean()) ? dec.weighted_sum(2) / var : 0.0;
    std::vector<ChebyshevRow> rows;
    double tail = 0;
    for (std::size_t k = w.size() - 1; k >= 1; --k) {
        tail += w[k];
        rows.push_back({k, tail, rho / static_cast<double>(k * k) * var});
    }
    std::reverse(rows.begin(), rows.end());
    return rows;
}

struct SingletonRow
{
    std::size_t edge = 0;
    double norm_p = 0;     ///< ||f_{e}||_p
    double m_p = 0;
    double mean_i_sq = 0;  ///< E[i(e)^2]
    std::optional<double> ratio;
    bool within = false;
};

struct SingletonReport
{
    double p = 2;
    double window_low = 0;
    double window_high = 0;
    std::vector<SingletonRow> rows;
    bool holds() const
    {
        for (const auto& r : rows)
            if (r.ratio && !r.within)
                return false;
        return true;
    }
};

/// K(lambda) = 2 lambda^2: ||f_{e}||_p lies between g_min m_p / 2 and
/// 2 g_max m_p with g = i(e)^2 varying by at most lambda^2 over r(e).
inline double singleton_window(double lambda) { return 2 * lambda * lambda; }

inline SingletonReport singleton_norm_bounds(const FunctionTable& t, const ProductLaw& law, double p)
{
    if (p != 1 && p != 2 && p != 3)
        throw InvalidInput("singleton norms are reported for p in {1, 2, 3}");
    if (!t.has_currents())
        throw InvalidInput("singleton bounds need a table with recorded currents");
    double lambda = 1;
    for (const auto& d : law)
        lambda = std::max(lambda, d.lambda());
    SingletonReport rep;
    rep.p = p;
    const double k = singleton_window(lambda);
    rep.window_low = 1 / k;
    rep.window_high = k;
    const auto w = configuration_weights(t, law);
    for (std::size_t e = 0; e < t.edge_count; ++e) {
        SingletonRow row;
        row.edge = e;
        const auto c = component(t, law, std::uint64_t{1} << e);
        double s = 0;
        for (std::size_t a = 0; a < c.values.size(); ++a)
            s += law[e].atoms()[a].prob * std::pow(std::abs(c.values[a]), p);
        row.norm_p = std::pow(s, 1 / p);
        row.m_p = law[e].moment(p);
        for (std::size_t x = 0; x < t.size(); ++x)
            row.mean_i_sq += w[x] * t.current(x, e) * t.current(x, e);
        const double denom = row.m_p * row.mean_i_sq;
        if (denom > 1e-300) {
            row.ratio = row.norm_p / denom;
            row.within = *row.ratio >= rep.window_low && *row.ratio <= rep.window_high;
        }
        rep.rows.push_back(row);
    }
    return rep;
}

struct DeltaBracketRow
{
    std::size_t edge = 0;
    double lower = 0; ///< m_2^2 / lambda^4 E[i^4]
    double delta_sq = 0;
    double upper = 0; ///< lambda^4 m_2^2 E[i^4]
    bool holds(double tol = 1e-12) const { return lower <= delta_sq + tol && delta_sq <= upper + tol; }
};

inline std::vector<DeltaBracketRow> delta_bracket(const FunctionTable& t, const ProductLaw& law)
{
    if (!t.has_currents())
        throw InvalidInput("bracket needs a table with recorded currents");
    double lambda = 1;
    for (const auto& d : law)
        lambda = std::max(lambda, d.lambda());
    const double l4 = std::pow(lambda, 4);
    const auto w = configuration_weights(t, law);
    std::vector<DeltaBracketRow> rows;
    for (std::size_t e = 0; e < t.edge_count; ++e) {
        double ei4 = 0;
        for (std::size_t x = 0; x < t.size(); ++x)
            ei4 += w[x] * std::pow(t.current(x, e), 4);
        const double m2sq = law[e].variance();
        rows.push_back({e, m2sq / l4 * ei4, delta_sq_direct(t, law, e, w), l4 * m2sq * ei4});
    }
    return rows;
}

inline void write_spectrum_csv(std::ostream& out, const WalshDecomposition& dec,
                               std::span<const std::uint32_t> diameters)
{
    out << "mask,level,diameter,norm_sq\n";
    for (std::uint64_t mask = 0; mask < dec.norms().size(); ++mask)
        out << mask << ',' << std::popcount(mask) << ',' << diameters[mask] << ',' << format_real(dec.norms()[mask])
            << '\n';
}

inline json walsh_summary(const WalshDecomposition& dec, const EfronSteinReport& es,
                          std::span<const std::uint32_t> diameters)
{
    json j;
    j["mean"] = dec.mean();
    j["variance"] = dec.total_variance();
    j["level_weights"] = dec.level_weights();
    std::uint32_t max_diam = 0;
    for (auto d : diameters)
        max_diam = std::max(max_diam, d);
    json tails = json::array();
    for (std::size_t L = 1; L <= max_diam; ++L)
        tails.push_back({{"L", L}, {"tail", diameter_tail(dec, diameters, L)}});
    j["diameter_tails"] = tails;

    std::vector<std::vector<double>> hist(dec.edge_count() + 1, std::vector<double>(max_diam + 1, 0.0));
    for (std::uint64_t mask = 1; mask < dec.norms().size(); ++mask)
        hist[static_cast<std::size_t>(std::popcount(mask))][diameters[mask]] += dec.norms()[mask];
    json h = json::array();
    for (std::size_t k = 1; k < hist.size(); ++k)
        for (std::size_t d = 0; d <= max_diam; ++d)
            if (hist[k][d] != 0)
                h.push_back({{"level", k}, {"diameter", d}, {"weight", hist[k][d]}});
    j["level_diameter_histogram"] = h;

    std::vector<double> infl;
    for (std::size_t e = 0; e < dec.edge_count(); ++e)
        infl.push_back(dec.influence(e));
    j["influences"] = infl;
    j["sum_delta_sq"] = es.sum_delta_sq;
    j["weighted_sum"] = es.weighted_sum;
    j["weighted_sum2"] = es.weighted_sum2;
    if (es.tightness_ratio)
        j["tightness_ratio"] = *es.tightness_ratio;
    else
        j["tightness_ratio"] = "degenerate";
    return j;
}

} // namespace resistnet

#endif // RESISTNET_WALSH_HPP
