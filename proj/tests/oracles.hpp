#ifndef RESISTNET_TESTS_ORACLES_HPP
#define RESISTNET_TESTS_ORACLES_HPP

// Reference computations that share no code with the library solvers.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "resistnet/distribution.hpp"
#include "resistnet/netgraph.hpp"

namespace oracle
{

struct DenseFlow
{
    std::vector<double> flow;
    double energy = 0;
};

/// Weighted Laplacian pseudo-inverse; potentials and current for a unit u -> v flow.
inline DenseFlow point_current(const resistnet::Network& net, const std::vector<double>& r, std::size_t u,
                               std::size_t v)
{
    const auto n = static_cast<Eigen::Index>(net.vertex_count());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : net.edges()) {
        if (e.is_loop())
            continue;
        const double c = 1.0 / r[e.id];
        const auto a = static_cast<Eigen::Index>(e.tail), b = static_cast<Eigen::Index>(e.head);
        L(a, a) += c;
        L(b, b) += c;
        L(a, b) -= c;
        L(b, a) -= c;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[static_cast<Eigen::Index>(u)] = 1;
    rhs[static_cast<Eigen::Index>(v)] = -1;
    const Eigen::VectorXd p = L.completeOrthogonalDecomposition().solve(rhs);
    DenseFlow out;
    out.flow.assign(net.edge_count(), 0.0);
    for (const auto& e : net.edges()) {
        if (e.is_loop())
            continue;
        out.flow[e.id] = (p[static_cast<Eigen::Index>(e.tail)] - p[static_cast<Eigen::Index>(e.head)]) / r[e.id];
        out.energy += r[e.id] * out.flow[e.id] * out.flow[e.id];
    }
    return out;
}

/// min sum r theta^2 subject to node constraints `div` and flux through cut 0
/// equal to `flux`, via the KKT system solved in the least-squares sense.
inline DenseFlow constrained_qp(const resistnet::Network& net, const std::vector<double>& r,
                                const std::vector<double>& div, double flux)
{
    const auto m = static_cast<Eigen::Index>(net.edge_count());
    const auto nv = static_cast<Eigen::Index>(net.vertex_count());
    const Eigen::Index rows = nv + 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, m);
    for (const auto& e : net.edges()) {
        const auto j = static_cast<Eigen::Index>(e.id);
        A(static_cast<Eigen::Index>(e.tail), j) += 1;
        A(static_cast<Eigen::Index>(e.head), j) -= 1;
    }
    for (auto e : net.cuts().front())
        A(nv, static_cast<Eigen::Index>(e)) = 1;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m + rows, m + rows);
    for (Eigen::Index j = 0; j < m; ++j)
        K(j, j) = 2 * r[static_cast<std::size_t>(j)];
    K.block(0, m, m, rows) = A.transpose();
    K.block(m, 0, rows, m) = A;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + rows);
    for (Eigen::Index x = 0; x < nv; ++x)
        rhs[m + x] = div[static_cast<std::size_t>(x)];
    rhs[m + nv] = flux;
    const Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
    DenseFlow out;
    out.flow.resize(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
        out.flow[static_cast<std::size_t>(j)] = sol[j];
        out.energy += r[static_cast<std::size_t>(j)] * sol[j] * sol[j];
    }
    return out;
}

inline DenseFlow torus_qp(const resistnet::Network& net, const std::vector<double>& r)
{
    return constrained_qp(net, r, std::vector<double>(net.vertex_count(), 0.0), 1.0);
}

inline double parallel(double a, double b) { return a * b / (a + b); }

/// Digits of a configuration, edge 0 fastest.
inline std::vector<std::size_t> digits(std::size_t config, const std::vector<std::size_t>& radix)
{
    std::vector<std::size_t> d(radix.size());
    for (std::size_t e = 0; e < radix.size(); ++e) {
        d[e] = config % radix[e];
        config /= radix[e];
    }
    return d;
}

inline std::vector<double> weights(const std::vector<resistnet::EdgeDistribution>& law)
{
    std::vector<std::size_t> radix;
    std::size_t total = 1;
    for (const auto& d : law) {
        radix.push_back(d.atom_count());
        total *= d.atom_count();
    }
    std::vector<double> w(total);
    for (std::size_t x = 0; x < total; ++x) {
        const auto dg = digits(x, radix);
        double p = 1;
        for (std::size_t e = 0; e < law.size(); ++e)
            p *= law[e].atoms()[dg[e]].prob;
        w[x] = p;
    }
    return w;
}

/// E[f | r_T = x_T] by summing over every configuration.
inline double conditional(const std::vector<double>& f, const std::vector<resistnet::EdgeDistribution>& law,
                          std::uint64_t T, std::size_t x)
{
    std::vector<std::size_t> radix;
    for (const auto& d : law)
        radix.push_back(d.atom_count());
    const auto w = weights(law);
    const auto dx = digits(x, radix);
    double num = 0, den = 0;
    for (std::size_t y = 0; y < f.size(); ++y) {
        const auto dy = digits(y, radix);
        bool match = true;
        for (std::size_t e = 0; e < law.size(); ++e)
            if ((T >> e & 1) && dy[e] != dx[e])
                match = false;
        if (match) {
            num += w[y] * f[y];
            den += w[y];
        }
    }
    return num / den;
}

/// f_S(x) = sum_{T subset S} (-1)^{|S \ T|} E[f | r_T](x).
inline double component_at(const std::vector<double>& f, const std::vector<resistnet::EdgeDistribution>& law,
                           std::uint64_t S, std::size_t x)
{
    double s = 0;
    for (std::uint64_t T = S;; T = (T - 1) & S) {
        const int sign = (std::popcount(S) - std::popcount(T)) % 2 ? -1 : 1;
        s += sign * conditional(f, law, T, x);
        if (T == 0)
            break;
    }
    return s;
}

/// ||f_S||^2 by enumeration.
inline double component_norm_sq(const std::vector<double>& f, const std::vector<resistnet::EdgeDistribution>& law,
                                std::uint64_t S)
{
    const auto w = weights(law);
    double s = 0;
    for (std::size_t x = 0; x < f.size(); ++x) {
        const double c = component_at(f, law, S, x);
        s += w[x] * c * c;
    }
    return s;
}

inline std::vector<double> random_resistances(std::size_t m, double lambda, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(1.0, lambda);
    std::vector<double> r(m);
    for (auto& x : r)
        x = u(gen);
    return r;
}

} // namespace oracle

#endif // RESISTNET_TESTS_ORACLES_HPP
