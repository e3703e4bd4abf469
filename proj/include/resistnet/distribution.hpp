#ifndef RESISTNET_DISTRIBUTION_HPP
#define RESISTNET_DISTRIBUTION_HPP

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "json_writer.hpp"

namespace resistnet
{

/// Law of a single edge resistance: finitely many atoms, or uniform on [a, b].
class EdgeDistribution
{
public:
    enum class Kind { discrete, uniform };

    struct Atom
    {
        double value;
        double prob;
    };

    static EdgeDistribution discrete(std::vector<Atom> atoms)
    {
        if (atoms.empty())
            throw InvalidInput("distribution needs at least one atom");
        double total = 0;
        for (const auto& a : atoms) {
            if (!std::isfinite(a.value) || a.value < 1.0)
                throw InvalidInput("atom " + format_real(a.value) + " is below 1; resistances must lie in [1, lambda]");
            if (!(a.prob >= 0.0 && a.prob <= 1.0))
                throw InvalidInput("atom probability " + format_real(a.prob) + " outside [0, 1]");
            total += a.prob;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw InvalidInput("atom probabilities sum to " + format_real(total) + ", not 1");
        EdgeDistribution d;
        d.kind_ = Kind::discrete;
        d.atoms_ = std::move(atoms);
        return d;
    }

    static EdgeDistribution constant(double v) { return discrete({{v, 1.0}}); }

    /// P(r = b) = p, P(r = a) = 1 - p.
    static EdgeDistribution bernoulli(double a, double b, double p) { return discrete({{a, 1.0 - p}, {b, p}}); }

    static EdgeDistribution uniform(double a, double b)
    {
        if (!std::isfinite(a) || !std::isfinite(b) || a < 1.0)
            throw InvalidInput("uniform law must lie in [1, lambda]");
        if (!(b > a))
            throw InvalidInput("uniform law needs b > a");
        EdgeDistribution d;
        d.kind_ = Kind::uniform;
        d.lo_ = a;
        d.hi_ = b;
        return d;
    }

    Kind kind() const noexcept { return kind_; }
    bool mc_only() const noexcept { return kind_ == Kind::uniform; }
    const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    std::size_t atom_count() const noexcept { return atoms_.size(); }
    double low() const noexcept { return lo_; }
    double high() const noexcept { return hi_; }

    double lambda() const
    {
        if (kind_ == Kind::uniform)
            return hi_;
        double m = 1.0;
        for (const auto& a : atoms_)
            m = std::max(m, a.value);
        return m;
    }

    double min_value() const
    {
        if (kind_ == Kind::uniform)
            return lo_;
        double m = atoms_.front().value;
        for (const auto& a : atoms_)
            m = std::min(m, a.value);
        return m;
    }

    double mean() const
    {
        if (kind_ == Kind::uniform)
            return 0.5 * (lo_ + hi_);
        double s = 0;
        for (const auto& a : atoms_)
            s += a.prob * a.value;
        return s;
    }

    /// m_p = (E|r - E r|^p)^{1/p}.
    double moment(double p) const
    {
        if (!(p > 0))
            throw InvalidInput("moment order must be positive");
        if (kind_ == Kind::uniform) {
            const double h = 0.5 * (hi_ - lo_);
            return h * std::pow(1.0 / (p + 1.0), 1.0 / p);
        }
        const double mu = mean();
        double s = 0;
        for (const auto& a : atoms_)
            s += a.prob * std::pow(std::abs(a.value - mu), p);
        return std::pow(s, 1.0 / p);
    }

    double variance() const
    {
        const double m2 = moment(2);
        return m2 * m2;
    }

    bool degenerate() const noexcept
    {
        if (kind_ == Kind::uniform)
            return false;
        std::size_t support = 0;
        for (const auto& a : atoms_)
            support += a.prob > 0 ? 1 : 0;
        return support < 2;
    }

    /// Inverse CDF at u in [0, 1).
    double sample(double u) const
    {
        if (kind_ == Kind::uniform)
            return lo_ + u * (hi_ - lo_);
        return atoms_[atom_index(u)].value;
    }

    std::size_t atom_index(double u) const
    {
        double c = 0;
        for (std::size_t k = 0; k < atoms_.size(); ++k) {
            c += atoms_[k].prob;
            if (u < c)
                return k;
        }
        for (std::size_t k = atoms_.size(); k-- > 0;)
            if (atoms_[k].prob > 0)
                return k;
        return atoms_.size() - 1;
    }

    std::string to_string() const
    {
        if (kind_ == Kind::uniform)
            return "uniform:" + format_real(lo_) + "," + format_real(hi_);
        std::string s = "discrete:";
        for (std::size_t k = 0; k < atoms_.size(); ++k) {
            if (k)
                s += ";";
            s += format_real(atoms_[k].value) + "@" + format_real(atoms_[k].prob);
        }
        return s;
    }

private:
    Kind kind_ = Kind::discrete;
    std::vector<Atom> atoms_;
    double lo_ = 1;
    double hi_ = 1;
};

namespace detail
{

inline std::vector<double> parse_reals(const std::string& body, const std::string& spec)
{
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        const auto comma = body.find(',', pos);
        const auto piece = body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        char* end = nullptr;
        const double x = std::strtod(piece.c_str(), &end);
        if (piece.empty() || end != piece.c_str() + piece.size())
            throw InvalidInput("malformed distribution '" + spec + "'");
        out.push_back(x);
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    return out;
}

} // namespace detail

/// `const:v`, `bernoulli:a,b,p` or `uniform:a,b`.
inline EdgeDistribution parse_distribution(const std::string& spec)
{
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw InvalidInput("malformed distribution '" + spec + "'");
    const auto name = spec.substr(0, colon);
    const auto args = detail::parse_reals(spec.substr(colon + 1), spec);
    if (name == "const" && args.size() == 1)
        return EdgeDistribution::constant(args[0]);
    if (name == "bernoulli" && args.size() == 3)
        return EdgeDistribution::bernoulli(args[0], args[1], args[2]);
    if (name == "uniform" && args.size() == 2)
        return EdgeDistribution::uniform(args[0], args[1]);
    throw InvalidInput("malformed distribution '" + spec + "'");
}

} // namespace resistnet

#endif // RESISTNET_DISTRIBUTION_HPP
