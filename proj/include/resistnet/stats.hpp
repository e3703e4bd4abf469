#ifndef RESISTNET_STATS_HPP
#define RESISTNET_STATS_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "errors.hpp"

namespace resistnet
{

/// Neumaier-compensated running sum.
class CompensatedSum
{
public:
    void add(double x)
    {
        const double t = sum_ + x;
        c_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double x)
    {
        add(x);
        return *this;
    }
    double value() const { return sum_ + c_; }

private:
    double sum_ = 0;
    double c_ = 0;
};

/// Variance at rounding-noise level relative to the mean.
inline constexpr double degenerate_relative_variance = 1e-24;

inline bool is_degenerate_variance(double variance, double mean)
{
    return !(variance > degenerate_relative_variance * std::max(1.0, mean * mean));
}

struct Estimate
{
    double value = 0;
    double se = 0;
};

inline double sample_mean(std::span<const double> x)
{
    double s = 0;
    for (auto v : x)
        s += v;
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

/// Unbiased sample variance.
inline double sample_variance(std::span<const double> x)
{
    if (x.size() < 2)
        return 0.0;
    const double mu = sample_mean(x);
    double s = 0;
    for (auto v : x)
        s += (v - mu) * (v - mu);
    return s / static_cast<double>(x.size() - 1);
}

/// Jackknife from the full-sample statistic and the n leave-one-out values.
inline Estimate jackknife_from_loo(double full, std::span<const double> loo)
{
    const auto n = static_cast<double>(loo.size());
    const double mu = sample_mean(loo);
    double s = 0;
    for (auto v : loo)
        s += (v - mu) * (v - mu);
    return {full, std::sqrt((n - 1) / n * s)};
}

/// Jackknife for any statistic; `stat(skip)` evaluates the statistic with
/// sample `skip` removed (skip == n means no removal).
template <class Stat>
Estimate jackknife(std::size_t n, Stat&& stat)
{
    if (n < 2)
        throw InvalidInput("jackknife needs at least two samples");
    std::vector<double> loo(n);
    for (std::size_t i = 0; i < n; ++i)
        loo[i] = stat(i);
    return jackknife_from_loo(stat(n), loo);
}

inline Estimate jackknife_mean(std::span<const double> x)
{
    const auto n = static_cast<double>(x.size());
    double s = 0;
    for (auto v : x)
        s += v;
    std::vector<double> loo(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        loo[i] = (s - x[i]) / (n - 1);
    return jackknife_from_loo(s / n, loo);
}

inline Estimate jackknife_variance(std::span<const double> x)
{
    if (x.size() < 3)
        throw InvalidInput("variance jackknife needs at least three samples");
    const auto n = static_cast<double>(x.size());
    const double mu = sample_mean(x);
    double s1 = 0, s2 = 0;
    for (auto v : x) {
        s1 += v - mu;
        s2 += (v - mu) * (v - mu);
    }
    std::vector<double> loo(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - mu;
        const double a = s1 - d;
        const double b = s2 - d * d;
        loo[i] = (b - a * a / (n - 1)) / (n - 2);
    }
    return jackknife_from_loo(sample_variance(x), loo);
}

namespace detail
{

inline double pearson_from_sums(double n, double sx, double sy, double sxx, double syy, double sxy)
{
    const double cxy = sxy - sx * sy / n;
    const double cxx = sxx - sx * sx / n;
    const double cyy = syy - sy * sy / n;
    if (!(cxx > 0) || !(cyy > 0))
        return 0.0;
    return cxy / std::sqrt(cxx * cyy);
}

} // namespace detail

inline double pearson(std::span<const double> x, std::span<const double> y)
{
    const double mx = sample_mean(x), my = sample_mean(y);
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0) || !(syy > 0))
        return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

/// Leave-one-out Pearson correlations, from running sums.
inline std::vector<double> pearson_leave_one_out(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 3)
        throw InvalidInput("correlation needs paired samples of size >= 3");
    const double mx = sample_mean(x), my = sample_mean(y);
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = x[i] - mx, b = y[i] - my;
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    const auto n = static_cast<double>(x.size());
    std::vector<double> loo(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = x[i] - mx, b = y[i] - my;
        loo[i] = detail::pearson_from_sums(n - 1, sx - a, sy - b, sxx - a * a, syy - b * b, sxy - a * b);
    }
    return loo;
}

inline Estimate jackknife_pearson(std::span<const double> x, std::span<const double> y)
{
    return jackknife_from_loo(pearson(x, y), pearson_leave_one_out(x, y));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// sup_x |F_n(x) - Phi(x)| for an already standardized sample.
inline double ks_distance_normal(std::span<const double> z)
{
    std::vector<double> s(z.begin(), z.end());
    std::sort(s.begin(), s.end());
    const auto n = static_cast<double>(s.size());
    double d = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = normal_cdf(s[i]);
        d = std::max({d, (static_cast<double>(i) + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Standardizes by the sample's own mean and (unbiased) deviation.
inline std::vector<double> standardize(std::span<const double> x)
{
    const double mu = sample_mean(x);
    const double sd = std::sqrt(sample_variance(x));
    if (!(sd > 0))
        throw InvalidInput("sample has zero variance");
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        z[i] = (x[i] - mu) / sd;
    return z;
}

struct LogLogFit
{
    double slope = 0;
    double intercept = 0;
    double slope_se = 0;            ///< from regression residuals
    double slope_se_propagated = 0; ///< from per-point standard errors of y
};

/// Unweighted least squares of log y on log x. `y_se` (optional) are
/// standard errors of y, propagated through the fit as se(y)/y.
inline LogLogFit loglog_fit(std::span<const double> x, std::span<const double> y, std::span<const double> y_se = {})
{
    if (x.size() != y.size() || x.size() < 3)
        throw InvalidInput("log-log fit needs at least three points");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0) || !(y[i] > 0))
            throw InvalidInput("degenerate: log-log fit needs positive values");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const double mx = sample_mean(lx), my = sample_mean(ly);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    LogLogFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - fit.intercept - fit.slope * lx[i];
        rss += r * r;
    }
    fit.slope_se = std::sqrt(rss / static_cast<double>(lx.size() - 2) / sxx);
    if (y_se.size() == y.size()) {
        double v = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            const double w = (lx[i] - mx) / sxx;
            v += w * w * (y_se[i] / y[i]) * (y_se[i] / y[i]);
        }
        fit.slope_se_propagated = std::sqrt(v);
    }
    return fit;
}

} // namespace resistnet

#endif // RESISTNET_STATS_HPP
