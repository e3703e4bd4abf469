#ifndef RESISTNET_ERRORS_HPP
#define RESISTNET_ERRORS_HPP

#include <cstddef>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace resistnet
{

/// Malformed or out-of-range input (bad sizes, invalid vertices, ellipticity violations).
class InvalidInput : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// A builder or enumeration would exceed the configured size budget.
class BudgetExceeded : public std::length_error
{
public:
    using std::length_error::length_error;
};

/// Iterative solve did not reach the requested tolerance.
class NonConvergence : public std::runtime_error
{
public:
    NonConvergence(const std::string& what, double best_residual, std::size_t iterations)
        : std::runtime_error(what), best_residual_(best_residual), iterations_(iterations)
    {
    }

    double best_residual() const noexcept { return best_residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double best_residual_;
    std::size_t iterations_;
};

/// Structured-text parse failure; line is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error
{
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

inline constexpr std::size_t default_edge_budget = 5'000'000;

/// RESISTNET_BUDGET when set to a positive integer, otherwise `fallback`.
inline std::size_t budget_from_env(std::size_t fallback)
{
    if (const char* env = std::getenv("RESISTNET_BUDGET")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<std::size_t>(v);
    }
    return fallback;
}

/// Half-edge budget for builders.
inline std::size_t edge_budget() { return budget_from_env(default_edge_budget); }

} // namespace resistnet

#endif // RESISTNET_ERRORS_HPP
