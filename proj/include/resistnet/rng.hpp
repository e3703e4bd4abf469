#ifndef RESISTNET_RNG_HPP
#define RESISTNET_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace resistnet
{

// Counter-based generator: every draw is a hash of its coordinates, so a
// value never depends on how many draws came before it.

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t replica, std::uint64_t index,
                                            std::uint64_t stream = 0) noexcept
{
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ replica);
    h = splitmix64(h ^ index);
    return splitmix64(h ^ stream);
}

/// Uniform on [0, 1) with 53 random bits.
inline constexpr double counter_uniform(std::uint64_t seed, std::uint64_t replica, std::uint64_t index,
                                        std::uint64_t stream = 0) noexcept
{
    return static_cast<double>(counter_hash(seed, replica, index, stream) >> 11) * 0x1.0p-53;
}

/// Standard normal by Box-Muller from two counter uniforms.
inline double counter_normal(std::uint64_t seed, std::uint64_t replica, std::uint64_t index,
                             std::uint64_t stream = 0) noexcept
{
    const double u1 = 1.0 - counter_uniform(seed, replica, 2 * index, stream);
    const double u2 = counter_uniform(seed, replica, 2 * index + 1, stream);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace resistnet

#endif // RESISTNET_RNG_HPP
