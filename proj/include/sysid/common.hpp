#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace sysid {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Every stochastic routine takes one of these explicitly.
using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive decorrelated seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed of Monte Carlo run `index` under `master`.
constexpr std::uint64_t run_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Independent sub-stream of a run, keyed by a label such as "EB".
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view tag) noexcept
{
    return mix64(seed ^ mix64(fnv1a(tag)));
}

inline Rng make_stream(std::uint64_t seed, std::string_view tag)
{
    return Rng(stream_seed(seed, tag));
}

inline Vector standard_normal(Index n, Rng& rng)
{
    std::normal_distribution<double> dist;
    Vector z(n);
    for (Index i = 0; i < n; ++i)
        z[i] = dist(rng);
    return z;
}

} // namespace sysid
