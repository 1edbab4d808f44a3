#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace siftroth {

// The standard distributions are implementation-defined, so sampling goes
// through these helpers to keep seeded output identical across toolchains.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n), n > 0, by rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n)
{
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

/// Uniform real in [0, 1) with 53 random bits.
inline double uniform_real(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Sorted sample of `count` distinct elements of `pool`.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t count, Rng& rng)
{
    count = std::min(count, pool.size());
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace siftroth
