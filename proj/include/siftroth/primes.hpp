#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "error.hpp"

namespace siftroth {

/// All primes <= bound, ascending.
struct PrimeTable {
    std::uint64_t bound = 0;
    std::vector<std::uint64_t> primes;
};

inline PrimeTable primes_up_to(std::uint64_t bound)
{
    PrimeTable table{bound, {}};
    if (bound < 2)
        return table;
    // odd-only bitmap: index i stands for 2i+1
    std::vector<bool> composite(bound / 2 + 1, false);
    table.primes.push_back(2);
    for (std::uint64_t i = 1; 2 * i + 1 <= bound; ++i) {
        if (composite[i])
            continue;
        const std::uint64_t p = 2 * i + 1;
        table.primes.push_back(p);
        for (std::uint64_t q = p * p; q <= bound; q += 2 * p)
            composite[q / 2] = true;
    }
    return table;
}

/// Primes p <= floor(z); z < 2 gives none.
inline std::vector<std::uint64_t> primes_up_to_real(double z)
{
    if (!(z >= 2.0))
        return {};
    return primes_up_to(static_cast<std::uint64_t>(std::floor(z))).primes;
}

namespace detail {

inline std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m)
{
    unsigned __int128 result = 1, b = base % m;
    while (exp) {
        if (exp & 1)
            result = result * b % m;
        b = b * b % m;
        exp >>= 1;
    }
    return static_cast<std::uint64_t>(result);
}

} // namespace detail

/// Deterministic Miller-Rabin for all 64-bit n (first twelve prime bases).
inline bool is_prime(std::uint64_t n)
{
    if (n < 2)
        return false;
    static constexpr std::uint64_t bases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    for (auto p : bases) {
        if (n % p == 0)
            return n == p;
    }
    std::uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (auto a : bases) {
        std::uint64_t x = detail::pow_mod(a, d, n);
        if (x == 1 || x == n - 1)
            continue;
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            x = static_cast<std::uint64_t>(static_cast<unsigned __int128>(x) * x % n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite)
            return false;
    }
    return true;
}

/// Smallest prime in [lo, hi], if any.
inline std::optional<std::uint64_t> smallest_prime_in(std::uint64_t lo, std::uint64_t hi)
{
    for (std::uint64_t n = lo; n <= hi && n >= lo; ++n)
        if (is_prime(n))
            return n;
    return std::nullopt;
}

/// prod_{p <= z} p; throws when it does not fit in 64 bits.
inline std::uint64_t primorial(double z)
{
    std::uint64_t m = 1;
    for (auto p : primes_up_to_real(z)) {
        if (m > UINT64_MAX / p)
            throw Error(Errc::domain, "primorial overflows 64 bits");
        m *= p;
    }
    return m;
}

} // namespace siftroth
