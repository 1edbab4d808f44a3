#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "algebra.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "primes.hpp"

namespace siftroth {

/// S_F(N, z) = { 1 <= n <= N : no prime p <= z divides F(n) }.
struct SiftedSet {
    FactoredPolynomial poly;
    std::int64_t n_max = 0;
    double z = 0;
    std::vector<std::int64_t> elements;
    /// Set when some factor vanishes identically modulo a prime <= z.
    bool annihilated = false;

    std::size_t card() const noexcept { return elements.size(); }
    bool contains(std::int64_t n) const { return std::binary_search(elements.begin(), elements.end(), n); }
};

inline constexpr std::int64_t default_segment_size = 1 << 15;

/// Root-striking segmented sieve; the output is independent of both
/// segment_size and threads.
inline SiftedSet sift(const FactoredPolynomial& f, std::int64_t n_max, double z, unsigned threads = 1,
                      std::int64_t segment_size = default_segment_size)
{
    if (n_max < 1)
        throw Error(Errc::invalid_argument, "sift needs N >= 1");
    if (z < 0)
        throw Error(Errc::invalid_argument, "sift needs z >= 0");
    if (segment_size < 1)
        throw Error(Errc::invalid_argument, "segment size must be positive");

    SiftedSet out{f, n_max, z, {}, false};
    struct Progression {
        std::int64_t p;
        std::int64_t residue;
    };
    std::vector<Progression> strikes;
    for (auto p : primes_up_to_real(z)) {
        const auto roots = roots_mod_p(f, p);
        if (roots.size() == p) {
            out.annihilated = true;
            return out;
        }
        for (auto r : roots)
            strikes.push_back({static_cast<std::int64_t>(p), static_cast<std::int64_t>(r)});
    }

    const std::int64_t segments = (n_max + segment_size - 1) / segment_size;
    std::vector<std::vector<std::int64_t>> survivors(static_cast<std::size_t>(segments));
    parallel_for(0, segments, threads, [&](std::int64_t s) {
        const std::int64_t lo = 1 + s * segment_size;
        const std::int64_t hi = std::min(n_max + 1, lo + segment_size);
        std::vector<unsigned char> struck(static_cast<std::size_t>(hi - lo), 0);
        for (const auto& [p, r] : strikes) {
            std::int64_t first = lo + ((r - lo) % p + p) % p;
            for (std::int64_t n = first; n < hi; n += p)
                struck[static_cast<std::size_t>(n - lo)] = 1;
        }
        auto& keep = survivors[static_cast<std::size_t>(s)];
        for (std::int64_t n = lo; n < hi; ++n)
            if (!struck[static_cast<std::size_t>(n - lo)])
                keep.push_back(n);
    });
    for (auto& seg : survivors)
        out.elements.insert(out.elements.end(), seg.begin(), seg.end());
    return out;
}

/// card(A) / card(S); A must be a subset of the sifted set.
inline double relative_density(std::span<const std::int64_t> a, const SiftedSet& s)
{
    for (auto n : a)
        if (!s.contains(n))
            throw Error(Errc::containment_violation, std::to_string(n) + " is not in the sifted set");
    if (s.elements.empty())
        throw Error(Errc::undefined_density, "sifted set is empty");
    std::vector<std::int64_t> distinct(a.begin(), a.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    return static_cast<double>(distinct.size()) / static_cast<double>(s.card());
}

inline double relative_density(std::span<const std::int64_t> a, const FactoredPolynomial& f, std::int64_t n_max,
                               double z)
{
    return relative_density(a, sift(f, n_max, z));
}

/// z = N^{1/(4k+1)}.
inline double brun_z(double n_max, std::size_t k) { return std::pow(n_max, 1.0 / (4.0 * static_cast<double>(k) + 1.0)); }

/// How the sifting level z is chosen from N.
struct ZRule {
    enum class Kind { brun, fixed };
    Kind kind = Kind::brun;
    double value = 0;

    static ZRule brun() { return {Kind::brun, 0}; }
    static ZRule fixed(double z) { return {Kind::fixed, z}; }

    double resolve(double n_max, std::size_t k) const { return kind == Kind::brun ? brun_z(n_max, k) : value; }
};

/// card(S_F(N, z)) * (log N)^k / N, the empirical Brun constant at N.
inline double brun_ratio(const FactoredPolynomial& f, std::int64_t n_max, ZRule rule = ZRule::brun(),
                         unsigned threads = 1)
{
    if (n_max < 3)
        throw Error(Errc::domain, "brun_ratio needs N >= 3");
    const auto k = f.degree();
    const auto s = sift(f, n_max, rule.resolve(static_cast<double>(n_max), k), threads);
    const double n = static_cast<double>(n_max);
    return static_cast<double>(s.card()) * std::pow(std::log(n), static_cast<double>(k)) / n;
}

/// Local densities g(p) = nu_p / p of a polynomial, extended multiplicatively
/// to squarefree d.
class SieveDensity {
public:
    explicit SieveDensity(FactoredPolynomial g) : poly_(std::move(g)) {}

    const FactoredPolynomial& poly() const noexcept { return poly_; }
    std::size_t degree() const noexcept { return poly_.degree(); }

    std::size_t nu(std::uint64_t p) const { return nu_p(poly_, p); }
    BigRational g_prime(std::uint64_t p) const { return BigRational(static_cast<long long>(nu(p)), static_cast<long long>(p)); }

    /// Prime factors of a squarefree d; throws for d that is not squarefree.
    static std::vector<std::uint64_t> squarefree_factors(std::uint64_t d)
    {
        if (d == 0)
            throw Error(Errc::not_squarefree, "0");
        std::vector<std::uint64_t> ps;
        std::uint64_t rest = d;
        for (std::uint64_t p = 2; p * p <= rest; ++p) {
            if (rest % p != 0)
                continue;
            rest /= p;
            if (rest % p == 0)
                throw Error(Errc::not_squarefree, std::to_string(d));
            ps.push_back(p);
        }
        if (rest > 1)
            ps.push_back(rest);
        return ps;
    }

    /// g(d) = prod_{p | d} g(p).
    BigRational g(std::uint64_t d) const
    {
        BigRational v = 1;
        for (auto p : squarefree_factors(d))
            v *= g_prime(p);
        return v;
    }

    /// Residues rho mod d with d | G(rho), combined from the prime root sets.
    std::vector<std::uint64_t> root_residues(std::uint64_t d) const
    {
        std::vector<std::uint64_t> res{0};
        std::uint64_t m = 1;
        for (auto p : squarefree_factors(d)) {
            const auto rp = roots_mod_p(poly_, p);
            const std::uint64_t m_inv = detail::inverse_mod(m % p, p);
            std::vector<std::uint64_t> next;
            next.reserve(res.size() * rp.size());
            for (auto r : res)
                for (auto s : rp) {
                    const std::uint64_t t = detail::mul_mod((s + p - r % p) % p, m_inv, p);
                    next.push_back(r + m * t);
                }
            res = std::move(next);
            m *= p;
        }
        std::sort(res.begin(), res.end());
        return res;
    }

    /// Exact count of 1 <= n <= x with d | G(n).
    std::uint64_t count_divisible(std::uint64_t d, double x) const
    {
        if (x < 1)
            return 0;
        const auto xi = static_cast<std::uint64_t>(std::floor(x));
        std::uint64_t count = 0;
        for (auto rho : root_residues(d)) {
            if (rho == 0)
                count += xi / d;
            else if (rho <= xi)
                count += (xi - rho) / d + 1;
        }
        return count;
    }

    /// r(d) = #{n <= x : d | G(n)} - x g(d).
    double r(std::uint64_t d, double x) const
    {
        return static_cast<double>(count_divisible(d, x)) - x * g(d).convert_to<double>();
    }

private:
    FactoredPolynomial poly_;
};

struct RemainderSum {
    double sum_abs_remainder = 0; ///< sum over squarefree d <= D of |r(d)|
    double majorant = 0;          ///< sum over squarefree d <= D of g(d) d
};

inline RemainderSum remainder_sum(const SieveDensity& density, std::uint64_t max_d, double x)
{
    if (max_d < 1)
        throw Error(Errc::invalid_argument, "remainder_sum needs D >= 1");
    RemainderSum out;
    for (std::uint64_t d = 1; d <= max_d; ++d) {
        std::vector<std::uint64_t> ps;
        try {
            ps = SieveDensity::squarefree_factors(d);
        } catch (const Error&) {
            continue;
        }
        out.sum_abs_remainder += std::abs(density.r(d, x));
        double gd_d = 1;
        for (auto p : ps)
            gd_d *= static_cast<double>(density.nu(p));
        out.majorant += gd_d;
    }
    return out;
}

struct MertensProduct {
    BigRational exact;  ///< prod_{w <= p <= z} (1 - g(p))^{-1}
    double value = 0;
    double k_ratio = 0; ///< value / (log z / log w)^m
};

namespace detail {

template <typename NuOf>
MertensProduct mertens_impl(double w, double z, std::size_t m, NuOf nu_of)
{
    if (!(w >= 2 && w <= z))
        throw Error(Errc::domain, "mertens product needs 2 <= w <= z");
    MertensProduct out;
    out.exact = 1;
    for (auto p : primes_up_to_real(z)) {
        if (static_cast<double>(p) < w)
            continue;
        const auto nu = nu_of(p);
        if (nu >= p)
            throw Error(Errc::infinite_product, "g(" + std::to_string(p) + ") >= 1");
        out.exact *= BigRational(static_cast<long long>(p), static_cast<long long>(p - nu));
    }
    out.value = out.exact.convert_to<double>();
    out.k_ratio = out.value / std::pow(std::log(z) / std::log(w), static_cast<double>(m));
    return out;
}

} // namespace detail

inline MertensProduct mertens_product(const SieveDensity& density, double w, double z)
{
    return detail::mertens_impl(w, z, density.degree(), [&](std::uint64_t p) { return density.nu(p); });
}

/// The same product for the model density g(p) = k / p.
inline MertensProduct mertens_product(std::size_t k, double w, double z)
{
    return detail::mertens_impl(w, z, k, [k](std::uint64_t) { return static_cast<std::uint64_t>(k); });
}

/// #{n <= N' : gcd(G(n), P(N'^c)) = 1} (log N')^m / (N' (log log N')^m).
inline double sieve_upper_ratio(const FactoredPolynomial& g, std::int64_t n_prime, double c, unsigned threads = 1)
{
    if (!(c > 0 && c < 1))
        throw Error(Errc::domain, "sieve_upper_ratio needs 0 < c < 1");
    if (!is_nondegenerate(g))
        throw Error(Errc::degenerate_polynomial, "discriminant is zero");
    const double n = static_cast<double>(n_prime);
    if (!(n > std::exp(std::exp(1.0))))
        throw Error(Errc::domain, "N' must exceed e^e");
    const auto m = static_cast<double>(g.degree());
    const auto s = sift(g, n_prime, std::pow(n, c), threads);
    return static_cast<double>(s.card()) * std::pow(std::log(n), m) / (n * std::pow(std::log(std::log(n)), m));
}

} // namespace siftroth
