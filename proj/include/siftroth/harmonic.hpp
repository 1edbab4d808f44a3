#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "algebra.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "primes.hpp"
#include "transference.hpp"

namespace siftroth {

using Complex = std::complex<double>;

/// A complex-valued function on Z/PZ stored as its P values.
class CyclicFunction {
public:
    CyclicFunction() = default;
    explicit CyclicFunction(std::size_t modulus, Complex fill = 0) : values_(modulus, fill)
    {
        if (modulus == 0)
            throw Error(Errc::invalid_argument, "modulus must be positive");
    }
    explicit CyclicFunction(std::vector<Complex> values) : values_(std::move(values))
    {
        if (values_.empty())
            throw Error(Errc::invalid_argument, "modulus must be positive");
    }

    std::size_t modulus() const noexcept { return values_.size(); }
    Complex& operator[](std::size_t i) { return values_[i]; }
    const Complex& operator[](std::size_t i) const { return values_[i]; }
    /// Value at an arbitrary integer, reduced mod P.
    const Complex& at(std::int64_t i) const { return values_[detail::reduce(i, modulus())]; }
    std::span<const Complex> values() const noexcept { return values_; }
    std::span<Complex> values() noexcept { return values_; }

    bool is_real(double tol = 0) const
    {
        return std::all_of(values_.begin(), values_.end(), [tol](const Complex& v) { return std::abs(v.imag()) <= tol; });
    }

    CyclicFunction& operator*=(Complex s)
    {
        for (auto& v : values_)
            v *= s;
        return *this;
    }

private:
    std::vector<Complex> values_;
};

namespace detail {

inline void require_same_modulus(const CyclicFunction& f, const CyclicFunction& g)
{
    if (f.modulus() != g.modulus())
        throw Error(Errc::modulus_mismatch, std::to_string(f.modulus()) + " vs " + std::to_string(g.modulus()));
}

/// Sum of doubles by recursive halving; order depends only on the length.
inline double pairwise_sum(std::span<const double> xs)
{
    if (xs.size() <= 8) {
        double s = 0;
        for (auto x : xs)
            s += x;
        return s;
    }
    const auto half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline Complex pairwise_sum(std::span<const Complex> xs)
{
    if (xs.size() <= 8) {
        Complex s = 0;
        for (auto x : xs)
            s += x;
        return s;
    }
    const auto half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// exp(2 pi i k / n) for k in [0, n), each entry evaluated directly.
inline std::vector<Complex> unit_roots(std::size_t n)
{
    std::vector<Complex> w(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        w[k] = {std::cos(theta), std::sin(theta)};
    }
    return w;
}

/// In-place iterative radix-2 transform, a[k] <- sum_j a[j] exp(sign 2 pi i jk/n).
inline void fft_pow2(std::vector<Complex>& a, int sign)
{
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(a[i], a[j]);
    }
    const auto roots = unit_roots(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len)
            for (std::size_t j = 0; j < len / 2; ++j) {
                Complex w = roots[j * stride];
                if (sign < 0)
                    w = std::conj(w);
                const Complex u = a[i + j];
                const Complex v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
            }
    }
}

} // namespace detail

/// E(f) = (1/P) sum f(n).
inline Complex mean(const CyclicFunction& f)
{
    return detail::pairwise_sum(f.values()) / static_cast<double>(f.modulus());
}

struct Moments {
    Complex mean;
    double norm; ///< ||f||_l = E(|f|^l)^{1/l}
};

inline Moments moments(const CyclicFunction& f, unsigned l)
{
    if (l < 1)
        throw Error(Errc::invalid_argument, "moment order must be >= 1");
    std::vector<double> powers(f.modulus());
    for (std::size_t i = 0; i < f.modulus(); ++i)
        powers[i] = std::pow(std::abs(f[i]), static_cast<double>(l));
    const double e = detail::pairwise_sum(powers) / static_cast<double>(f.modulus());
    return {mean(f), std::pow(e, 1.0 / static_cast<double>(l))};
}

/// Indicator of C (elements taken mod P).
inline CyclicFunction indicator(std::span<const std::uint64_t> c, std::size_t p)
{
    CyclicFunction f(p);
    for (auto x : c)
        f[x % p] = 1;
    return f;
}

/// f_C = I_C / d(C): value P / card(C) on C, so E(f_C) = 1.
inline CyclicFunction normalized_indicator(std::span<const std::uint64_t> c, std::size_t p)
{
    auto f = indicator(c, p);
    std::size_t card = 0;
    for (auto v : f.values())
        card += v != Complex(0);
    if (card == 0)
        throw Error(Errc::empty_set, "normalized indicator of the empty set");
    f *= static_cast<double>(p) / static_cast<double>(card);
    return f;
}

/// fhat(t) = (1/P) sum_y f(y) e(ty/P), evaluated term by term. O(P^2).
inline CyclicFunction dft_direct(const CyclicFunction& f, unsigned threads = 1)
{
    const std::size_t p = f.modulus();
    const auto w = detail::unit_roots(p);
    CyclicFunction out(p);
    parallel_for(0, static_cast<std::int64_t>(p), threads, [&](std::int64_t ti) {
        const auto t = static_cast<std::size_t>(ti);
        std::vector<Complex> terms(p);
        std::size_t idx = 0;
        for (std::size_t y = 0; y < p; ++y) {
            terms[y] = f[y] * w[idx];
            idx += t;
            if (idx >= p)
                idx -= p;
        }
        out[t] = detail::pairwise_sum(terms) / static_cast<double>(p);
    });
    return out;
}

/// Same transform via Bluestein's chirp reduction to power-of-two FFTs.
inline CyclicFunction dft_fast(const CyclicFunction& f)
{
    const std::size_t p = f.modulus();
    if (p == 1)
        return f;
    // chirp(k) = exp(i pi k^2 / P), with k^2 reduced mod 2P before scaling
    std::vector<Complex> chirp(p);
    for (std::size_t k = 0; k < p; ++k) {
        const auto k2 = static_cast<std::uint64_t>(static_cast<unsigned __int128>(k) * k % (2 * p));
        const double theta = std::numbers::pi * static_cast<double>(k2) / static_cast<double>(p);
        chirp[k] = {std::cos(theta), std::sin(theta)};
    }
    std::size_t len = 1;
    while (len < 2 * p - 1)
        len <<= 1;
    std::vector<Complex> a(len, 0), b(len, 0);
    for (std::size_t y = 0; y < p; ++y)
        a[y] = f[y] * chirp[y];
    b[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < p; ++k)
        b[k] = b[len - k] = std::conj(chirp[k]);
    detail::fft_pow2(a, 1);
    detail::fft_pow2(b, 1);
    for (std::size_t i = 0; i < len; ++i)
        a[i] *= b[i];
    detail::fft_pow2(a, -1);
    CyclicFunction out(p);
    const double scale = 1.0 / (static_cast<double>(len) * static_cast<double>(p));
    for (std::size_t t = 0; t < p; ++t)
        out[t] = chirp[t] * a[t] * scale;
    return out;
}

inline constexpr std::size_t direct_dft_limit = 256;

/// Normalised transform; direct evaluation for small P, Bluestein otherwise.
inline CyclicFunction dft(const CyclicFunction& f, unsigned threads = 1)
{
    return f.modulus() <= direct_dft_limit ? dft_direct(f, threads) : dft_fast(f);
}

/// f(y) = sum_t fhat(t) e(-ty/P).
inline CyclicFunction inverse_dft(const CyclicFunction& fhat, unsigned threads = 1)
{
    CyclicFunction conj_hat(fhat.modulus());
    for (std::size_t i = 0; i < fhat.modulus(); ++i)
        conj_hat[i] = std::conj(fhat[i]);
    auto g = dft(conj_hat, threads);
    const double p = static_cast<double>(fhat.modulus());
    for (auto& v : g.values())
        v = std::conj(v) * p;
    return g;
}

/// (f*g)(n) = (1/P) sum_y f(n - y) g(y), evaluated term by term.
inline CyclicFunction convolve(const CyclicFunction& f, const CyclicFunction& g, unsigned threads = 1)
{
    detail::require_same_modulus(f, g);
    const std::size_t p = f.modulus();
    CyclicFunction out(p);
    parallel_for(0, static_cast<std::int64_t>(p), threads, [&](std::int64_t ni) {
        const auto n = static_cast<std::size_t>(ni);
        std::vector<Complex> terms(p);
        for (std::size_t y = 0; y < p; ++y)
            terms[y] = f[(n + p - y) % p] * g[y];
        out[n] = detail::pairwise_sum(terms) / static_cast<double>(p);
    });
    return out;
}

/// Convolution through the transform, (f*g)^ = fhat ghat.
inline CyclicFunction convolve_fast(const CyclicFunction& f, const CyclicFunction& g, unsigned threads = 1)
{
    detail::require_same_modulus(f, g);
    auto fh = dft(f, threads);
    const auto gh = dft(g, threads);
    for (std::size_t t = 0; t < fh.modulus(); ++t)
        fh[t] *= gh[t];
    return inverse_dft(fh, threads);
}

inline constexpr double lambda_enumeration_guard = 1e8;

/// Lambda_L(f) = sum over (n_1..n_s) with sum c_i n_i = 0 of prod f(n_i),
/// by enumeration of the solution set.
inline Complex lambda_brute(const CyclicFunction& f, const TranslationInvariantEquation& eq, unsigned threads = 1)
{
    const std::size_t p = f.modulus();
    const auto& c = eq.coeffs();
    const std::size_t s = c.size();
    std::vector<std::uint64_t> cm(s);
    for (std::size_t i = 0; i < s; ++i)
        cm[i] = detail::reduce(c[i], p);
    const bool solve_last = std::gcd(cm[s - 1], static_cast<std::uint64_t>(p)) == 1;
    const std::size_t free_vars = solve_last ? s - 1 : s;
    if (std::pow(static_cast<double>(p), static_cast<double>(free_vars)) > lambda_enumeration_guard)
        throw Error(Errc::guard_exceeded, "P^" + std::to_string(free_vars) + " tuples");
    const std::uint64_t inv_last = solve_last ? detail::inverse_mod(cm[s - 1], p) : 0;

    std::vector<Complex> partial(p, 0);
    parallel_for(0, static_cast<std::int64_t>(p), threads, [&](std::int64_t first) {
        std::vector<std::uint64_t> x(free_vars, 0);
        x[0] = static_cast<std::uint64_t>(first);
        Complex acc = 0;
        while (true) {
            std::uint64_t lin = 0;
            Complex prod = 1;
            for (std::size_t i = 0; i < free_vars; ++i) {
                lin = (lin + detail::mul_mod(cm[i], x[i], p)) % p;
                prod *= f[x[i]];
            }
            if (solve_last) {
                const std::uint64_t last = detail::mul_mod((p - lin) % p, inv_last, p);
                acc += prod * f[last];
            } else if (lin == 0) {
                acc += prod;
            }
            std::size_t pos = free_vars - 1;
            while (pos >= 1) {
                if (++x[pos] < p)
                    break;
                x[pos] = 0;
                --pos;
            }
            if (pos == 0)
                break;
        }
        partial[static_cast<std::size_t>(first)] = acc;
    });
    return detail::pairwise_sum(partial);
}

/// P^{s-1} sum_t prod_i fhat(c_i t) from a precomputed transform.
inline Complex lambda_from_transform(const CyclicFunction& fhat, const TranslationInvariantEquation& eq)
{
    const std::size_t p = fhat.modulus();
    std::vector<Complex> terms(p);
    for (std::size_t t = 0; t < p; ++t) {
        Complex prod = 1;
        for (auto c : eq.coeffs())
            prod *= fhat.at(c * static_cast<std::int64_t>(t));
        terms[t] = prod;
    }
    return std::pow(static_cast<double>(p), static_cast<double>(eq.arity() - 1)) * detail::pairwise_sum(terms);
}

inline Complex lambda_fourier(const CyclicFunction& f, const TranslationInvariantEquation& eq, unsigned threads = 1)
{
    return lambda_from_transform(dft(f, threads), eq);
}

/// Spec_eps(f) = { t : |fhat(t)| > eps }.
struct Spectrum {
    double threshold = 0;
    std::vector<std::uint64_t> frequencies;
};

inline Spectrum spectrum_of_transform(const CyclicFunction& fhat, double eps)
{
    if (!(eps > 0))
        throw Error(Errc::invalid_argument, "spectrum threshold must be positive");
    Spectrum s{eps, {}};
    for (std::size_t t = 0; t < fhat.modulus(); ++t)
        if (std::abs(fhat[t]) > eps)
            s.frequencies.push_back(t);
    return s;
}

inline Spectrum spectrum(const CyclicFunction& f, double eps, unsigned threads = 1)
{
    return spectrum_of_transform(dft(f, threads), eps);
}

/// union_i (c_i c_1^{-1}) . S, ascending.
inline std::vector<std::uint64_t> dilated_spectrum(std::span<const std::uint64_t> s, const TranslationInvariantEquation& eq,
                                                   std::uint64_t p)
{
    const auto& c = eq.coeffs();
    const std::uint64_t inv_c1 = detail::inverse_mod(detail::reduce(c.front(), p), p);
    std::vector<std::uint64_t> out;
    for (auto ci : c) {
        const std::uint64_t mult = detail::mul_mod(detail::reduce(ci, p), inv_c1, p);
        for (auto t : s)
            out.push_back(detail::mul_mod(mult, t % p, p));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

enum class BohrConvention {
    phase_distance, ///< || x t / P || <= width (distance to the nearest integer)
    chord,          ///< | e(x t / P) - 1 | <= width
};

struct BohrSet {
    std::vector<std::uint64_t> frequencies;
    double width = 0;
    BohrConvention convention = BohrConvention::phase_distance;
    std::uint64_t modulus = 0;
    std::vector<std::uint64_t> elements;
};

inline BohrSet bohr_set(std::span<const std::uint64_t> freqs, double width, BohrConvention convention, std::uint64_t p,
                        unsigned threads = 1)
{
    if (!(width > 0))
        throw Error(Errc::invalid_argument, "Bohr width must be positive");
    BohrSet out{{freqs.begin(), freqs.end()}, width, convention, p, {}};
    std::vector<unsigned char> member(p, 0);
    const double pd = static_cast<double>(p);
    parallel_for(0, static_cast<std::int64_t>(p), threads, [&](std::int64_t xi) {
        const auto x = static_cast<std::uint64_t>(xi);
        for (auto t : freqs) {
            const std::uint64_t k = detail::mul_mod(x, t % p, p);
            const std::uint64_t dist = std::min(k, p - k);
            bool ok;
            if (convention == BohrConvention::phase_distance)
                ok = static_cast<double>(dist) / pd <= width;
            else
                ok = 2.0 * std::sin(std::numbers::pi * static_cast<double>(dist) / pd) <= width;
            if (!ok)
                return;
        }
        member[x] = 1;
    });
    for (std::uint64_t x = 0; x < p; ++x)
        if (member[x])
            out.elements.push_back(x);
    return out;
}

/// rho^{|S|} P, the guaranteed size of a phase-distance Bohr set.
inline double bohr_size_bound(double width, std::size_t num_freqs, std::uint64_t p)
{
    return std::pow(width, static_cast<double>(num_freqs)) * static_cast<double>(p);
}

/// sum_t prod_i |fhat(c_i t)|^{m_i}.
inline double spectral_moment(const CyclicFunction& fhat, const TranslationInvariantEquation& eq,
                              std::span<const double> exponents)
{
    if (exponents.size() != eq.arity())
        throw Error(Errc::invalid_argument, "one exponent per variable");
    double total = 0;
    for (auto m : exponents)
        total += m;
    if (!(total > 2))
        throw Error(Errc::domain, "exponents must sum to more than 2");
    std::vector<double> terms(fhat.modulus());
    for (std::size_t t = 0; t < fhat.modulus(); ++t) {
        double prod = 1;
        for (std::size_t i = 0; i < eq.arity(); ++i)
            prod *= std::pow(std::abs(fhat.at(eq.coeffs()[i] * static_cast<std::int64_t>(t))), exponents[i]);
        terms[t] = prod;
    }
    return detail::pairwise_sum(terms);
}

struct RestrictionMoment {
    double lhs = 0;        ///< (sum_t |hhat(t)|^l)^{2/l}
    double euler_factor = 0; ///< prod_{p <= cutoff} (1 - 1/p)^{-m} (1 - g(p))
    double rhs_factor = 0; ///< euler_factor / (log R)^m * (1/N) sum |h|^2
    double ratio = 0;      ///< lhs / rhs_factor, the empirical c(l, m)
};

/// Measures the restriction estimate for h supported on
/// { n : gcd(G(n), P(R)) = 1 }; index i of h stands for the integer i.
inline RestrictionMoment restriction_moment(const CyclicFunction& h, double l, double r_level, const FactoredPolynomial& g,
                                            std::uint64_t prime_cutoff, unsigned threads = 1)
{
    if (!(l > 2))
        throw Error(Errc::domain, "restriction moment needs l > 2");
    if (!(r_level > 1))
        throw Error(Errc::domain, "restriction moment needs R > 1");
    const std::size_t n = h.modulus();
    for (auto p : primes_up_to_real(r_level)) {
        const auto roots = roots_mod_p(g, p);
        for (std::size_t i = 0; i < n; ++i)
            if (h[i] != Complex(0) && std::binary_search(roots.begin(), roots.end(), i % p))
                throw Error(Errc::support_violation,
                            "h(" + std::to_string(i) + ") != 0 but " + std::to_string(p) + " | G(" + std::to_string(i) + ")");
    }
    const auto hh = dft(h, threads);
    std::vector<double> powers(n), squares(n);
    for (std::size_t i = 0; i < n; ++i) {
        powers[i] = std::pow(std::abs(hh[i]), l);
        squares[i] = std::norm(h[i]);
    }
    RestrictionMoment out;
    out.lhs = std::pow(detail::pairwise_sum(powers), 2.0 / l);
    const double m = static_cast<double>(g.degree());
    double euler = 1;
    for (auto p : primes_up_to(prime_cutoff).primes) {
        const double pd = static_cast<double>(p);
        euler *= std::pow(1.0 - 1.0 / pd, -m) * (1.0 - static_cast<double>(nu_p(g, p)) / pd);
    }
    out.euler_factor = euler;
    out.rhs_factor = euler / std::pow(std::log(r_level), m) * detail::pairwise_sum(squares) / static_cast<double>(n);
    out.ratio = out.lhs == 0 ? 0 : out.lhs / out.rhs_factor;
    return out;
}

/// D(f) = { n : f(n) > 1/2 } for real-valued f.
inline std::vector<std::uint64_t> level_set(const CyclicFunction& f)
{
    std::vector<std::uint64_t> d;
    for (std::size_t i = 0; i < f.modulus(); ++i)
        if (f[i].real() > 0.5)
            d.push_back(i);
    return d;
}

/// (1/P) sum_{n in D(f)} f(n).
inline double level_set_mass(const CyclicFunction& f)
{
    std::vector<double> terms;
    for (auto n : level_set(f))
        terms.push_back(f[n].real());
    return detail::pairwise_sum(terms) / static_cast<double>(f.modulus());
}

inline constexpr double solution_count_guard = 4e9;

/// Number of ordered tuples in D^s solving L modulo P (trivial ones included).
inline std::uint64_t count_solutions_in_set(std::span<const std::uint64_t> d, const TranslationInvariantEquation& eq,
                                            std::uint64_t p, unsigned threads = 1)
{
    if (d.empty())
        return 0;
    std::vector<unsigned char> member(p, 0);
    std::vector<std::uint64_t> elems;
    for (auto x : d)
        if (!member[x % p]) {
            member[x % p] = 1;
            elems.push_back(x % p);
        }
    const auto& c = eq.coeffs();
    const std::size_t s = c.size();
    std::vector<std::uint64_t> cm(s);
    for (std::size_t i = 0; i < s; ++i)
        cm[i] = detail::reduce(c[i], p);
    const bool solve_last = std::gcd(cm[s - 1], p) == 1;
    const std::size_t free_vars = solve_last ? s - 1 : s;
    if (std::pow(static_cast<double>(elems.size()), static_cast<double>(free_vars)) > solution_count_guard)
        throw Error(Errc::guard_exceeded, "card(D)^" + std::to_string(free_vars) + " tuples");
    const std::uint64_t inv_last = solve_last ? detail::inverse_mod(cm[s - 1], p) : 0;
    const std::size_t nd = elems.size();

    std::vector<std::uint64_t> partial(nd, 0);
    parallel_for(0, static_cast<std::int64_t>(nd), threads, [&](std::int64_t first) {
        std::vector<std::size_t> idx(free_vars, 0);
        idx[0] = static_cast<std::size_t>(first);
        std::uint64_t acc = 0;
        while (true) {
            std::uint64_t lin = 0;
            for (std::size_t i = 0; i < free_vars; ++i)
                lin = (lin + detail::mul_mod(cm[i], elems[idx[i]], p)) % p;
            if (solve_last)
                acc += member[detail::mul_mod((p - lin) % p, inv_last, p)];
            else
                acc += lin == 0;
            std::size_t pos = free_vars - 1;
            while (pos >= 1) {
                if (++idx[pos] < nd)
                    break;
                idx[pos] = 0;
                --pos;
            }
            if (pos == 0)
                break;
        }
        partial[static_cast<std::size_t>(first)] = acc;
    });
    std::uint64_t total = 0;
    for (auto v : partial)
        total += v;
    return total;
}

struct LevelSetCheck {
    std::size_t card = 0;
    double bound = 0; ///< P (2 ||f||_l)^{-l/(l-1)}
    bool holds = false;
};

/// Hoelder form of the level-set lower bound for f >= 0 with E(f) = 1.
inline LevelSetCheck level_set_lower_bound_check(const CyclicFunction& f, unsigned l)
{
    if (l < 2)
        throw Error(Errc::invalid_argument, "level-set bound needs l >= 2");
    const double norm = moments(f, l).norm;
    const double ld = static_cast<double>(l);
    LevelSetCheck out;
    out.card = level_set(f).size();
    out.bound = static_cast<double>(f.modulus()) * std::pow(2.0 * norm, -ld / (ld - 1.0));
    out.holds = static_cast<double>(out.card) >= out.bound * (1.0 - 1e-12);
    return out;
}

struct ConvolutionMomentIdentity {
    double norm_power_direct = 0; ///< ||f_C * f_B||_l^l from the convolution
    double intersection_sum = 0;  ///< the same quantity from intersections of translates
    /// intersection_sum split by component count r (index 0 unused).
    std::vector<double> by_components;
    /// max over tuples with r components of card(∩) beta^r / (P d(C)^r).
    std::vector<double> component_constant;
};

/// Both sides of ||f_C*f_B||_l^l = (1 / (P card(B)^l d(C)^l)) sum_{y in B^l} card(∩_i (C + y_i)).
inline ConvolutionMomentIdentity convolution_moment_identity(std::span<const std::uint64_t> c,
                                                             std::span<const std::uint64_t> b, unsigned l,
                                                             std::uint64_t p, const ForbiddenDifferences* s_prime = nullptr,
                                                             double beta = 1.0, unsigned threads = 1)
{
    if (l < 1)
        throw Error(Errc::invalid_argument, "l must be >= 1");
    const auto fc = normalized_indicator(c, p);
    const auto fb = normalized_indicator(b, p);
    std::vector<std::uint64_t> cset, bset;
    for (std::size_t i = 0; i < p; ++i) {
        if (fc[i] != Complex(0))
            cset.push_back(i);
        if (fb[i] != Complex(0))
            bset.push_back(i);
    }
    const std::size_t nb = bset.size();
    if (std::pow(static_cast<double>(nb), static_cast<double>(l)) > static_cast<double>(tuple_enumeration_guard))
        throw Error(Errc::guard_exceeded, "card(B)^l tuples");

    ConvolutionMomentIdentity out;
    const auto conv = convolve(fc, fb, threads);
    std::vector<double> powers(p);
    for (std::size_t i = 0; i < p; ++i)
        powers[i] = std::pow(std::abs(conv[i]), static_cast<double>(l));
    out.norm_power_direct = detail::pairwise_sum(powers) / static_cast<double>(p);

    const ForbiddenDifferences trivial = make_forbidden_differences(p, {});
    const ForbiddenDifferences& sp = s_prime ? *s_prime : trivial;
    std::vector<unsigned char> in_c(p, 0);
    for (auto x : cset)
        in_c[x] = 1;
    const double dc = static_cast<double>(cset.size()) / static_cast<double>(p);

    struct Partial {
        std::vector<std::uint64_t> card_by_r;
        std::vector<double> constant_by_r;
    };
    std::vector<Partial> partial(nb);
    parallel_for(0, static_cast<std::int64_t>(nb), threads, [&](std::int64_t first) {
        auto& mine = partial[static_cast<std::size_t>(first)];
        mine.card_by_r.assign(l + 1, 0);
        mine.constant_by_r.assign(l + 1, 0.0);
        std::vector<std::size_t> idx(l, 0);
        idx[0] = static_cast<std::size_t>(first);
        std::vector<std::uint64_t> y(l);
        while (true) {
            for (unsigned i = 0; i < l; ++i)
                y[i] = bset[idx[i]];
            // n in ∩ (C + y_i)  <=>  n - y_i in C for all i
            std::uint64_t card = 0;
            for (auto x : cset) {
                const std::uint64_t n = (x + y[0]) % p;
                bool all = true;
                for (unsigned i = 1; i < l && all; ++i)
                    all = in_c[(n + p - y[i]) % p];
                card += all;
            }
            const auto r = component_analysis(y, sp).count;
            mine.card_by_r[r] += card;
            const double constant = static_cast<double>(card) * std::pow(beta, static_cast<double>(r)) /
                                    (static_cast<double>(p) * std::pow(dc, static_cast<double>(r)));
            mine.constant_by_r[r] = std::max(mine.constant_by_r[r], constant);
            std::size_t pos = l - 1;
            while (pos >= 1) {
                if (++idx[pos] < nb)
                    break;
                idx[pos] = 0;
                --pos;
            }
            if (pos == 0)
                break;
        }
    });
    std::vector<std::uint64_t> card_by_r(l + 1, 0);
    out.component_constant.assign(l + 1, 0.0);
    for (const auto& part : partial)
        for (unsigned r = 0; r <= l; ++r) {
            card_by_r[r] += part.card_by_r[r];
            out.component_constant[r] = std::max(out.component_constant[r], part.constant_by_r[r]);
        }
    const double norm = static_cast<double>(p) * std::pow(static_cast<double>(nb) * dc, static_cast<double>(l));
    out.by_components.assign(l + 1, 0.0);
    std::uint64_t total = 0;
    for (unsigned r = 0; r <= l; ++r) {
        out.by_components[r] = static_cast<double>(card_by_r[r]) / norm;
        total += card_by_r[r];
    }
    out.intersection_sum = static_cast<double>(total) / norm;
    return out;
}

struct TransferError {
    double lhs = 0;             ///< |Lambda(f_A) - Lambda(f_A * f_B)|
    Complex lambda_a = 0;       ///< Lambda(f_A)
    Complex lambda_smoothed = 0; ///< Lambda(f_A * f_B)
    double effective_eps2 = 0;  ///< max over the dilated spectrum of |fhat_B(t) - 1|
    std::size_t dilated_spectrum_card = 0;
    double constant = 0;        ///< lhs delta^6 / ((eps2 + sqrt(eps1)) P^{s-1})
};

/// From precomputed transforms of f_A and f_B.
inline TransferError transfer_error_from_transforms(const CyclicFunction& fa_hat, const CyclicFunction& fb_hat,
                                                    const TranslationInvariantEquation& eq, double eps1, double delta)
{
    detail::require_same_modulus(fa_hat, fb_hat);
    const std::size_t p = fa_hat.modulus();
    TransferError out;
    out.lambda_a = lambda_from_transform(fa_hat, eq);
    CyclicFunction smoothed(p);
    for (std::size_t t = 0; t < p; ++t)
        smoothed[t] = fa_hat[t] * fb_hat[t];
    out.lambda_smoothed = lambda_from_transform(smoothed, eq);
    out.lhs = std::abs(out.lambda_a - out.lambda_smoothed);
    const auto spec = spectrum_of_transform(fa_hat, eps1);
    const auto dil = dilated_spectrum(spec.frequencies, eq, p);
    out.dilated_spectrum_card = dil.size();
    for (auto t : dil)
        out.effective_eps2 = std::max(out.effective_eps2, std::abs(fb_hat[t] - Complex(1)));
    const double scale = std::pow(static_cast<double>(p), static_cast<double>(eq.arity() - 1));
    const double denom = (out.effective_eps2 + std::sqrt(eps1)) * scale;
    out.constant = out.lhs == 0 ? 0 : out.lhs * std::pow(delta, 6.0) / denom;
    return out;
}

inline TransferError transfer_error(const CyclicFunction& fa, std::span<const std::uint64_t> b,
                                    const TranslationInvariantEquation& eq, double eps1, double delta, unsigned threads = 1)
{
    if (b.empty())
        throw Error(Errc::empty_set, "smoothing set B is empty");
    const auto fb = normalized_indicator(b, fa.modulus());
    return transfer_error_from_transforms(dft(fa, threads), dft(fb, threads), eq, eps1, delta);
}

} // namespace siftroth
