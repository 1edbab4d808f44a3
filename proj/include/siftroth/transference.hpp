#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "algebra.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "primes.hpp"

namespace siftroth {

/// z = (log N) / 3, the W-trick cutoff.
inline double default_z(double n_max)
{
    if (n_max < 2)
        throw Error(Errc::domain, "default_z needs N >= 2");
    return std::log(n_max) / 3.0;
}

/// b -> { n in A : n = b mod M } for every residue b that occurs.
inline std::map<std::uint64_t, std::vector<std::int64_t>> partition_residues(std::span<const std::int64_t> a,
                                                                             std::uint64_t m)
{
    if (m < 1)
        throw Error(Errc::invalid_argument, "modulus must be >= 1");
    std::map<std::uint64_t, std::vector<std::int64_t>> classes;
    for (auto n : a)
        classes[detail::reduce(n, m)].push_back(n);
    return classes;
}

namespace detail {

/// F(b) mod p computed factor by factor.
inline std::uint64_t eval_mod(const FactoredPolynomial& f, std::uint64_t b, std::uint64_t p)
{
    std::uint64_t v = 1 % p;
    for (const auto& lf : f.factors()) {
        const std::uint64_t term = (mul_mod(mod_u64(lf.a, p), b % p, p) + mod_u64(lf.b, p)) % p;
        v = mul_mod(v, term, p);
    }
    return v;
}

inline bool coprime_to_primes(const FactoredPolynomial& f, std::uint64_t b, std::span<const std::uint64_t> primes)
{
    return std::all_of(primes.begin(), primes.end(), [&](std::uint64_t p) { return eval_mod(f, b, p) != 0; });
}

} // namespace detail

/// Number of b in [0, M) with gcd(F(b), M) = 1 by direct scan.
inline std::uint64_t count_coprime_residues_brute(const FactoredPolynomial& f, double z)
{
    const auto primes = primes_up_to_real(z);
    const std::uint64_t m = primorial(z);
    std::uint64_t count = 0;
    for (std::uint64_t b = 0; b < m; ++b)
        if (detail::coprime_to_primes(f, b, primes))
            ++count;
    return count;
}

inline constexpr std::uint64_t brute_crosscheck_limit = 1'000'000;

/// prod_{p <= z} (p - nu_p), the CRT count of b mod M = P(z) with
/// gcd(F(b), M) = 1. Cross-checked by scanning when M <= 10^6.
inline std::uint64_t count_coprime_residues(const FactoredPolynomial& f, double z)
{
    std::uint64_t count = 1;
    for (auto p : primes_up_to_real(z))
        count *= p - nu_p(f, p);
    if (primorial(z) <= brute_crosscheck_limit) {
        const auto brute = count_coprime_residues_brute(f, z);
        if (brute != count)
            throw Error(Errc::invalid_argument, "CRT count " + std::to_string(count) + " disagrees with scan " +
                                                    std::to_string(brute));
    }
    return count;
}

/// Residue-class selection of the W-trick.
struct WTrickContext {
    std::int64_t n_max = 0;
    double z = 0;
    std::uint64_t modulus = 1; ///< M = P(z)
    std::size_t degree = 1;    ///< k
    double delta = 1;          ///< relative density of A in the sifted set
    std::size_t source_card = 0;
    std::uint64_t coprime_residues = 1;
    std::map<std::uint64_t, std::vector<std::int64_t>> classes;
    std::uint64_t b0 = 0;
    /// { n : b0 + n M in A }, ascending.
    std::vector<std::int64_t> normalized;

    std::size_t class_card() const { return normalized.size(); }
};

/// Picks b0 with gcd(F(b0), M) = 1 maximising card(A_b0); ties go to the
/// smallest b0. Every nonempty class must have gcd(F(b), M) = 1, which holds
/// whenever A was sifted at a level >= z.
inline WTrickContext select_b0(std::span<const std::int64_t> a, const FactoredPolynomial& f, std::int64_t n_max,
                               double z, double delta)
{
    if (a.empty())
        throw Error(Errc::empty_set, "W-trick needs a nonempty set");
    WTrickContext ctx;
    ctx.n_max = n_max;
    ctx.z = z;
    ctx.modulus = primorial(z);
    ctx.degree = f.degree();
    ctx.delta = delta;
    ctx.source_card = a.size();
    ctx.coprime_residues = count_coprime_residues(f, z);
    ctx.classes = partition_residues(a, ctx.modulus);

    const auto primes = primes_up_to_real(z);
    bool found = false;
    for (const auto& [b, members] : ctx.classes) {
        if (!detail::coprime_to_primes(f, b, primes))
            throw Error(Errc::containment_violation,
                        "class b=" + std::to_string(b) + " is nonempty but gcd(F(b), M) > 1; A is not sifted at level z");
        if (!found || members.size() > ctx.classes[ctx.b0].size()) {
            ctx.b0 = b;
            found = true;
        }
    }
    if (!found)
        throw Error(Errc::empty_set, "no coprime residue class is populated");

    const auto m = static_cast<std::int64_t>(ctx.modulus);
    for (auto n : ctx.classes[ctx.b0])
        ctx.normalized.push_back((n - static_cast<std::int64_t>(ctx.b0)) / m);
    std::sort(ctx.normalized.begin(), ctx.normalized.end());
    return ctx;
}

/// card(A_b0) M (log N)^k / (N delta (log log N)^k), the empirical c(F).
inline double wtrick_gain(const WTrickContext& ctx)
{
    const double n = static_cast<double>(ctx.n_max);
    if (!(n > std::exp(std::exp(1.0))))
        throw Error(Errc::domain, "W-trick gain needs N > e^e");
    if (!(ctx.delta > 0))
        throw Error(Errc::domain, "W-trick gain needs delta > 0");
    const double k = static_cast<double>(ctx.degree);
    return static_cast<double>(ctx.class_card()) * static_cast<double>(ctx.modulus) * std::pow(std::log(n), k) /
           (n * ctx.delta * std::pow(std::log(std::log(n)), k));
}

/// Smallest prime P in [cN/M, 2cN/M], c the positive-coefficient sum of L.
inline std::uint64_t choose_modulus(std::int64_t n_max, std::uint64_t m, const TranslationInvariantEquation& eq)
{
    const auto c = static_cast<unsigned __int128>(eq.positive_sum());
    const auto num = c * static_cast<unsigned __int128>(n_max);
    if (num < 5 * static_cast<unsigned __int128>(m))
        throw Error(Errc::domain, "choose_modulus needs cN/M >= 5");
    const auto lo = static_cast<std::uint64_t>((num + m - 1) / m);
    const auto hi = static_cast<std::uint64_t>(2 * num / m);
    const auto p = smallest_prime_in(lo, hi);
    if (!p)
        throw Error(Errc::no_prime_in_interval, "[" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return *p;
}

/// A' = image of a set of residues in [0, P) inside Z/PZ.
struct ProjectedSet {
    std::uint64_t modulus = 0;
    std::vector<std::uint64_t> elements;
    std::vector<std::int64_t> source;
};

inline ProjectedSet project(std::span<const std::int64_t> normalized, std::uint64_t p)
{
    ProjectedSet out{p, {}, {normalized.begin(), normalized.end()}};
    for (auto n : normalized) {
        if (n < 0 || static_cast<std::uint64_t>(n) >= p)
            throw Error(Errc::injectivity_violation, std::to_string(n) + " outside [0, " + std::to_string(p) + ")");
        out.elements.push_back(static_cast<std::uint64_t>(n));
    }
    std::sort(out.elements.begin(), out.elements.end());
    if (std::adjacent_find(out.elements.begin(), out.elements.end()) != out.elements.end())
        throw Error(Errc::injectivity_violation, "repeated element");
    return out;
}

/// S' = pi((S - S) ∩ Z) with 0 adjoined; symmetric.
struct ForbiddenDifferences {
    std::uint64_t modulus = 0;
    std::vector<std::uint64_t> elements;

    bool contains(std::uint64_t x) const { return std::binary_search(elements.begin(), elements.end(), x % modulus); }
};

inline ForbiddenDifferences make_forbidden_differences(std::uint64_t p, std::vector<std::uint64_t> elems)
{
    elems.push_back(0);
    const auto n = elems.size();
    for (std::size_t i = 0; i < n; ++i)
        elems.push_back((p - elems[i] % p) % p);
    for (auto& e : elems)
        e %= p;
    std::sort(elems.begin(), elems.end());
    elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
    return {p, std::move(elems)};
}

inline ForbiddenDifferences forbidden_differences(const FactoredPolynomial& f, std::uint64_t b0, std::uint64_t m,
                                                  std::uint64_t p)
{
    const auto g = shift_compose(f, BigInt(b0), BigInt(m)).poly;
    std::vector<std::uint64_t> elems;
    for (const auto& d : root_data(g).integer_root_differences)
        elems.push_back(detail::mod_u64(d, p));
    return make_forbidden_differences(p, std::move(elems));
}

/// Ambient group for set arithmetic: Z (modulus 0) or Z/PZ.
struct Ambient {
    std::uint64_t modulus = 0;

    static Ambient integers() { return {0}; }
    static Ambient cyclic(std::uint64_t p) { return {p}; }
    bool is_cyclic() const noexcept { return modulus != 0; }
};

/// (A + h_1) ∩ ... ∩ (A + h_r), ascending. In Z/PZ the elements of A are
/// taken as residues.
inline std::vector<std::int64_t> shifted_intersection(std::span<const std::int64_t> a,
                                                      std::span<const std::int64_t> shifts, Ambient ambient)
{
    if (shifts.empty())
        throw Error(Errc::invalid_argument, "need at least one shift");
    auto norm = [&](std::int64_t x) {
        return ambient.is_cyclic() ? static_cast<std::int64_t>(detail::reduce(x, ambient.modulus)) : x;
    };
    std::vector<std::int64_t> base;
    base.reserve(a.size());
    for (auto x : a)
        base.push_back(norm(x));
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());

    std::vector<std::int64_t> out;
    for (auto x : base) {
        const std::int64_t candidate = norm(x + shifts.front());
        bool all = true;
        for (std::size_t i = 1; i < shifts.size() && all; ++i)
            all = std::binary_search(base.begin(), base.end(), norm(candidate - shifts[i]));
        if (all)
            out.push_back(candidate);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Connected components of the graph on indices of y, i ~ j iff
/// y_i - y_j is in S'.
struct Components {
    std::size_t count = 0;
    /// Least index of each component, ascending.
    std::vector<std::size_t> representatives;
    /// Component id (index into representatives) for every position.
    std::vector<std::size_t> label;
};

inline Components component_analysis(std::span<const std::uint64_t> y, const ForbiddenDifferences& s)
{
    const std::size_t l = y.size();
    std::vector<std::size_t> parent(l);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (parent[i] != i)
            i = parent[i] = parent[parent[i]];
        return i;
    };
    const auto p = s.modulus;
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = i + 1; j < l; ++j)
            if (s.contains((y[i] % p + p - y[j] % p) % p)) {
                auto ri = find(i), rj = find(j);
                if (ri != rj)
                    parent[std::max(ri, rj)] = std::min(ri, rj);
            }
    Components out;
    out.label.resize(l);
    std::vector<std::size_t> id_of_root(l, SIZE_MAX);
    for (std::size_t i = 0; i < l; ++i) {
        const auto r = find(i);
        if (id_of_root[r] == SIZE_MAX) {
            id_of_root[r] = out.representatives.size();
            out.representatives.push_back(i);
        }
        out.label[i] = id_of_root[r];
    }
    out.count = out.representatives.size();
    return out;
}

/// The l-fold sumset S' + ... + S' as a membership bitmap over Z/PZ.
inline std::vector<bool> iterated_sumset(const ForbiddenDifferences& s, std::size_t l)
{
    const auto p = s.modulus;
    std::vector<bool> acc(p, false);
    acc[0] = true;
    for (std::size_t step = 0; step < l; ++step) {
        std::vector<bool> next(p, false);
        for (std::uint64_t x = 0; x < p; ++x)
            if (acc[x])
                for (auto e : s.elements)
                    next[(x + e) % p] = true;
        acc = std::move(next);
    }
    return acc;
}

inline constexpr std::uint64_t tuple_enumeration_guard = 10'000'000;

/// Component statistics over all of B^l.
struct ComponentHistogram {
    std::size_t l = 0;
    std::size_t card_b = 0;
    std::size_t t = 0;                ///< card(S')
    std::vector<std::uint64_t> count; ///< count[r] for r = 0..l (count[0] = 0)
    std::vector<double> sharp_ratio;  ///< count[r] / card(B)^r
    bool count_bound_holds = true;    ///< count[r] <= C(l,r) (r t)^{2 l^2} card(B)^r for all r
    bool sumset_property_holds = true; ///< same-component differences lie in l S'
};

inline ComponentHistogram component_histogram(std::span<const std::uint64_t> b, std::size_t l,
                                              const ForbiddenDifferences& s, unsigned threads = 1)
{
    if (b.empty() || l == 0)
        throw Error(Errc::invalid_argument, "component histogram needs nonempty B and l >= 1");
    const double total = std::pow(static_cast<double>(b.size()), static_cast<double>(l));
    if (total > static_cast<double>(tuple_enumeration_guard))
        throw Error(Errc::guard_exceeded, "card(B)^l = " + std::to_string(total));

    const auto p = s.modulus;
    const auto sumset = iterated_sumset(s, l);
    const std::size_t nb = b.size();
    struct Partial {
        std::vector<std::uint64_t> count;
        bool sumset_ok = true;
    };
    std::vector<Partial> partial(nb);
    parallel_for(0, static_cast<std::int64_t>(nb), threads, [&](std::int64_t first) {
        Partial& mine = partial[static_cast<std::size_t>(first)];
        mine.count.assign(l + 1, 0);
        std::vector<std::size_t> idx(l, 0);
        idx[0] = static_cast<std::size_t>(first);
        std::vector<std::uint64_t> y(l);
        while (true) {
            for (std::size_t i = 0; i < l; ++i)
                y[i] = b[idx[i]] % p;
            const auto comp = component_analysis(y, s);
            ++mine.count[comp.count];
            for (std::size_t i = 0; i < l && mine.sumset_ok; ++i)
                for (std::size_t j = i + 1; j < l; ++j)
                    if (comp.label[i] == comp.label[j] && !sumset[(y[i] + p - y[j]) % p]) {
                        mine.sumset_ok = false;
                        break;
                    }
            // advance coordinates 1..l-1 as an odometer; coordinate 0 is fixed
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

    ComponentHistogram out;
    out.l = l;
    out.card_b = nb;
    out.t = s.elements.size();
    out.count.assign(l + 1, 0);
    for (const auto& part : partial) {
        for (std::size_t r = 0; r <= l; ++r)
            out.count[r] += part.count[r];
        out.sumset_property_holds = out.sumset_property_holds && part.sumset_ok;
    }
    out.sharp_ratio.assign(l + 1, 0.0);
    const long double log_b = std::log(static_cast<long double>(nb));
    for (std::size_t r = 1; r <= l; ++r) {
        out.sharp_ratio[r] = static_cast<double>(out.count[r]) / std::pow(static_cast<double>(nb), static_cast<double>(r));
        if (out.count[r] == 0)
            continue;
        const long double log_binom = std::lgamma(static_cast<long double>(l + 1)) -
                                      std::lgamma(static_cast<long double>(r + 1)) -
                                      std::lgamma(static_cast<long double>(l - r + 1));
        const long double log_bound = log_binom +
                                      2.0L * static_cast<long double>(l * l) *
                                          std::log(static_cast<long double>(r * out.t)) +
                                      static_cast<long double>(r) * log_b;
        if (std::log(static_cast<long double>(out.count[r])) > log_bound + 1e-12L)
            out.count_bound_holds = false;
    }
    return out;
}

} // namespace siftroth
