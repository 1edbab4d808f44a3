#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "algebra.hpp"
#include "error.hpp"
#include "harmonic.hpp"
#include "random.hpp"
#include "transference.hpp"

namespace siftroth {

struct ExtremalEntry {
    std::size_t m = 0;
    std::size_t size = 0;               ///< r_L(m)
    std::vector<std::int64_t> witness;  ///< L-free subset of [1, m] of that size
};

/// r_L(m) with witnesses for m = 1..max_m.
class ExtremalTable {
public:
    ExtremalTable(TranslationInvariantEquation eq, std::vector<ExtremalEntry> entries)
        : eq_(std::move(eq)), entries_(std::move(entries))
    {
    }

    const TranslationInvariantEquation& equation() const noexcept { return eq_; }
    std::size_t max_m() const noexcept { return entries_.size(); }
    const std::vector<ExtremalEntry>& entries() const noexcept { return entries_; }

    const ExtremalEntry& at(std::size_t m) const
    {
        if (m < 1 || m > entries_.size())
            throw Error(Errc::out_of_table, "m=" + std::to_string(m) + " outside [1, " + std::to_string(entries_.size()) + "]");
        return entries_[m - 1];
    }
    std::size_t r(std::size_t m) const { return at(m).size; }

private:
    TranslationInvariantEquation eq_;
    std::vector<ExtremalEntry> entries_;
};

inline constexpr std::size_t default_table_guard = 40;

namespace detail {

/// Depth-first search for an L-free subset of [1, m] of a target size that
/// contains 1 and m. Elements are tried in increasing order, inclusion first.
class LFreeSearch {
public:
    LFreeSearch(const TranslationInvariantEquation& eq, std::size_t m, std::span<const std::size_t> r_prefix)
        : coeffs_(eq.coeffs()), m_(m), r_(r_prefix), member_(m + 1, 0)
    {
    }

    std::optional<std::vector<std::int64_t>> find(std::size_t target)
    {
        target_ = target;
        chosen_.clear();
        std::fill(member_.begin(), member_.end(), 0);
        if (!try_add(1))
            return std::nullopt;
        if (m_ > 1 && !try_add(static_cast<std::int64_t>(m_)))
            return std::nullopt;
        if (chosen_.size() >= target_)
            return sorted_choice();
        if (dfs(2))
            return sorted_choice();
        return std::nullopt;
    }

    /// True when x together with the current set has no nontrivial solution
    /// using x.
    bool admits(std::int64_t x)
    {
        member_[static_cast<std::size_t>(x)] = 1;
        chosen_.push_back(x);
        const bool ok = !solution_through(x);
        chosen_.pop_back();
        member_[static_cast<std::size_t>(x)] = 0;
        return ok;
    }

private:
    std::vector<std::int64_t> sorted_choice() const
    {
        auto w = chosen_;
        std::sort(w.begin(), w.end());
        return w;
    }

    bool in_set(std::int64_t v) const
    {
        return v >= 1 && v <= static_cast<std::int64_t>(m_) && member_[static_cast<std::size_t>(v)];
    }

    /// Some solution in the current set with x at some position.
    bool solution_through(std::int64_t x) const
    {
        const std::size_t s = coeffs_.size();
        std::vector<std::int64_t> tuple(s);
        for (std::size_t i = 0; i < s; ++i) {
            const std::size_t j = (i == s - 1) ? s - 2 : s - 1; // solved position
            std::vector<std::size_t> free;
            for (std::size_t q = 0; q < s; ++q)
                if (q != i && q != j)
                    free.push_back(q);
            std::vector<std::size_t> idx(free.size(), 0);
            while (true) {
                std::int64_t lin = coeffs_[i] * x;
                bool all_x = true;
                for (std::size_t q = 0; q < free.size(); ++q) {
                    const auto v = chosen_[idx[q]];
                    lin += coeffs_[free[q]] * v;
                    all_x = all_x && v == x;
                }
                if (lin % coeffs_[j] == 0) {
                    const std::int64_t v = -lin / coeffs_[j];
                    if (in_set(v) && !(all_x && v == x))
                        return true;
                }
                std::size_t pos = free.size();
                while (pos > 0) {
                    if (++idx[pos - 1] < chosen_.size())
                        break;
                    idx[pos - 1] = 0;
                    --pos;
                }
                if (pos == 0)
                    break;
            }
        }
        return false;
    }

    bool try_add(std::int64_t x)
    {
        if (member_[static_cast<std::size_t>(x)])
            return true;
        member_[static_cast<std::size_t>(x)] = 1;
        chosen_.push_back(x);
        if (solution_through(x)) {
            chosen_.pop_back();
            member_[static_cast<std::size_t>(x)] = 0;
            return false;
        }
        return true;
    }

    bool dfs(std::size_t x)
    {
        if (chosen_.size() >= target_)
            return true;
        if (x >= m_)
            return false;
        // elements still available lie in [x, m-1], a translate of [1, m-x]
        const std::size_t room = m_ - x;
        if (chosen_.size() + r_[room - 1] < target_)
            return false;
        const auto xi = static_cast<std::int64_t>(x);
        if (try_add(xi)) {
            if (dfs(x + 1))
                return true;
            chosen_.pop_back();
            member_[x] = 0;
        }
        return dfs(x + 1);
    }

    const std::vector<std::int64_t>& coeffs_;
    std::size_t m_;
    std::span<const std::size_t> r_;
    std::vector<unsigned char> member_;
    std::vector<std::int64_t> chosen_;
    std::size_t target_ = 0;
};

} // namespace detail

/// Exact r_L(m) for m = 1..max_m. Each step asks whether an L-free set of
/// size r_L(m-1)+1 exists in [1, m]; such a set must contain both 1 and m.
inline ExtremalTable build_extremal_table(const TranslationInvariantEquation& eq, std::size_t max_m,
                                          std::size_t guard = default_table_guard)
{
    if (max_m < 1)
        throw Error(Errc::invalid_argument, "table needs m >= 1");
    if (max_m > guard)
        throw Error(Errc::guard_exceeded, "m=" + std::to_string(max_m) + " exceeds the search guard " + std::to_string(guard));
    std::vector<ExtremalEntry> entries;
    std::vector<std::size_t> r;
    entries.push_back({1, 1, {1}});
    r.push_back(1);
    for (std::size_t m = 2; m <= max_m; ++m) {
        detail::LFreeSearch search(eq, m, r);
        auto found = search.find(r.back() + 1);
        if (found) {
            entries.push_back({m, found->size(), std::move(*found)});
        } else {
            auto prev = entries.back();
            prev.m = m;
            entries.push_back(std::move(prev));
        }
        r.push_back(entries.back().size);
    }
    return ExtremalTable(eq, std::move(entries));
}

struct LFreeMaximum {
    std::size_t size = 0;
    std::vector<std::int64_t> witness;
};

inline LFreeMaximum max_Lfree(std::size_t m, const TranslationInvariantEquation& eq, std::size_t guard = default_table_guard)
{
    const auto table = build_extremal_table(eq, m, guard);
    const auto& e = table.at(m);
    return {e.size, e.witness};
}

/// Versioned text form: a header line, then "m r w1,w2,..." per row.
inline void write_table(std::ostream& os, const ExtremalTable& table)
{
    os << "# sift-roth extremal-table v1 L=";
    const auto& c = table.equation().coeffs();
    for (std::size_t i = 0; i < c.size(); ++i)
        os << (i ? "," : "") << c[i];
    os << '\n';
    for (const auto& e : table.entries()) {
        os << e.m << ' ' << e.size << ' ';
        for (std::size_t i = 0; i < e.witness.size(); ++i)
            os << (i ? "," : "") << e.witness[i];
        os << '\n';
    }
}

inline ExtremalTable read_table(std::istream& is)
{
    std::string line;
    const std::string prefix = "# sift-roth extremal-table v1 L=";
    if (!std::getline(is, line) || line.rfind(prefix, 0) != 0)
        throw Error(Errc::parse, "missing extremal-table v1 header");
    std::vector<std::int64_t> coeffs;
    {
        std::stringstream ss(line.substr(prefix.size()));
        std::string tok;
        while (std::getline(ss, tok, ','))
            coeffs.push_back(std::stoll(tok));
    }
    TranslationInvariantEquation eq(coeffs);
    std::vector<ExtremalEntry> entries;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::stringstream ss(line);
        ExtremalEntry e;
        std::string wit;
        if (!(ss >> e.m >> e.size >> wit))
            throw Error(Errc::parse, "bad table row: " + line);
        std::stringstream ws(wit);
        std::string tok;
        while (std::getline(ws, tok, ','))
            e.witness.push_back(std::stoll(tok));
        if (e.m != entries.size() + 1 || e.witness.size() != e.size)
            throw Error(Errc::parse, "inconsistent table row: " + line);
        entries.push_back(std::move(e));
    }
    if (entries.empty())
        throw Error(Errc::parse, "empty extremal table");
    return ExtremalTable(std::move(eq), std::move(entries));
}

/// ghat(m) = max_{m <= m' <= maxM} (r_L(m') + 1) / m'.
class EnvelopeG {
public:
    explicit EnvelopeG(const ExtremalTable& table) : suffix_max_(table.max_m())
    {
        double best = 0;
        for (std::size_t m = table.max_m(); m >= 1; --m) {
            best = std::max(best, static_cast<double>(table.r(m) + 1) / static_cast<double>(m));
            suffix_max_[m - 1] = best;
        }
    }

    std::size_t max_m() const noexcept { return suffix_max_.size(); }

    double operator()(std::size_t m) const
    {
        if (m < 1 || m > suffix_max_.size())
            throw Error(Errc::out_of_table, "m=" + std::to_string(m) + " outside [1, " + std::to_string(max_m()) + "]");
        return suffix_max_[m - 1];
    }

private:
    std::vector<double> suffix_max_;
};

inline EnvelopeG gL_envelope(const ExtremalTable& table) { return EnvelopeG(table); }

/// c ((log log N)^5 / log N)^{s-2}, from log N.
inline double gL_bloom_log(double log_n, double c, std::size_t s)
{
    if (!(log_n > std::exp(1.0)))
        throw Error(Errc::domain, "Bloom g needs N > e^e");
    const double ll = std::log(log_n);
    return c * std::pow(std::pow(ll, 5.0) / log_n, static_cast<double>(s) - 2.0);
}

inline double gL_bloom(double n, double c, std::size_t s)
{
    if (!(n > 0))
        throw Error(Errc::domain, "Bloom g needs N > e^e");
    return gL_bloom_log(std::log(n), c, s);
}

/// Smallest m with ghat(m) <= eta.
inline std::size_t g_star_inverse(double eta, const EnvelopeG& g)
{
    for (std::size_t m = 1; m <= g.max_m(); ++m)
        if (g(m) <= eta)
            return m;
    throw Error(Errc::saturation, "ghat > " + std::to_string(eta) + " on the whole table [1, " + std::to_string(g.max_m()) + "]");
}

/// log N where the Bloom tail begins: N = e^{e^5}.
inline const double bloom_tail_log_start = std::exp(5.0);

struct BloomInverse {
    double log_n = 0;                 ///< log of the smallest N on the tail with g(N) <= eta
    std::optional<std::uint64_t> n;   ///< the integer itself when it fits in 64 bits
};

/// g*^{-1} for Bloom's g on its monotone tail N >= e^{e^5}, by doubling and
/// bisection in log N.
inline BloomInverse g_star_inverse_bloom(double eta, double c, std::size_t s)
{
    if (!(eta > 0))
        throw Error(Errc::domain, "eta must be positive");
    const double u0 = bloom_tail_log_start;
    if (gL_bloom_log(u0, c, s) <= eta)
        throw Error(Errc::domain, "g <= eta already at the start of the monotone tail N = e^{e^5}");
    double lo = u0, hi = 2 * u0;
    while (gL_bloom_log(hi, c, s) > eta) {
        lo = hi;
        hi *= 2;
        if (!std::isfinite(hi) || hi > 1e300)
            throw Error(Errc::saturation, "Bloom g never reaches " + std::to_string(eta) + " for log N <= 1e300");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (gL_bloom_log(mid, c, s) <= eta ? hi : lo) = mid;
    }
    BloomInverse out{hi, std::nullopt};
    if (hi < 43.0) {
        auto n = static_cast<std::uint64_t>(std::ceil(std::exp(hi)));
        while (n > 1 && gL_bloom(static_cast<double>(n - 1), c, s) <= eta)
            --n;
        out.n = n;
    }
    return out;
}

/// c_1 with g*^{-1}(eta) = exp(c_1 eta^{-1/(s-2)} log^6 log(1/eta)).
inline double bloom_c1(double eta, double c, std::size_t s)
{
    if (s < 3)
        throw Error(Errc::domain, "bloom_c1 needs s >= 3");
    if (!(eta > 0 && eta < std::exp(-1.0)))
        throw Error(Errc::domain, "bloom_c1 needs 0 < eta < 1/e");
    const auto inv = g_star_inverse_bloom(eta, c, s);
    const double denom = std::pow(eta, -1.0 / (static_cast<double>(s) - 2.0)) * std::pow(std::log(std::log(1.0 / eta)), 6.0);
    return inv.log_n / denom;
}

/// eta / (2 g*^{-1}(eta/2))^2.
inline double hL_varnavides(double eta, std::size_t t)
{
    if (!(eta > 0 && eta <= 1))
        throw Error(Errc::domain, "h_L needs 0 < eta <= 1");
    const double d = 2.0 * static_cast<double>(t);
    return eta / (d * d);
}

inline double hL_varnavides(double eta, const EnvelopeG& g)
{
    if (!(eta > 0 && eta <= 1))
        throw Error(Errc::domain, "h_L needs 0 < eta <= 1");
    return hL_varnavides(eta, g_star_inverse(eta / 2, g));
}

/// log h_L(eta) for Bloom's g, where h itself underflows.
inline double hL_varnavides_bloom_log(double eta, double c, std::size_t s)
{
    if (!(eta > 0 && eta <= 1))
        throw Error(Errc::domain, "h_L needs 0 < eta <= 1");
    const auto inv = g_star_inverse_bloom(eta / 2, c, s);
    // g*^{-1} is an integer near e^{log_n}; log(2 g*^{-1})^2 = 2 (log 2 + log_n)
    return std::log(eta) - 2.0 * (std::log(2.0) + inv.log_n);
}

/// exp(-c eta^{-1} log^6 log(1/eta)), with the log log factor taken as 1
/// for eta >= e^{-e}.
inline double hL_closed_form(double eta, double c)
{
    if (!(eta > 0 && eta <= 1))
        throw Error(Errc::domain, "h_L needs 0 < eta <= 1");
    const double ll = eta >= std::exp(-std::exp(1.0)) ? 1.0 : std::log(std::log(1.0 / eta));
    return std::exp(-c / eta * std::pow(ll, 6.0));
}

struct GoodProgressions {
    std::uint64_t count = 0;
    std::vector<std::uint64_t> sampled_d0;
    bool averaging_identity_holds = true;
};

/// Counts (a, d != 0) with card(D ∩ {a+d, ..., a+td}) >= (eta/2) t.
inline GoodProgressions count_good_progressions(std::span<const std::uint64_t> d_set, std::uint64_t p, std::size_t t,
                                                double eta, Rng& rng)
{
    if (t < 1 || t >= p)
        throw Error(Errc::domain, "good progressions need 1 <= t < P");
    std::vector<unsigned char> in_d(p, 0);
    for (auto x : d_set)
        in_d[x % p] = 1;
    std::uint64_t card_d = 0;
    for (auto v : in_d)
        card_d += v;

    // window[d][a] = card(D ∩ I_{a,d}) via a sliding window along a, a+d, ...
    auto window_counts = [&](std::uint64_t d) {
        std::vector<std::uint64_t> counts(p, 0);
        std::vector<std::uint64_t> seq(p);
        for (std::uint64_t j = 0; j < p; ++j)
            seq[j] = detail::mul_mod(j, d, p);
        std::uint64_t w = 0;
        for (std::size_t j = 1; j <= t; ++j)
            w += in_d[seq[j % p]];
        for (std::uint64_t j = 0; j < p; ++j) {
            counts[seq[j]] = w;
            w -= in_d[seq[(j + 1) % p]];
            w += in_d[seq[(j + t + 1) % p]];
        }
        return counts;
    };

    GoodProgressions out;
    const double need = eta / 2.0 * static_cast<double>(t);
    for (std::uint64_t d = 1; d < p; ++d)
        for (auto c : window_counts(d))
            if (static_cast<double>(c) >= need)
                ++out.count;
    for (int trial = 0; trial < 5; ++trial) {
        const std::uint64_t d0 = 1 + uniform_index(rng, p - 1);
        out.sampled_d0.push_back(d0);
        std::uint64_t sum = 0;
        for (auto c : window_counts(d0))
            sum += c;
        if (sum != t * card_d)
            out.averaging_identity_holds = false;
    }
    return out;
}

struct VarnavidesCheck {
    std::uint64_t solutions = 0;   ///< ordered tuples in D^s, trivial ones included
    std::uint64_t nontrivial = 0;
    std::size_t t = 0;             ///< g*^{-1}(eta/2), or 0 when only t >= P is known
    bool degenerate = false;       ///< t >= P: the bound reduces to one trivial solution
    double lower_bound = 0;
    bool pass = false;
};

/// Solution count in D against (eta/2) P(P-1) / t^2, t = g*^{-1}(eta/2).
inline VarnavidesCheck varnavides_check(std::span<const std::uint64_t> d_set, std::uint64_t p,
                                        const TranslationInvariantEquation& eq, double eta, const EnvelopeG& g,
                                        unsigned threads = 1)
{
    std::vector<std::uint64_t> d(d_set.begin(), d_set.end());
    for (auto& x : d)
        x %= p;
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    if (!(eta > 0 && eta <= 1) || static_cast<double>(d.size()) < eta * static_cast<double>(p))
        throw Error(Errc::invalid_argument, "varnavides_check needs card(D) >= eta P");

    VarnavidesCheck out;
    out.solutions = count_solutions_in_set(d, eq, p, threads);
    out.nontrivial = out.solutions - d.size();
    try {
        out.t = g_star_inverse(eta / 2, g);
        out.degenerate = out.t >= p;
    } catch (const Error& e) {
        if (e.code() != Errc::saturation || g.max_m() + 1 < p)
            throw;
        out.t = 0;
        out.degenerate = true;
    }
    if (out.degenerate) {
        out.lower_bound = 1;
    } else {
        const double td = static_cast<double>(out.t);
        out.lower_bound = eta / 2.0 * static_cast<double>(p) * static_cast<double>(p - 1) / (td * td);
    }
    out.pass = static_cast<double>(out.solutions) >= out.lower_bound;
    return out;
}

inline constexpr double solution_search_guard = 4e9;

/// Lexicographically first tuple in A^s (A sorted ascending) solving L and
/// not constant; exact over Z or modulo P.
inline std::optional<std::vector<std::int64_t>> find_nontrivial_solution(std::span<const std::int64_t> a,
                                                                         const TranslationInvariantEquation& eq,
                                                                         Ambient ambient = Ambient::integers())
{
    std::vector<std::int64_t> elems;
    for (auto x : a)
        elems.push_back(ambient.is_cyclic() ? static_cast<std::int64_t>(detail::reduce(x, ambient.modulus)) : x);
    std::sort(elems.begin(), elems.end());
    elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
    if (elems.size() < 2)
        return std::nullopt;

    const auto& c = eq.coeffs();
    const std::size_t s = c.size();
    const std::uint64_t p = ambient.modulus;
    const BigInt bp(p);
    bool solve_last = true;
    std::uint64_t inv_last = 0;
    if (ambient.is_cyclic()) {
        const auto cl = detail::reduce(c[s - 1], p);
        solve_last = std::gcd(cl, p) == 1;
        if (solve_last)
            inv_last = detail::inverse_mod(cl, p);
    }
    const std::size_t free_vars = solve_last ? s - 1 : s;
    if (std::pow(static_cast<double>(elems.size()), static_cast<double>(free_vars)) > solution_search_guard)
        throw Error(Errc::guard_exceeded, "card(A)^" + std::to_string(free_vars) + " tuples");

    std::vector<std::size_t> idx(free_vars, 0);
    std::vector<std::int64_t> tuple(s);
    while (true) {
        BigInt lin = 0;
        bool all_equal = true;
        for (std::size_t i = 0; i < free_vars; ++i) {
            tuple[i] = elems[idx[i]];
            lin += BigInt(c[i]) * tuple[i];
            all_equal = all_equal && tuple[i] == tuple[0];
        }
        bool hit = false;
        if (!solve_last) {
            BigInt r = lin % bp;
            hit = r == 0 && !all_equal;
        } else if (ambient.is_cyclic()) {
            BigInt r = ((-lin) % bp + bp) % bp;
            const std::uint64_t v = detail::mul_mod(r.convert_to<std::uint64_t>(), inv_last, p);
            const auto vi = static_cast<std::int64_t>(v);
            if (std::binary_search(elems.begin(), elems.end(), vi) && !(all_equal && vi == tuple[0])) {
                tuple[s - 1] = vi;
                hit = true;
            }
        } else {
            const BigInt cl(c[s - 1]);
            if (lin % cl == 0) {
                const BigInt v = -lin / cl;
                if (v >= elems.front() && v <= elems.back()) {
                    const auto vi = v.convert_to<std::int64_t>();
                    if (std::binary_search(elems.begin(), elems.end(), vi) && !(all_equal && vi == tuple[0])) {
                        tuple[s - 1] = vi;
                        hit = true;
                    }
                }
            }
        }
        if (hit)
            return tuple;
        std::size_t pos = free_vars;
        while (pos > 0) {
            if (++idx[pos - 1] < elems.size())
                break;
            idx[pos - 1] = 0;
            --pos;
        }
        if (pos == 0)
            return std::nullopt;
    }
}

/// Unspecified constants of the density-increment chain.
struct Constants {
    double c1 = 1;
    double c2 = 1;
    double cFL = 1;
    double cF = 1;
    std::size_t table_max = 40;
    std::uint64_t prime_cutoff = 1000;
};

struct Epsilons {
    double eps1 = 0;
    double eps2 = 0;
    double h = 0;        ///< h_L(c2 delta^{l/(l-1)})
    double lhs = 0;      ///< eps1^{-3} c(F,L) delta^{-3} log(eps2)
    double rhs = 0;      ///< -(log P) / 2
    bool feasible = false;
};

/// eps2 = delta^s c1 h_L(c2 delta^{l/(l-1)}) / c(F,L), eps1 = eps2^2, and
/// the feasibility inequality at P.
inline Epsilons choose_epsilons(double delta, std::size_t s, unsigned l, const std::function<double(double)>& h_l,
                                const Constants& k, std::uint64_t p)
{
    if (!(delta > 0 && delta <= 1))
        throw Error(Errc::domain, "choose_epsilons needs 0 < delta <= 1");
    if (l < 2)
        throw Error(Errc::domain, "choose_epsilons needs l >= 2");
    const double ld = static_cast<double>(l);
    const double eta = k.c2 * std::pow(delta, ld / (ld - 1.0));
    Epsilons out;
    out.h = h_l(eta);
    if (!(out.h > 0))
        throw Error(Errc::degenerate_epsilon, "h_L(" + std::to_string(eta) + ") evaluates to 0");
    out.eps2 = std::pow(delta, static_cast<double>(s)) * k.c1 * out.h / k.cFL;
    out.eps1 = out.eps2 * out.eps2;
    if (!(out.eps1 > 0))
        throw Error(Errc::degenerate_epsilon, "eps1 underflows");
    out.lhs = std::pow(out.eps1, -3.0) * k.cFL / std::pow(delta, 3.0) * std::log(out.eps2);
    out.rhs = -std::log(static_cast<double>(p)) / 2.0;
    out.feasible = out.lhs >= out.rhs;
    return out;
}

} // namespace siftroth
