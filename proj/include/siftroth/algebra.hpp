#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "error.hpp"

namespace siftroth {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

namespace detail {

/// Nonnegative residue of x modulo m (m > 0).
inline std::uint64_t mod_u64(const BigInt& x, std::uint64_t m)
{
    BigInt r = x % m;
    if (r < 0)
        r += m;
    return r.convert_to<std::uint64_t>();
}

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m)
{
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

/// Inverse of a modulo m when gcd(a, m) = 1; throws otherwise.
inline std::uint64_t inverse_mod(std::uint64_t a, std::uint64_t m)
{
    std::int64_t old_r = static_cast<std::int64_t>(a % m), r = static_cast<std::int64_t>(m);
    std::int64_t old_s = 1, s = 0;
    while (r != 0) {
        const std::int64_t q = old_r / r;
        old_r -= q * r;
        std::swap(old_r, r);
        old_s -= q * s;
        std::swap(old_s, s);
    }
    if (old_r != 1)
        throw Error(Errc::not_invertible, std::to_string(a) + " mod " + std::to_string(m));
    std::int64_t inv = old_s % static_cast<std::int64_t>(m);
    if (inv < 0)
        inv += static_cast<std::int64_t>(m);
    return static_cast<std::uint64_t>(inv);
}

/// Residue of a signed 64-bit value modulo m.
inline std::uint64_t reduce(std::int64_t x, std::uint64_t m)
{
    const auto mm = static_cast<std::int64_t>(m);
    std::int64_t r = x % mm;
    return static_cast<std::uint64_t>(r < 0 ? r + mm : r);
}

} // namespace detail

/// One factor a*X + b of a product of linear forms.
struct LinearFactor {
    BigInt a;
    BigInt b;

    LinearFactor(BigInt a_, BigInt b_) : a(std::move(a_)), b(std::move(b_))
    {
        if (a == 0)
            throw Error(Errc::invalid_argument, "linear factor with zero X-coefficient");
    }

    BigInt operator()(const BigInt& n) const { return a * n + b; }
    bool operator==(const LinearFactor&) const = default;
};

/// F(X) = prod_i (a_i X + b_i), k >= 1 factors in a fixed order.
class FactoredPolynomial {
public:
    explicit FactoredPolynomial(std::vector<LinearFactor> factors) : factors_(std::move(factors))
    {
        if (factors_.empty())
            throw Error(Errc::invalid_argument, "polynomial needs at least one factor");
    }

    /// Builds from (a_i, b_i) pairs.
    static FactoredPolynomial from_pairs(const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs)
    {
        std::vector<LinearFactor> fs;
        fs.reserve(pairs.size());
        for (auto [a, b] : pairs)
            fs.emplace_back(BigInt(a), BigInt(b));
        return FactoredPolynomial(std::move(fs));
    }

    const std::vector<LinearFactor>& factors() const noexcept { return factors_; }
    std::size_t degree() const noexcept { return factors_.size(); }

    bool operator==(const FactoredPolynomial&) const = default;

private:
    std::vector<LinearFactor> factors_;
};

/// Exact value prod (a_i n + b_i).
inline BigInt evaluate(const FactoredPolynomial& f, const BigInt& n)
{
    BigInt v = 1;
    for (const auto& lf : f.factors())
        v *= lf(n);
    return v;
}

struct Discriminant {
    BigInt delta;       ///< prod a_i * prod_{i != j} (a_i b_j - b_i a_j)
    BigInt delta_prime; ///< delta * prod a_i
};

inline Discriminant discriminant(const FactoredPolynomial& f)
{
    const auto& fs = f.factors();
    BigInt lead = 1;
    for (const auto& lf : fs)
        lead *= lf.a;
    BigInt pairs = 1;
    for (std::size_t i = 0; i < fs.size(); ++i)
        for (std::size_t j = 0; j < fs.size(); ++j)
            if (i != j)
                pairs *= fs[i].a * fs[j].b - fs[i].b * fs[j].a;
    BigInt delta = lead * pairs;
    return {delta, delta * lead};
}

inline bool is_nondegenerate(const FactoredPolynomial& f) { return discriminant(f).delta != 0; }

/// Sorted roots of G modulo the prime p. A factor e X + d with p | e and
/// p | d vanishes identically, so every residue is a root.
inline std::vector<std::uint64_t> roots_mod_p(const FactoredPolynomial& g, std::uint64_t p)
{
    std::vector<std::uint64_t> roots;
    for (const auto& lf : g.factors()) {
        const std::uint64_t e = detail::mod_u64(lf.a, p);
        const std::uint64_t d = detail::mod_u64(lf.b, p);
        if (e == 0) {
            if (d == 0) {
                roots.resize(p);
                std::iota(roots.begin(), roots.end(), std::uint64_t{0});
                return roots;
            }
            continue;
        }
        const std::uint64_t inv = detail::inverse_mod(e, p);
        roots.push_back(detail::mul_mod((p - d) % p, inv, p));
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    return roots;
}

inline std::size_t nu_p(const FactoredPolynomial& g, std::uint64_t p) { return roots_mod_p(g, p).size(); }

namespace detail {

inline bool is_small_prime(std::uint64_t n)
{
    if (n < 2)
        return false;
    for (std::uint64_t d = 2; d * d <= n; ++d)
        if (n % d == 0)
            return false;
    return true;
}

} // namespace detail

/// True iff every prime p leaves some n with p not dividing F(n).
///
/// For p > k at most k residues are roots unless a factor vanishes
/// identically mod p, which happens exactly when p divides gcd(a_i, b_i).
/// So it suffices to scan p <= k and require every factor to be primitive.
inline bool is_admissible(const FactoredPolynomial& f)
{
    for (const auto& lf : f.factors())
        if (boost::multiprecision::gcd(lf.a, lf.b) != 1)
            return false;
    const std::uint64_t k = f.degree();
    for (std::uint64_t p = 2; p <= k; ++p)
        if (detail::is_small_prime(p) && nu_p(f, p) >= p)
            return false;
    return true;
}

/// Rational roots -b_i/a_i (reduced, deduplicated) and the integer
/// differences of distinct roots.
struct RootData {
    std::vector<BigRational> roots;
    std::set<BigInt> integer_root_differences;
};

inline RootData root_data(const FactoredPolynomial& f)
{
    RootData out;
    for (const auto& lf : f.factors())
        out.roots.emplace_back(lf.a < 0 ? BigRational(lf.b, -lf.a) : BigRational(-lf.b, lf.a));
    std::sort(out.roots.begin(), out.roots.end());
    out.roots.erase(std::unique(out.roots.begin(), out.roots.end()), out.roots.end());
    for (const auto& r : out.roots)
        for (const auto& s : out.roots) {
            if (r == s)
                continue;
            const BigRational diff = r - s;
            if (boost::multiprecision::denominator(diff) == 1)
                out.integer_root_differences.insert(boost::multiprecision::numerator(diff));
        }
    return out;
}

/// The finite set (S - S) ∩ Z \ {0} of integer differences of roots.
inline std::set<BigInt> integer_root_differences(const FactoredPolynomial& f)
{
    if (!is_nondegenerate(f))
        throw Error(Errc::degenerate_polynomial, "discriminant is zero");
    return root_data(f).integer_root_differences;
}

struct ShiftComposition {
    FactoredPolynomial poly;
    bool nondegenerate;
};

/// G(X) = F(b + M X); with shifts h_1..h_r, H(X) = prod_j G(X + h_1 - h_j).
inline ShiftComposition shift_compose(const FactoredPolynomial& f, const BigInt& b, const BigInt& m,
                                      const std::vector<BigInt>& shifts = {})
{
    if (m <= 0)
        throw Error(Errc::invalid_argument, "shift_compose needs M >= 1");
    std::vector<LinearFactor> g;
    for (const auto& lf : f.factors())
        g.emplace_back(lf.a * m, lf.a * b + lf.b);
    if (shifts.empty()) {
        FactoredPolynomial poly(std::move(g));
        const bool ok = is_nondegenerate(poly);
        return {std::move(poly), ok};
    }
    std::vector<LinearFactor> h;
    for (const auto& hj : shifts) {
        const BigInt offset = shifts.front() - hj;
        for (const auto& lf : g)
            h.emplace_back(lf.a, lf.b + lf.a * offset);
    }
    FactoredPolynomial poly(std::move(h));
    const bool ok = is_nondegenerate(poly);
    return {std::move(poly), ok};
}

/// Canonical text form "(a1*X+b1)(a2*X+b2)...".
inline std::string to_string(const FactoredPolynomial& f)
{
    std::string out;
    for (const auto& lf : f.factors()) {
        out += "(" + lf.a.str() + "*X";
        out += lf.b < 0 ? lf.b.str() : "+" + lf.b.str();
        out += ")";
    }
    return out;
}

namespace detail {

class PolyParser {
public:
    explicit PolyParser(std::string_view text) : s_(text) {}

    FactoredPolynomial parse()
    {
        std::vector<LinearFactor> factors;
        skip_ws();
        while (pos_ < s_.size()) {
            if (peek() == '*') {
                ++pos_;
                skip_ws();
                continue;
            }
            if (peek() == '(') {
                ++pos_;
                factors.push_back(linear(')'));
                expect(')');
            } else if (peek() == 'X' || peek() == 'x') {
                ++pos_;
                factors.emplace_back(BigInt(1), BigInt(0));
            } else {
                fail("expected '(' or 'X'");
            }
            skip_ws();
        }
        if (factors.empty())
            fail("no factors");
        return FactoredPolynomial(std::move(factors));
    }

private:
    LinearFactor linear(char terminator)
    {
        BigInt a = 0, b = 0;
        bool first = true;
        skip_ws();
        while (pos_ < s_.size() && peek() != terminator) {
            int sign = 1;
            if (peek() == '+' || peek() == '-') {
                sign = peek() == '-' ? -1 : 1;
                ++pos_;
                skip_ws();
            } else if (!first) {
                fail("expected '+' or '-'");
            }
            first = false;
            BigInt coef = 1;
            bool has_number = false;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(peek()))) {
                coef = number();
                has_number = true;
                skip_ws();
                if (pos_ < s_.size() && peek() == '*') {
                    ++pos_;
                    skip_ws();
                }
            }
            if (pos_ < s_.size() && (peek() == 'X' || peek() == 'x')) {
                ++pos_;
                a += sign * coef;
            } else if (has_number) {
                b += sign * coef;
            } else {
                fail("expected a number or 'X'");
            }
            skip_ws();
        }
        if (a == 0)
            fail("factor has zero X-coefficient");
        return LinearFactor(a, b);
    }

    BigInt number()
    {
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
        return BigInt(std::string(s_.substr(start, pos_ - start)));
    }

    char peek() const { return s_[pos_]; }

    void skip_ws()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    void expect(char c)
    {
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != c)
            fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw Error(Errc::parse, "polynomial \"" + std::string(s_) + "\" at offset " + std::to_string(pos_) + ": " + msg);
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parses "(a1*X+b1)(a2*X+b2)...", also accepting "X", "(2X-1)" and
/// implicit products such as "X(X+2)".
inline FactoredPolynomial parse_polynomial(std::string_view text) { return detail::PolyParser(text).parse(); }

/// c_1 x_1 + ... + c_s x_s = 0 with all c_i nonzero and sum c_i = 0.
class TranslationInvariantEquation {
public:
    explicit TranslationInvariantEquation(std::vector<std::int64_t> coeffs) : coeffs_(std::move(coeffs))
    {
        if (coeffs_.size() < 3)
            throw Error(Errc::invalid_argument, "equation needs at least 3 variables");
        std::int64_t sum = 0;
        for (auto c : coeffs_) {
            if (c == 0)
                throw Error(Errc::invalid_argument, "zero coefficient");
            sum += c;
            if (c > 0) {
                ++positive_count_;
                positive_sum_ += c;
            }
        }
        if (sum != 0)
            throw Error(Errc::invalid_argument, "coefficients do not sum to zero");
    }

    /// x + y - 2z = 0, three-term progressions.
    static TranslationInvariantEquation three_ap() { return TranslationInvariantEquation({1, 1, -2}); }

    const std::vector<std::int64_t>& coeffs() const noexcept { return coeffs_; }
    std::size_t arity() const noexcept { return coeffs_.size(); }
    /// Number of positive coefficients.
    std::size_t positive_count() const noexcept { return positive_count_; }
    /// Sum of the positive coefficients (>= 1).
    std::int64_t positive_sum() const noexcept { return positive_sum_; }

    bool operator==(const TranslationInvariantEquation& o) const { return coeffs_ == o.coeffs_; }

private:
    std::vector<std::int64_t> coeffs_;
    std::size_t positive_count_ = 0;
    std::int64_t positive_sum_ = 0;
};

} // namespace siftroth
