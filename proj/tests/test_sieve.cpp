#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "siftroth/sieve.hpp"

using namespace siftroth;

namespace {

const std::vector<std::pair<std::int64_t, std::int64_t>> kX{{1, 0}};
const std::vector<std::pair<std::int64_t, std::int64_t>> kTwin{{1, 0}, {1, 2}};
const std::vector<std::pair<std::int64_t, std::int64_t>> kTriple{{1, 0}, {1, 1}, {1, 3}};

std::int64_t brute_count(const FactoredPolynomial& g, std::uint64_t d, std::int64_t x)
{
    std::int64_t c = 0;
    for (std::int64_t n = 1; n <= x; ++n)
        if (evaluate(g, n) % d == 0)
            ++c;
    return c;
}

} // namespace

TEST(Sift, Examples)
{
    const auto x = FactoredPolynomial::from_pairs(kX);
    const auto s = sift(x, 100, 10);
    EXPECT_EQ(s.card(), 22u);
    EXPECT_EQ(s.elements.front(), 1);
    EXPECT_EQ(std::count_if(s.elements.begin(), s.elements.end(), [](auto n) { return oracle::naive_prime(n); }), 21);
    const auto all = sift(x, 57, 1);
    EXPECT_EQ(all.card(), 57u);
    EXPECT_EQ(sift(FactoredPolynomial::from_pairs(kTwin), 50, 7).elements, (std::vector<std::int64_t>{11, 17, 29, 41}));
}

TEST(Sift, AnnihilatedIsEmpty)
{
    const auto s = sift(FactoredPolynomial::from_pairs({{1, 0}, {1, 1}}), 100, 3);
    EXPECT_TRUE(s.elements.empty());
    const auto t = sift(FactoredPolynomial::from_pairs({{2, 4}}), 100, 3);
    EXPECT_TRUE(t.annihilated);
    EXPECT_TRUE(t.elements.empty());
}

TEST(Sift, MatchesGcdDefinition)
{
    for (const auto& pairs : {kX, kTwin, kTriple, std::vector<std::pair<std::int64_t, std::int64_t>>{{6, 1}, {6, 7}}})
        for (double z : {2.0, 5.0, 10.0, 31.6, 100.0}) {
            const auto f = FactoredPolynomial::from_pairs(pairs);
            EXPECT_EQ(sift(f, 3000, z).elements, oracle::sift(pairs, 3000, z)) << to_string(f) << " z=" << z;
        }
}

TEST(Sift, SegmentAndThreadIndependent)
{
    const auto f = FactoredPolynomial::from_pairs(kTriple);
    const auto ref = sift(f, 200000, 50).elements;
    for (std::int64_t seg : {7, 1000, 65536})
        for (unsigned threads : {1u, 3u, 8u})
            EXPECT_EQ(sift(f, 200000, 50, threads, seg).elements, ref);
}

TEST(Sift, AntitoneInZ)
{
    const auto f = FactoredPolynomial::from_pairs(kTwin);
    auto prev = sift(f, 5000, 1).elements;
    for (double z = 2; z <= 80; z += 3) {
        const auto cur = sift(f, 5000, z).elements;
        EXPECT_TRUE(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
        prev = cur;
    }
}

TEST(Sift, LargeZGivesPrimes)
{
    const auto f = FactoredPolynomial::from_pairs(kX);
    for (std::int64_t n : {100, 1000, 9973}) {
        const double z = std::sqrt(static_cast<double>(n)) + 0.5;
        std::vector<std::int64_t> expect{1};
        for (std::int64_t m = 2; m <= n; ++m)
            if (static_cast<double>(m) > z && oracle::naive_prime(m))
                expect.push_back(m);
        EXPECT_EQ(sift(f, n, z).elements, expect);
    }
}

TEST(RelativeDensity, Examples)
{
    const auto f = FactoredPolynomial::from_pairs(kTwin);
    const auto s = sift(f, 50, 7);
    EXPECT_DOUBLE_EQ(relative_density(s.elements, s), 1.0);
    EXPECT_DOUBLE_EQ(relative_density(std::vector<std::int64_t>{}, s), 0.0);
    EXPECT_DOUBLE_EQ(relative_density(std::vector<std::int64_t>{11, 41}, f, 50, 7), 0.5);
    try {
        relative_density(std::vector<std::int64_t>{12}, f, 50, 7);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::containment_violation);
    }
    try {
        relative_density(std::vector<std::int64_t>{}, FactoredPolynomial::from_pairs({{1, 0}, {1, 1}}), 50, 7);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::undefined_density);
    }
}

TEST(BrunRatio, Examples)
{
    const auto x = FactoredPolynomial::from_pairs(kX);
    EXPECT_GT(brun_ratio(x, 1000), 0);
    EXPECT_NEAR(brun_ratio(x, 1000, ZRule::fixed(1)), std::log(1000.0), 1e-12);
    const double z = brun_z(1000, 1);
    EXPECT_NEAR(z, std::pow(1000.0, 0.2), 1e-12);
    EXPECT_DOUBLE_EQ(brun_ratio(x, 1000), static_cast<double>(sift(x, 1000, z).card()) * std::log(1000.0) / 1000);
}

TEST(SieveDensity, Examples)
{
    const SieveDensity x(FactoredPolynomial::from_pairs(kX));
    EXPECT_EQ(x.g(2), BigRational(1, 2));
    EXPECT_DOUBLE_EQ(x.r(2, 10), 0.0);
    const SieveDensity twin(FactoredPolynomial::from_pairs(kTwin));
    EXPECT_EQ(twin.g(2), BigRational(1, 2));
    EXPECT_DOUBLE_EQ(twin.r(2, 5), -0.5);
    EXPECT_EQ(twin.g(10), BigRational(1, 5));
    EXPECT_DOUBLE_EQ(twin.r(1, 7.25), 7.0 - 7.25);
    EXPECT_THROW(twin.g(12), Error);
}

TEST(SieveDensity, Multiplicative)
{
    const SieveDensity d(FactoredPolynomial::from_pairs(kTriple));
    const std::vector<std::uint64_t> sq{1, 2, 3, 5, 7, 11, 13, 15, 21, 35, 77};
    for (auto a : sq)
        for (auto b : sq)
            if (std::gcd(a, b) == 1) {
                EXPECT_EQ(d.g(a * b), d.g(a) * d.g(b)) << a << " " << b;
            }
}

TEST(SieveDensity, CountsAndRemainderBound)
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
        const std::size_t k = 1 + rng() % 3;
        for (std::size_t i = 0; i < k; ++i)
            pairs.emplace_back(1 + static_cast<std::int64_t>(rng() % 5), static_cast<std::int64_t>(rng() % 13) - 6);
        const SieveDensity g(FactoredPolynomial::from_pairs(pairs));
        const auto max_d = 1 + rng() % 60;
        const double x = 1 + static_cast<double>(rng() % 300) + 0.5;
        const auto rs = remainder_sum(g, max_d, x);
        EXPECT_LE(rs.sum_abs_remainder, rs.majorant + 1e-9);
        for (std::uint64_t d : {1, 2, 6, 10, 30})
            EXPECT_EQ(static_cast<std::int64_t>(g.count_divisible(d, x)), brute_count(g.poly(), d, static_cast<std::int64_t>(x)));
    }
}

TEST(RemainderSum, Examples)
{
    const SieveDensity x(FactoredPolynomial::from_pairs(kX));
    EXPECT_DOUBLE_EQ(remainder_sum(x, 1, 7.25).sum_abs_remainder, 0.25);
    EXPECT_DOUBLE_EQ(remainder_sum(x, 3, 12).sum_abs_remainder, 0.0);
}

TEST(Mertens, Examples)
{
    const SieveDensity x(FactoredPolynomial::from_pairs(kX));
    const auto m = mertens_product(x, 2, 10);
    EXPECT_EQ(m.exact, BigRational(35, 8));
    EXPECT_DOUBLE_EQ(m.value, 4.375);
    EXPECT_DOUBLE_EQ(mertens_product(1, 2, 2).value, 2.0);
    try {
        mertens_product(2, 2, 10);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::infinite_product);
    }
}

TEST(SieveUpperRatio, ExamplesAndMonotonicity)
{
    const auto x = FactoredPolynomial::from_pairs(kX);
    EXPECT_GT(sieve_upper_ratio(x, 10000, 0.1), 0);
    double prev = 1e300;
    for (double c : {0.05, 0.1, 0.2, 0.3, 0.45}) {
        const double v = sieve_upper_ratio(x, 10000, c);
        EXPECT_LE(v, prev);
        prev = v;
    }
    EXPECT_THROW(sieve_upper_ratio(x, 15, 0.1), Error);
    EXPECT_THROW(sieve_upper_ratio(x, 10000, 1.0), Error);
}
