#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "algebra.hpp"
#include "config.hpp"
#include "harmonic.hpp"
#include "primes.hpp"
#include "random.hpp"
#include "sieve.hpp"
#include "thresholds.hpp"
#include "transference.hpp"

namespace siftroth {

struct CheckResult {
    std::string name;
    bool pass = true;
    Json measured = Json::object();
};

struct SuiteResult {
    std::vector<CheckResult> checks;

    bool all_pass() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    }
};

struct SuiteOptions {
    /// Test hook: scales every transform by P before the Fourier-side count.
    bool corrupt_dft_normalization = false;
    unsigned trials = 100;
};

namespace detail {

inline CyclicFunction random_nonnegative_unit_mean(std::size_t p, Rng& rng)
{
    CyclicFunction f(p);
    const bool sparse = uniform_index(rng, 2) == 0;
    double total = 0;
    for (std::size_t i = 0; i < p; ++i) {
        double v = uniform_real(rng);
        if (sparse && uniform_index(rng, 3) != 0)
            v = 0;
        f[i] = v;
        total += v;
    }
    if (total == 0) {
        f[0] = 1;
        total = 1;
    }
    f *= static_cast<double>(p) / total;
    return f;
}

inline CyclicFunction random_complex(std::size_t p, Rng& rng)
{
    CyclicFunction f(p);
    for (std::size_t i = 0; i < p; ++i)
        f[i] = {2 * uniform_real(rng) - 1, 2 * uniform_real(rng) - 1};
    return f;
}

inline std::vector<std::uint64_t> random_subset(std::uint64_t p, std::size_t count, Rng& rng)
{
    std::vector<std::uint64_t> pool(p);
    for (std::uint64_t i = 0; i < p; ++i)
        pool[i] = i;
    return sample_without_replacement(pool, count, rng);
}

inline std::uint64_t random_prime(std::uint64_t lo, std::uint64_t hi, Rng& rng)
{
    std::vector<std::uint64_t> ps;
    for (auto q : primes_up_to(hi).primes)
        if (q >= lo)
            ps.push_back(q);
    return ps[uniform_index(rng, ps.size())];
}

inline double rel_err(Complex a, Complex b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

} // namespace detail

/// The sift compared with the gcd definition for small N.
inline CheckResult check_sift_oracle(const ExperimentConfig& cfg, unsigned threads)
{
    CheckResult r{"sift oracle"};
    std::vector<FactoredPolynomial> polys{parse_polynomial("X"), parse_polynomial("X(X+2)"),
                                          parse_polynomial("X(X+1)(X+3)"), cfg.poly};
    const std::int64_t n_max = 2000;
    std::uint64_t compared = 0;
    for (const auto& f : polys)
        for (double z : {2.0, 5.0, 10.0, std::sqrt(static_cast<double>(n_max))}) {
            const auto fast = sift(f, n_max, z, threads, 257);
            const auto primes = primes_up_to_real(z);
            std::vector<std::int64_t> brute;
            for (std::int64_t m = 1; m <= n_max; ++m) {
                const BigInt v = evaluate(f, BigInt(m));
                if (std::all_of(primes.begin(), primes.end(), [&](std::uint64_t q) { return v % q != 0; }))
                    brute.push_back(m);
            }
            ++compared;
            if (fast.elements != brute) {
                r.pass = false;
                r.measured["mismatch"] = to_string(f) + " z=" + std::to_string(z);
            }
        }
    r.measured["cases"] = compared;
    r.measured["example_card"] = sift(parse_polynomial("X"), 100, 10).card();
    r.pass = r.pass && r.measured["example_card"] == 22;
    return r;
}

inline CheckResult check_parseval(Rng& rng, const SuiteOptions& opt)
{
    CheckResult r{"Parseval"};
    double round_trip = 0, parseval = 0, fast_vs_direct = 0;
    for (unsigned trial = 0; trial < opt.trials; ++trial) {
        const std::size_t p = 2 + uniform_index(rng, 100);
        const auto f = detail::random_complex(p, rng);
        const auto fh = dft_direct(f);
        const auto back = inverse_dft(fh);
        double lhs = 0, rhs = 0;
        for (std::size_t i = 0; i < p; ++i) {
            round_trip = std::max(round_trip, std::abs(back[i] - f[i]));
            lhs += std::norm(fh[i]);
            rhs += std::norm(f[i]);
        }
        rhs /= static_cast<double>(p);
        parseval = std::max(parseval, std::abs(lhs - rhs) / rhs);
    }
    for (std::size_t p : {257u, 1009u, 4099u}) {
        const auto f = detail::random_complex(p, rng);
        const auto a = dft_direct(f), b = dft_fast(f);
        for (std::size_t i = 0; i < p; ++i)
            fast_vs_direct = std::max(fast_vs_direct, std::abs(a[i] - b[i]));
    }
    r.measured["max_round_trip_error"] = round_trip;
    r.measured["max_parseval_rel_error"] = parseval;
    r.measured["max_fast_vs_direct"] = fast_vs_direct;
    r.pass = round_trip <= 1e-10 && parseval <= 1e-9 && fast_vs_direct <= 1e-9;
    return r;
}

inline CheckResult check_lambda_identity(const ExperimentConfig& cfg, Rng& rng, const SuiteOptions& opt)
{
    CheckResult r{"Lambda identity"};
    std::vector<TranslationInvariantEquation> eqs{TranslationInvariantEquation::three_ap()};
    if (!(cfg.equation == eqs.front()) && cfg.equation.arity() <= 4)
        eqs.push_back(cfg.equation);
    auto fourier = [&](const CyclicFunction& f, const TranslationInvariantEquation& eq) {
        auto fh = dft(f);
        if (opt.corrupt_dft_normalization)
            fh *= static_cast<double>(f.modulus());
        return lambda_from_transform(fh, eq);
    };
    double worst = 0, worst_shift = 0;
    std::uint64_t cases = 0;
    for (const auto& eq : eqs) {
        for (std::size_t p : {5u, 7u}) {
            if (std::pow(static_cast<double>(p), static_cast<double>(eq.arity() - 1)) > 1e6)
                continue;
            for (std::uint64_t mask = 0; mask < (1ull << p); ++mask) {
                CyclicFunction f(p);
                for (std::size_t i = 0; i < p; ++i)
                    f[i] = (mask >> i) & 1;
                worst = std::max(worst, detail::rel_err(fourier(f, eq), lambda_brute(f, eq)));
                ++cases;
            }
        }
        for (std::size_t p : {11u, 13u}) {
            if (std::pow(static_cast<double>(p), static_cast<double>(eq.arity() - 1)) > 1e6)
                continue;
            for (unsigned trial = 0; trial < opt.trials; ++trial) {
                const auto f = detail::random_complex(p, rng);
                const auto brute = lambda_brute(f, eq);
                worst = std::max(worst, detail::rel_err(fourier(f, eq), brute));
                const std::size_t tau = uniform_index(rng, p);
                CyclicFunction g(p);
                for (std::size_t i = 0; i < p; ++i)
                    g[(i + tau) % p] = f[i];
                worst_shift = std::max(worst_shift, detail::rel_err(lambda_brute(g, eq), brute));
                ++cases;
            }
        }
    }
    r.measured["cases"] = cases;
    r.measured["max_rel_error"] = worst;
    r.measured["max_translation_rel_error"] = worst_shift;
    r.pass = worst <= 1e-9 && worst_shift <= 1e-9;
    return r;
}

inline CheckResult check_avD(Rng& rng, const SuiteOptions& opt)
{
    CheckResult r{"avD"};
    double min_mass = 1e300;
    for (unsigned trial = 0; trial < 5 * opt.trials; ++trial) {
        const std::size_t p = 2 + uniform_index(rng, 100);
        const auto f = detail::random_nonnegative_unit_mean(p, rng);
        min_mass = std::min(min_mass, level_set_mass(f));
    }
    r.measured["min_level_set_mass"] = min_mass;
    r.pass = min_mass >= 0.5 - 1e-12;
    return r;
}

inline CheckResult check_lbD(Rng& rng, const SuiteOptions& opt)
{
    CheckResult r{"lbD"};
    double min_ratio = 1e300;
    std::uint64_t failures = 0;
    for (unsigned trial = 0; trial < 5 * opt.trials; ++trial) {
        const std::size_t p = 2 + uniform_index(rng, 100);
        const auto f = detail::random_nonnegative_unit_mean(p, rng);
        const unsigned l = 2 + static_cast<unsigned>(uniform_index(rng, 3));
        const auto c = level_set_lower_bound_check(f, l);
        failures += !c.holds;
        min_ratio = std::min(min_ratio, static_cast<double>(c.card) / c.bound);
    }
    r.measured["failures"] = failures;
    r.measured["min_card_over_bound"] = min_ratio;
    r.pass = failures == 0;
    return r;
}

inline CheckResult check_lth1eq(Rng& rng, const SuiteOptions& opt)
{
    CheckResult r{"lth1eq"};
    double worst = 0;
    for (unsigned trial = 0; trial < opt.trials; ++trial) {
        const std::uint64_t p = 2 + uniform_index(rng, 30);
        const auto c = detail::random_subset(p, 1 + uniform_index(rng, p), rng);
        const auto b = detail::random_subset(p, 1 + uniform_index(rng, std::min<std::uint64_t>(p, 12)), rng);
        const unsigned l = 1 + static_cast<unsigned>(uniform_index(rng, 3));
        const auto id = convolution_moment_identity(c, b, l, p);
        worst = std::max(worst, std::abs(id.norm_power_direct - id.intersection_sum) / id.intersection_sum);
    }
    r.measured["max_rel_error"] = worst;
    r.pass = worst <= 1e-9;
    return r;
}

inline CheckResult check_noB(const ExperimentConfig& cfg, Rng& rng, const SuiteOptions& opt)
{
    CheckResult r{"noB"};
    double max_sharp = 0;
    std::uint64_t cases = 0;
    for (unsigned trial = 0; trial < opt.trials / 4 + 1; ++trial) {
        const std::uint64_t p = detail::random_prime(7, 61, rng);
        ForbiddenDifferences sp;
        if (trial % 2 == 0)
            sp = forbidden_differences(parse_polynomial("X(X-1)"), 0, 1, p);
        else
            sp = forbidden_differences(cfg.poly, 1, 1, p);
        const auto b = detail::random_subset(p, 1 + uniform_index(rng, std::min<std::uint64_t>(p, 10)), rng);
        const auto h = component_histogram(b, 3, sp);
        ++cases;
        if (!h.count_bound_holds || !h.sumset_property_holds)
            r.pass = false;
        for (std::size_t q = 1; q < h.sharp_ratio.size(); ++q)
            max_sharp = std::max(max_sharp, h.sharp_ratio[q]);
    }
    r.measured["cases"] = cases;
    r.measured["max_sharp_ratio"] = max_sharp;
    return r;
}

inline CheckResult check_varnavides(Rng& rng, const SuiteOptions& opt, unsigned threads)
{
    CheckResult r{"VV"};
    const auto eq = TranslationInvariantEquation::three_ap();
    const EnvelopeG env(build_extremal_table(eq, default_table_guard));
    std::uint64_t nondegenerate = 0;
    double min_margin = 1e300;
    for (unsigned trial = 0; trial < opt.trials; ++trial) {
        const double eta = std::array{0.5, 0.7, 0.9}[uniform_index(rng, 3)];
        const std::uint64_t p = detail::random_prime(7, 31, rng);
        const auto need = static_cast<std::size_t>(std::ceil(eta * static_cast<double>(p)));
        const auto d = detail::random_subset(p, need + uniform_index(rng, p - need + 1), rng);
        const auto v = varnavides_check(d, p, eq, eta, env, threads);
        if (!v.pass)
            r.pass = false;
        if (!v.degenerate) {
            ++nondegenerate;
            min_margin = std::min(min_margin, static_cast<double>(v.solutions) / v.lower_bound);
        }
    }
    r.measured["nondegenerate_cases"] = nondegenerate;
    r.measured["min_solutions_over_bound"] = nondegenerate ? Json(min_margin) : Json(nullptr);
    return r;
}

inline CheckResult check_bohr_size(Rng& rng, const SuiteOptions& opt)
{
    CheckResult r{"Bohr size"};
    double min_ratio = 1e300;
    for (unsigned trial = 0; trial < 2 * opt.trials; ++trial) {
        const std::uint64_t p = 2 + uniform_index(rng, 100);
        const auto freqs = detail::random_subset(p, 1 + uniform_index(rng, std::min<std::uint64_t>(p, 3)), rng);
        const double rho = uniform_index(rng, 2) ? 0.25 : 0.125;
        const auto b = bohr_set(freqs, rho, BohrConvention::phase_distance, p);
        const double bound = bohr_size_bound(rho, freqs.size(), p);
        min_ratio = std::min(min_ratio, static_cast<double>(b.elements.size()) / bound);
    }
    const std::vector<std::uint64_t> one{1};
    const auto chord = bohr_set(one, 0.5, BohrConvention::chord, 7);
    r.measured["min_card_over_bound"] = min_ratio;
    r.measured["chord_counterexample_card"] = chord.elements.size();
    r.pass = min_ratio >= 1.0 - 1e-12 && chord.elements.size() == 1;
    return r;
}

inline SuiteResult run_verification_suite(const ExperimentConfig& cfg, const SuiteOptions& opt = {})
{
    Rng rng(cfg.seed);
    const unsigned threads = cfg.threads;
    SuiteResult out;
    out.checks.push_back(check_avD(rng, opt));
    out.checks.push_back(check_lbD(rng, opt));
    out.checks.push_back(check_lth1eq(rng, opt));
    out.checks.push_back(check_noB(cfg, rng, opt));
    out.checks.push_back(check_varnavides(rng, opt, threads));
    out.checks.push_back(check_bohr_size(rng, opt));
    out.checks.push_back(check_lambda_identity(cfg, rng, opt));
    out.checks.push_back(check_parseval(rng, opt));
    out.checks.push_back(check_sift_oracle(cfg, threads));
    return out;
}

} // namespace siftroth
