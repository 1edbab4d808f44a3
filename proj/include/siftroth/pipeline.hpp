#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "algebra.hpp"
#include "config.hpp"
#include "error.hpp"
#include "harmonic.hpp"
#include "random.hpp"
#include "report.hpp"
#include "sieve.hpp"
#include "thresholds.hpp"
#include "transference.hpp"

namespace siftroth {

namespace detail {

template <typename Fn>
void run_stage(const std::string& name, Fn&& fn)
{
    try {
        fn();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    }
}

inline std::vector<std::int64_t> to_i64(std::span<const std::uint64_t> xs)
{
    return {xs.begin(), xs.end()};
}

} // namespace detail

/// A drawn from the sifted set according to the subset rule.
inline std::vector<std::int64_t> select_subset(const SubsetRule& rule, const SiftedSet& sifted, Rng& rng)
{
    std::vector<std::int64_t> a;
    switch (rule.kind) {
    case SubsetRule::Kind::full:
        a = sifted.elements;
        break;
    case SubsetRule::Kind::random: {
        const auto count = static_cast<std::size_t>(std::llround(rule.delta * static_cast<double>(sifted.card())));
        a = sample_without_replacement(sifted.elements, count, rng);
        break;
    }
    case SubsetRule::Kind::file:
        a = read_integer_set(rule.path);
        break;
    case SubsetRule::Kind::list:
        a = rule.elements;
        break;
    }
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

/// The h_L selected by the configuration.
inline std::function<double(double)> make_h(const ExperimentConfig& cfg)
{
    if (cfg.h_variant == HVariant::closed_form) {
        const double c = cfg.h_c;
        return [c](double eta) { return hL_closed_form(eta, c); };
    }
    auto env = std::make_shared<EnvelopeG>(build_extremal_table(cfg.equation, cfg.constants.table_max,
                                                                std::max(cfg.constants.table_max, default_table_guard)));
    return [env](double eta) { return hL_varnavides(eta, *env); };
}

/// Sift, W-trick, projection, transference measurements and the final
/// solution search, recorded stage by stage.
inline Report run_pipeline(const ExperimentConfig& cfg)
{
    validate(cfg);
    Report rep;
    rep.config = config_to_json(cfg);
    const unsigned threads = cfg.threads;
    const auto& f = cfg.poly;
    const auto& eq = cfg.equation;
    const std::size_t k = f.degree();
    const std::size_t s = eq.arity();
    const double n = static_cast<double>(cfg.n_max);
    Rng rng(cfg.seed);

    std::optional<SiftedSet> sifted;
    std::vector<std::int64_t> a;
    double delta = 0;
    detail::run_stage("sift", [&] {
        const double z = cfg.resolved_sift_z();
        sifted = sift(f, cfg.n_max, z, threads);
        a = select_subset(cfg.subset, *sifted, rng);
        delta = relative_density(a, *sifted);
        auto& st = rep.stage("sift");
        st.set("F", to_string(f))
            .set("N", cfg.n_max)
            .set("z", z)
            .set("annihilated", sifted->annihilated)
            .set("sifted_card", sifted->card())
            .set("A_card", a.size())
            .set("delta", delta)
            .set("brun_ratio", static_cast<double>(sifted->card()) * std::pow(std::log(n), static_cast<double>(k)) / n);
    });

    WTrickContext ctx;
    detail::run_stage("wtrick", [&] {
        ctx = select_b0(a, f, cfg.n_max, cfg.resolved_wtrick_z(), delta);
        auto& st = rep.stage("wtrick");
        st.set("z", ctx.z)
            .set("M", ctx.modulus)
            .set("coprime_residues", ctx.coprime_residues)
            .set("populated_classes", ctx.classes.size())
            .set("b0", ctx.b0)
            .set("class_card", ctx.class_card())
            .set("pigeonhole_holds", ctx.class_card() * ctx.coprime_residues >= a.size());
        if (n > std::exp(std::exp(1.0)))
            st.set("gain", wtrick_gain(ctx));
        else
            st.set("gain", std::monostate{});
    });

    std::uint64_t p = 0;
    ProjectedSet projected;
    ForbiddenDifferences forbidden;
    detail::run_stage("project", [&] {
        p = choose_modulus(cfg.n_max, ctx.modulus, eq);
        projected = project(ctx.normalized, p);
        forbidden = forbidden_differences(f, ctx.b0, ctx.modulus, p);
        const auto c = static_cast<std::uint64_t>(eq.positive_sum());
        const auto num = static_cast<unsigned __int128>(c) * static_cast<std::uint64_t>(cfg.n_max);
        auto& st = rep.stage("project");
        st.set("interval_lo", static_cast<std::uint64_t>((num + ctx.modulus - 1) / ctx.modulus))
            .set("interval_hi", static_cast<std::uint64_t>(2 * num / ctx.modulus))
            .set("P", p)
            .set("card", projected.elements.size())
            .set("forbidden_differences", detail::to_i64(forbidden.elements));
    });

    Epsilons eps;
    const auto h_of = make_h(cfg);
    const double ld = static_cast<double>(cfg.l);
    const double eta = cfg.constants.c2 * std::pow(delta, ld / (ld - 1.0));
    detail::run_stage("epsilons", [&] {
        eps = choose_epsilons(delta, s, cfg.l, h_of, cfg.constants, p);
        auto& st = rep.stage("epsilons");
        st.set("h_variant", cfg.h_variant == HVariant::closed_form ? "closedForm" : "varnavides")
            .set("eta", eta)
            .set("h", eps.h)
            .set("eps1", eps.eps1)
            .set("eps2", eps.eps2)
            .set("feasibility_lhs", eps.lhs)
            .set("feasibility_rhs", eps.rhs)
            .set("feasible", eps.feasible);
    });

    CyclicFunction fa, fa_hat;
    std::vector<std::uint64_t> dilated;
    detail::run_stage("spectrum", [&] {
        fa = normalized_indicator(projected.elements, p);
        fa_hat = dft(fa, threads);
        const auto spec = spectrum_of_transform(fa_hat, eps.eps1);
        dilated = dilated_spectrum(spec.frequencies, eq, p);
        const std::vector<double> ones(s, 1.0);
        const double moment = spectral_moment(fa_hat, eq, ones);
        auto& st = rep.stage("spectrum");
        st.set("card_spectrum", spec.frequencies.size())
            .set("card_dilated", dilated.size())
            .set("card_constant", static_cast<double>(dilated.size()) * std::pow(eps.eps1, 3.0) * std::pow(delta, 3.0))
            .set("spectral_moment", moment)
            .set("spectral_moment_constant", moment * std::pow(delta, static_cast<double>(s)));
    });

    BohrSet bohr;
    detail::run_stage("bohr", [&] {
        const double width = eps.eps2 / (2.0 * std::numbers::pi);
        bohr = bohr_set(dilated, width, BohrConvention::phase_distance, p, threads);
        const double bound = bohr_size_bound(width, dilated.size(), p);
        bool chord_ok = true;
        for (auto x : bohr.elements)
            for (auto t : dilated) {
                const auto kx = detail::mul_mod(x, t, p);
                const double d = static_cast<double>(std::min(kx, p - kx)) / static_cast<double>(p);
                if (2.0 * std::sin(std::numbers::pi * d) > eps.eps2 * (1 + 1e-12))
                    chord_ok = false;
            }
        const bool quarter = std::all_of(bohr.elements.begin(), bohr.elements.end(),
                                         [p](std::uint64_t x) { return 4 * std::min(x, p - x) <= p; });
        const double log_p = std::log(static_cast<double>(p));
        auto& st = rep.stage("bohr");
        st.set("width", width)
            .set("card", bohr.elements.size())
            .set("size_bound", bound)
            .set("size_bound_holds", static_cast<double>(bohr.elements.size()) >= bound * (1 - 1e-12))
            .set("chord_hypothesis_holds", chord_ok)
            .set("within_quarter", quarter)
            .set("card_asymptotic_flag", static_cast<double>(bohr.elements.size()) >= std::pow(log_p, static_cast<double>(k) + 101.0))
            .set("delta_asymptotic_flag", delta > std::pow(log_p, -100.0));
    });

    detail::run_stage("counting", [&] {
        const auto fb = normalized_indicator(bohr.elements, p);
        const auto fb_hat = dft(fb, threads);
        const auto te = transfer_error_from_transforms(fa_hat, fb_hat, eq, eps.eps1, delta);
        CyclicFunction smoothed_hat(p);
        for (std::size_t t = 0; t < p; ++t)
            smoothed_hat[t] = fa_hat[t] * fb_hat[t];
        auto conv = inverse_dft(smoothed_hat, threads);
        for (auto& v : conv.values())
            v = {std::max(v.real(), 0.0), 0.0};
        const double scale = std::pow(static_cast<double>(p), static_cast<double>(s - 1));
        const auto lb = level_set_lower_bound_check(conv, cfg.l);
        auto& st = rep.stage("counting");
        st.set("lambda_A", te.lambda_a.real())
            .set("lambda_smoothed", te.lambda_smoothed.real())
            .set("transfer_lhs", te.lhs)
            .set("effective_eps2", te.effective_eps2)
            .set("eps2_hypothesis_holds", te.effective_eps2 <= eps.eps2 * (1 + 1e-9))
            .set("transfer_constant", te.constant)
            .set("smoothed_lower_constant", te.lambda_smoothed.real() / (eps.h * scale))
            .set("smoothed_norm_l", moments(conv, cfg.l).norm)
            .set("level_set_card", lb.card)
            .set("level_set_bound", lb.bound)
            .set("level_set_bound_holds", lb.holds)
            .set("level_set_mass", level_set_mass(conv));
        const double r_level = cfg.resolved_sift_z();
        if (r_level >= 2) {
            const auto g = shift_compose(f, BigInt(ctx.b0), BigInt(ctx.modulus)).poly;
            const auto rm = restriction_moment(indicator(projected.elements, p), cfg.restriction_l, r_level, g,
                                               cfg.constants.prime_cutoff, threads);
            st.set("restriction_lhs", rm.lhs).set("restriction_rhs_factor", rm.rhs_factor).set("restriction_constant", rm.ratio);
        } else {
            st.set("restriction_constant", std::monostate{});
        }
    });

    detail::run_stage("solution", [&] {
        const auto elems = detail::to_i64(projected.elements);
        const auto sol = find_nontrivial_solution(elems, eq, Ambient::cyclic(p));
        auto& st = rep.stage("solution");
        st.set("criterion", "nontrivial solution of L in A' whose lift lies in A");
        if (!sol) {
            st.set("found", false).set("tuple", std::monostate{}).set("lift", std::monostate{}).set("valid", false);
            return;
        }
        std::vector<std::int64_t> lift;
        BigInt sum = 0;
        bool in_a = true;
        for (std::size_t i = 0; i < s; ++i) {
            const BigInt v = BigInt(ctx.b0) + BigInt(ctx.modulus) * (*sol)[i];
            sum += BigInt(eq.coeffs()[i]) * v;
            const auto vi = v.convert_to<std::int64_t>();
            lift.push_back(vi);
            in_a = in_a && std::binary_search(a.begin(), a.end(), vi);
        }
        const bool distinct = std::any_of(lift.begin(), lift.end(), [&](std::int64_t v) { return v != lift.front(); });
        st.set("found", true)
            .set("tuple", *sol)
            .set("lift", lift)
            .set("lift_sum_zero", sum == 0)
            .set("lift_in_A", in_a)
            .set("valid", sum == 0 && in_a && distinct);
    });
    return rep;
}

/// True when the report carries a solution that re-validated.
inline bool pipeline_succeeded(const Report& r)
{
    const auto* st = r.find_stage("solution");
    if (!st)
        return false;
    const auto* v = st->find("valid");
    return v && std::holds_alternative<bool>(*v) && std::get<bool>(*v);
}

} // namespace siftroth
