#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "harmonic.hpp"
#include "random.hpp"
#include "sieve.hpp"
#include "transference.hpp"

namespace siftroth {

struct ScanRow {
    std::string quantity;
    std::string parameter;
    double parameter_value = 0;
    std::optional<double> value; ///< empty when undefined at this point
};

namespace detail {

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Smallest positive h with h outside the integer root differences of g.
inline std::int64_t admissible_shift(const FactoredPolynomial& g)
{
    const auto diffs = root_data(g).integer_root_differences;
    std::int64_t h = 1;
    while (diffs.count(BigInt(h)))
        ++h;
    return h;
}

} // namespace detail

/// Measured ratios over the configured grid, one row per (quantity, point).
inline std::vector<ScanRow> grid_scan_rows(const ExperimentConfig& cfg)
{
    std::vector<ScanRow> rows;
    const auto& f = cfg.poly;
    const double k = static_cast<double>(f.degree());
    const double ee = std::exp(std::exp(1.0));
    for (auto n_max : cfg.grid.n_values) {
        const double n = static_cast<double>(n_max);
        rows.push_back({"brunRatio", "N", n, brun_ratio(f, n_max, cfg.sift_rule, cfg.threads)});
        if (n > ee) {
            rows.push_back({"sieveUpperRatio", "N", n, sieve_upper_ratio(f, n_max, cfg.grid.upper_c, cfg.threads)});
        } else {
            rows.push_back({"sieveUpperRatio", "N", n, std::nullopt});
        }
        const auto sifted = sift(f, n_max, cfg.sift_rule.resolve(n, f.degree()), cfg.threads);
        std::optional<double> gain, inter;
        if (n > ee && !sifted.elements.empty()) {
            const double z = cfg.wtrick_z ? *cfg.wtrick_z : default_z(n);
            const auto ctx = select_b0(sifted.elements, f, n_max, z, 1.0);
            gain = wtrick_gain(ctx);
            const auto g = shift_compose(f, BigInt(ctx.b0), BigInt(ctx.modulus)).poly;
            const std::vector<std::int64_t> shifts{0, detail::admissible_shift(g)};
            const auto common = shifted_intersection(ctx.normalized, shifts, Ambient::integers());
            const double d = static_cast<double>(common.size()) * static_cast<double>(ctx.modulus) / n;
            const double shape = std::pow(std::log(std::log(n)) / std::log(n), k * static_cast<double>(shifts.size()));
            inter = d / shape;
        }
        rows.push_back({"wtrickGain", "N", n, gain});
        rows.push_back({"intersectionRatio", "N", n, inter});
    }
    if (!cfg.grid.deltas.empty()) {
        const auto sifted = sift(f, cfg.n_max, cfg.resolved_sift_z(), cfg.threads);
        const auto s = cfg.equation.arity();
        std::vector<double> exps = cfg.grid.exponents.empty() ? std::vector<double>(s, 1.0) : cfg.grid.exponents;
        double total = 0;
        for (auto m : exps)
            total += m;
        Rng rng(cfg.seed);
        for (double delta : cfg.grid.deltas) {
            if (!(delta > 0 && delta <= 1))
                throw Error(Errc::invalid_argument, "grid delta must lie in (0, 1]");
            const auto count = static_cast<std::size_t>(std::llround(delta * static_cast<double>(sifted.card())));
            const auto a = sample_without_replacement(sifted.elements, std::max<std::size_t>(count, 1), rng);
            const double d = relative_density(a, sifted);
            const auto ctx = select_b0(a, f, cfg.n_max, cfg.resolved_wtrick_z(), d);
            const auto p = choose_modulus(cfg.n_max, ctx.modulus, cfg.equation);
            const auto proj = project(ctx.normalized, p);
            const auto fh = dft(normalized_indicator(proj.elements, p), cfg.threads);
            rows.push_back({"spectralMomentScaled", "delta", delta, spectral_moment(fh, cfg.equation, exps) * std::pow(d, total)});
        }
    }
    return rows;
}

inline std::string grid_scan_csv(const std::vector<ScanRow>& rows)
{
    std::string out = "quantity,parameter,parameter_value,value\n";
    for (const auto& r : rows)
        out += r.quantity + "," + r.parameter + "," + detail::format_double(r.parameter_value) + "," +
               (r.value ? detail::format_double(*r.value) : std::string()) + "\n";
    return out;
}

inline std::string grid_scan(const ExperimentConfig& cfg) { return grid_scan_csv(grid_scan_rows(cfg)); }

} // namespace siftroth
