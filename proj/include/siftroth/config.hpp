#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "algebra.hpp"
#include "error.hpp"
#include "sieve.hpp"
#include "thresholds.hpp"

namespace siftroth {

using Json = nlohmann::ordered_json;

/// How A is drawn from the sifted set.
struct SubsetRule {
    enum class Kind { full, random, file, list };
    Kind kind = Kind::full;
    double delta = 1;                    ///< random: card(A) = round(delta card(S))
    std::string path;                    ///< file: whitespace-separated integers
    std::vector<std::int64_t> elements;  ///< list

    bool operator==(const SubsetRule&) const = default;
};

enum class HVariant { closed_form, varnavides };

struct ScanGrid {
    std::vector<std::int64_t> n_values;
    std::vector<double> deltas;
    std::vector<double> exponents;       ///< spectral-moment exponents; empty means all 1
    double upper_c = 0.1;                ///< level exponent c for the upper-bound ratio
};

struct ExperimentConfig {
    FactoredPolynomial poly = FactoredPolynomial::from_pairs({{1, 0}});
    TranslationInvariantEquation equation = TranslationInvariantEquation::three_ap();
    std::int64_t n_max = 100000;
    std::optional<double> wtrick_z;      ///< nullopt: log N / 3
    ZRule sift_rule = ZRule::brun();
    SubsetRule subset;
    unsigned l = 2;
    unsigned restriction_l = 4;
    Constants constants;
    HVariant h_variant = HVariant::closed_form;
    double h_c = 1;
    std::uint64_t seed = 1;
    unsigned threads = 1;                ///< 0: all hardware threads
    ScanGrid grid;

    double resolved_wtrick_z() const { return wtrick_z ? *wtrick_z : default_z(static_cast<double>(n_max)); }
    double resolved_sift_z() const { return sift_rule.resolve(static_cast<double>(n_max), poly.degree()); }
};

namespace detail {

inline FactoredPolynomial poly_from_json(const Json& j)
{
    if (j.is_string())
        return parse_polynomial(j.get<std::string>());
    if (j.is_array()) {
        std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
        for (const auto& e : j) {
            if (!e.is_array() || e.size() != 2)
                throw Error(Errc::parse, "F pairs must be [a, b]");
            pairs.emplace_back(e[0].get<std::int64_t>(), e[1].get<std::int64_t>());
        }
        return FactoredPolynomial::from_pairs(pairs);
    }
    throw Error(Errc::parse, "F must be a string or a list of [a, b] pairs");
}

inline std::string subset_kind_name(SubsetRule::Kind k)
{
    switch (k) {
    case SubsetRule::Kind::full: return "full";
    case SubsetRule::Kind::random: return "random";
    case SubsetRule::Kind::file: return "file";
    case SubsetRule::Kind::list: return "list";
    }
    return "full";
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback)
{
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

} // namespace detail

/// Checks the invariants of a configuration; throws Error on violation.
inline void validate(const ExperimentConfig& c)
{
    if (!is_admissible(c.poly))
        throw Error(Errc::invalid_argument, "F = " + to_string(c.poly) + " is not admissible");
    if (!is_nondegenerate(c.poly))
        throw Error(Errc::degenerate_polynomial, "F = " + to_string(c.poly) + " has zero discriminant");
    if (c.n_max < 2)
        throw Error(Errc::invalid_argument, "N must be >= 2");
    if (c.subset.kind == SubsetRule::Kind::random && !(c.subset.delta > 0 && c.subset.delta <= 1))
        throw Error(Errc::invalid_argument, "subset delta must lie in (0, 1]");
    if (c.l < 2)
        throw Error(Errc::invalid_argument, "l must be >= 2");
    if (c.restriction_l < 3)
        throw Error(Errc::invalid_argument, "restriction_l must be >= 3");
    if (c.wtrick_z && *c.wtrick_z < 0)
        throw Error(Errc::invalid_argument, "z must be >= 0");
}

inline ExperimentConfig config_from_json(const Json& j)
{
    if (!j.is_object())
        throw Error(Errc::parse, "config must be a JSON object");
    ExperimentConfig c;
    try {
        if (j.contains("F"))
            c.poly = detail::poly_from_json(j.at("F"));
        if (j.contains("L"))
            c.equation = TranslationInvariantEquation(j.at("L").get<std::vector<std::int64_t>>());
        c.n_max = detail::get_or<std::int64_t>(j, "N", c.n_max);
        if (j.contains("z")) {
            const auto& z = j.at("z");
            if (z.is_string()) {
                if (z.get<std::string>() != "logN/3")
                    throw Error(Errc::parse, "z must be \"logN/3\" or a number");
            } else {
                c.wtrick_z = z.get<double>();
            }
        }
        if (j.contains("sift_z")) {
            const auto& z = j.at("sift_z");
            if (z.is_string()) {
                if (z.get<std::string>() != "brun")
                    throw Error(Errc::parse, "sift_z must be \"brun\" or a number");
            } else {
                c.sift_rule = ZRule::fixed(z.get<double>());
            }
        }
        if (j.contains("subset")) {
            const auto& s = j.at("subset");
            const auto rule = detail::get_or<std::string>(s, "rule", "full");
            if (rule == "full") {
                c.subset.kind = SubsetRule::Kind::full;
            } else if (rule == "random") {
                c.subset.kind = SubsetRule::Kind::random;
                c.subset.delta = s.at("delta").get<double>();
            } else if (rule == "file") {
                c.subset.kind = SubsetRule::Kind::file;
                c.subset.path = s.at("path").get<std::string>();
            } else if (rule == "list") {
                c.subset.kind = SubsetRule::Kind::list;
                c.subset.elements = s.at("elements").get<std::vector<std::int64_t>>();
            } else {
                throw Error(Errc::parse, "unknown subset rule '" + rule + "'");
            }
        }
        c.l = detail::get_or<unsigned>(j, "l", c.l);
        c.restriction_l = detail::get_or<unsigned>(j, "restriction_l", c.restriction_l);
        if (j.contains("constants")) {
            const auto& k = j.at("constants");
            c.constants.c1 = detail::get_or<double>(k, "c1", c.constants.c1);
            c.constants.c2 = detail::get_or<double>(k, "c2", c.constants.c2);
            c.constants.cFL = detail::get_or<double>(k, "cFL", c.constants.cFL);
            c.constants.cF = detail::get_or<double>(k, "cF", c.constants.cF);
            c.constants.table_max = detail::get_or<std::size_t>(k, "tableMax", c.constants.table_max);
            c.constants.prime_cutoff = detail::get_or<std::uint64_t>(k, "primeCutoff", c.constants.prime_cutoff);
        }
        if (j.contains("h_variant")) {
            const auto h = j.at("h_variant").get<std::string>();
            if (h == "closedForm")
                c.h_variant = HVariant::closed_form;
            else if (h == "varnavides")
                c.h_variant = HVariant::varnavides;
            else
                throw Error(Errc::parse, "h_variant must be closedForm or varnavides");
        }
        c.h_c = detail::get_or<double>(j, "h_c", c.h_c);
        c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);
        c.threads = detail::get_or<unsigned>(j, "threads", c.threads);
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            c.grid.n_values = detail::get_or<std::vector<std::int64_t>>(g, "N", {});
            c.grid.deltas = detail::get_or<std::vector<double>>(g, "delta", {});
            c.grid.exponents = detail::get_or<std::vector<double>>(g, "exponents", {});
            c.grid.upper_c = detail::get_or<double>(g, "c", c.grid.upper_c);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse, e.what());
    }
    validate(c);
    return c;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io, "cannot open config " + path);
    Json j;
    try {
        j = Json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse, path + ": " + e.what());
    }
    return config_from_json(j);
}

/// Canonical JSON form. The thread count is left out so that reports do not
/// depend on it.
inline Json config_to_json(const ExperimentConfig& c)
{
    Json j;
    j["F"] = to_string(c.poly);
    j["L"] = c.equation.coeffs();
    j["N"] = c.n_max;
    if (c.wtrick_z)
        j["z"] = *c.wtrick_z;
    else
        j["z"] = "logN/3";
    if (c.sift_rule.kind == ZRule::Kind::brun)
        j["sift_z"] = "brun";
    else
        j["sift_z"] = c.sift_rule.value;
    Json s;
    s["rule"] = detail::subset_kind_name(c.subset.kind);
    if (c.subset.kind == SubsetRule::Kind::random)
        s["delta"] = c.subset.delta;
    if (c.subset.kind == SubsetRule::Kind::file)
        s["path"] = c.subset.path;
    if (c.subset.kind == SubsetRule::Kind::list)
        s["elements"] = c.subset.elements;
    j["subset"] = s;
    j["l"] = c.l;
    j["restriction_l"] = c.restriction_l;
    j["constants"] = {{"c1", c.constants.c1},
                      {"c2", c.constants.c2},
                      {"cFL", c.constants.cFL},
                      {"cF", c.constants.cF},
                      {"tableMax", c.constants.table_max},
                      {"primeCutoff", c.constants.prime_cutoff}};
    j["h_variant"] = c.h_variant == HVariant::closed_form ? "closedForm" : "varnavides";
    j["h_c"] = c.h_c;
    j["seed"] = c.seed;
    return j;
}

/// Whitespace-separated integers.
inline std::vector<std::int64_t> read_integer_set(std::istream& in)
{
    std::vector<std::int64_t> out;
    std::string tok;
    while (in >> tok) {
        try {
            std::size_t used = 0;
            const auto v = std::stoll(tok, &used);
            if (used != tok.size())
                throw Error(Errc::parse, "not an integer: " + tok);
            out.push_back(v);
        } catch (const std::logic_error&) {
            throw Error(Errc::parse, "not an integer: " + tok);
        }
    }
    return out;
}

inline std::vector<std::int64_t> read_integer_set(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io, "cannot open set file " + path);
    return read_integer_set(in);
}

} // namespace siftroth
