#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "error.hpp"

namespace siftroth {

using Json = nlohmann::ordered_json;

inline constexpr const char* report_schema = "sift-roth-report/1";

/// A recorded value. Null stands for "not defined at this scale".
using Value = std::variant<std::monostate, bool, std::int64_t, double, std::string, std::vector<std::int64_t>>;

struct Quantity {
    std::string name;
    Value value;

    bool operator==(const Quantity&) const = default;
};

struct StageRecord {
    std::string stage;
    std::vector<Quantity> quantities;

    template <typename T>
    StageRecord& set(std::string name, T v)
    {
        Value value;
        if constexpr (std::is_same_v<T, bool>)
            value = v;
        else if constexpr (std::is_integral_v<T>)
            value = static_cast<std::int64_t>(v);
        else if constexpr (std::is_floating_point_v<T>)
            value = std::isfinite(static_cast<double>(v)) ? Value(static_cast<double>(v)) : Value(std::monostate{});
        else if constexpr (std::is_convertible_v<T, std::string>)
            value = std::string(v);
        else
            value = std::move(v);
        quantities.push_back({std::move(name), std::move(value)});
        return *this;
    }

    const Value* find(const std::string& name) const
    {
        for (const auto& q : quantities)
            if (q.name == name)
                return &q.value;
        return nullptr;
    }

    bool operator==(const StageRecord&) const = default;
};

struct Report {
    std::string schema = report_schema;
    Json config;
    std::vector<StageRecord> stages;

    StageRecord& stage(const std::string& name)
    {
        for (auto& s : stages)
            if (s.stage == name)
                return s;
        stages.push_back({name, {}});
        return stages.back();
    }

    const StageRecord* find_stage(const std::string& name) const
    {
        for (const auto& s : stages)
            if (s.stage == name)
                return &s;
        return nullptr;
    }

    bool operator==(const Report&) const = default;
};

namespace detail {

inline Json value_to_json(const Value& v)
{
    return std::visit(
        [](const auto& x) -> Json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::monostate>)
                return nullptr;
            else
                return x;
        },
        v);
}

inline Value value_from_json(const Json& j)
{
    if (j.is_null())
        return std::monostate{};
    if (j.is_boolean())
        return j.get<bool>();
    if (j.is_number_integer())
        return j.get<std::int64_t>();
    if (j.is_number_float())
        return j.get<double>();
    if (j.is_string())
        return j.get<std::string>();
    if (j.is_array())
        return j.get<std::vector<std::int64_t>>();
    throw Error(Errc::parse, "unsupported report value");
}

inline std::string value_to_csv(const Value& v)
{
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return "";
            } else if constexpr (std::is_same_v<T, bool>) {
                return x ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(x);
            } else if constexpr (std::is_same_v<T, double>) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", x);
                return buf;
            } else if constexpr (std::is_same_v<T, std::string>) {
                std::string out = "\"";
                for (char c : x)
                    out += c == '"' ? std::string("\"\"") : std::string(1, c);
                return out + "\"";
            } else {
                std::string out = "\"";
                for (std::size_t i = 0; i < x.size(); ++i)
                    out += (i ? " " : "") + std::to_string(x[i]);
                return out + "\"";
            }
        },
        v);
}

} // namespace detail

inline Json to_json(const Report& r)
{
    Json j;
    j["schema"] = r.schema;
    j["config"] = r.config;
    Json stages = Json::object();
    for (const auto& s : r.stages) {
        Json q = Json::object();
        for (const auto& quantity : s.quantities)
            q[quantity.name] = detail::value_to_json(quantity.value);
        stages[s.stage] = q;
    }
    j["stages"] = stages;
    return j;
}

inline Report report_from_json(const Json& j)
{
    Report r;
    try {
        r.schema = j.at("schema").get<std::string>();
        if (r.schema != report_schema)
            throw Error(Errc::parse, "unsupported report schema " + r.schema);
        r.config = j.at("config");
        for (const auto& [name, q] : j.at("stages").items()) {
            StageRecord s{name, {}};
            for (const auto& [qname, v] : q.items())
                s.quantities.push_back({qname, detail::value_from_json(v)});
            r.stages.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse, e.what());
    }
    return r;
}

inline std::string to_json_text(const Report& r) { return to_json(r).dump(2) + "\n"; }

/// One row per recorded quantity.
inline std::string to_csv(const Report& r)
{
    std::string out = "stage,quantity,value\n";
    for (const auto& s : r.stages)
        for (const auto& q : s.quantities)
            out += s.stage + "," + q.name + "," + detail::value_to_csv(q.value) + "\n";
    return out;
}

enum class ReportFormat { json, csv };

inline ReportFormat parse_report_format(const std::string& name)
{
    if (name == "json")
        return ReportFormat::json;
    if (name == "csv")
        return ReportFormat::csv;
    throw Error(Errc::invalid_argument, "unknown report format '" + name + "'");
}

inline std::string render(const Report& r, ReportFormat format)
{
    return format == ReportFormat::json ? to_json_text(r) : to_csv(r);
}

inline void emit_report(const Report& r, ReportFormat format, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(Errc::io, "cannot write " + path);
    out << render(r, format);
    if (!out)
        throw Error(Errc::io, "write failed for " + path);
}

} // namespace siftroth
