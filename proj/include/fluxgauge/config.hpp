#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fluxgauge/error.hpp"

namespace fluxgauge {

enum class Scenario {
    Verify,
    CombStudy,
    ImmersionCounterexample,
    ConvexProbe,
    OffsetStudy,
    MeasureLimit,
    OdeAudit,
    DivergenceCheck,
};

inline constexpr std::array<Scenario, 8> kScenarios = {
    Scenario::Verify,      Scenario::CombStudy,    Scenario::ImmersionCounterexample, Scenario::ConvexProbe,
    Scenario::OffsetStudy, Scenario::MeasureLimit, Scenario::OdeAudit,                Scenario::DivergenceCheck,
};

constexpr std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::Verify: return "verify";
        case Scenario::CombStudy: return "comb-study";
        case Scenario::ImmersionCounterexample: return "immersion-counterexample";
        case Scenario::ConvexProbe: return "convex-probe";
        case Scenario::OffsetStudy: return "offset-study";
        case Scenario::MeasureLimit: return "measure-limit";
        case Scenario::OdeAudit: return "ode-audit";
        case Scenario::DivergenceCheck: return "divergence-check";
    }
    return "unknown";
}

inline std::optional<Scenario> parse_scenario(std::string_view name) {
    for (Scenario s : kScenarios)
        if (to_string(s) == name) return s;
    return std::nullopt;
}

/// Catalog entry: a zoo domain or a catalog field, by name and flat parameters.
struct CatalogSpec {
    std::string name;
    std::vector<double> params;
    bool operator==(const CatalogSpec&) const = default;
};

/// One experiment. Every key is optional except `scenario`; zero or empty values select the
/// scenario defaults.
struct ExperimentConfig {
    Scenario scenario = Scenario::Verify;
    int dimension = 2;
    std::optional<CatalogSpec> d1;
    std::optional<CatalogSpec> d2;
    std::vector<CatalogSpec> domains;
    std::vector<CatalogSpec> fields;
    double resolution = 0.0;
    std::uint64_t seed = 1;
    std::uint64_t mc_samples = 0;
    int random_configs = 0;
    std::vector<int> comb_n;
    std::vector<double> etas;
    std::vector<double> horizons;
    std::vector<double> x0;
    std::vector<double> y0;
    double r0 = 0.0;
    int cover_m = 0;
    double cover_perturbation = 1e-3;
    int ball_grid = 0;
    double ball_radius = 0.0;
    bool allow_non_simple = false;
    std::string output_dir = "out";

    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline Error config_error(const std::string& what) { return Error(ErrorCode::ConfigInvalid, what); }

inline nlohmann::json spec_json(const CatalogSpec& s) { return {{"name", s.name}, {"params", s.params}}; }

inline void check_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                       const std::string& where) {
    if (!j.is_object()) throw config_error(where + " must be an object");
    for (const auto& [key, _] : j.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw config_error("unknown key '" + key + "' in " + where);
}

inline CatalogSpec spec_from_json(const nlohmann::json& j, const std::string& where) {
    check_keys(j, {"name", "params"}, where);
    if (!j.contains("name") || !j["name"].is_string()) throw config_error(where + ".name must be a string");
    CatalogSpec s{j["name"].get<std::string>(), {}};
    if (j.contains("params")) {
        if (!j["params"].is_array()) throw config_error(where + ".params must be an array");
        for (const auto& v : j["params"]) {
            if (!v.is_number()) throw config_error(where + ".params must hold numbers");
            s.params.push_back(v.get<double>());
        }
    }
    return s;
}

template <class T>
T get_as(const nlohmann::json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw config_error("key '" + key + "' has the wrong type");
    }
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["scenario"] = std::string(to_string(c.scenario));
    j["dimension"] = c.dimension;
    j["d1"] = c.d1 ? detail::spec_json(*c.d1) : nlohmann::json(nullptr);
    j["d2"] = c.d2 ? detail::spec_json(*c.d2) : nlohmann::json(nullptr);
    j["domains"] = nlohmann::json::array();
    for (const auto& s : c.domains) j["domains"].push_back(detail::spec_json(s));
    j["fields"] = nlohmann::json::array();
    for (const auto& s : c.fields) j["fields"].push_back(detail::spec_json(s));
    j["resolution"] = c.resolution;
    j["seed"] = c.seed;
    j["mc_samples"] = c.mc_samples;
    j["random_configs"] = c.random_configs;
    j["comb_n"] = c.comb_n;
    j["etas"] = c.etas;
    j["horizons"] = c.horizons;
    j["x0"] = c.x0;
    j["y0"] = c.y0;
    j["r0"] = c.r0;
    j["cover_m"] = c.cover_m;
    j["cover_perturbation"] = c.cover_perturbation;
    j["ball_grid"] = c.ball_grid;
    j["ball_radius"] = c.ball_radius;
    j["allow_non_simple"] = c.allow_non_simple;
    j["output_dir"] = c.output_dir;
    return j;
}

/// Parses and validates a config object. Unknown keys and ill-typed values are CONFIG_INVALID.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    detail::check_keys(j,
                       {"scenario", "dimension", "d1", "d2", "domains", "fields", "resolution", "seed", "mc_samples",
                        "random_configs", "comb_n", "etas", "horizons", "x0", "y0", "r0", "cover_m",
                        "cover_perturbation", "ball_grid", "ball_radius", "allow_non_simple", "output_dir"},
                       "config");
    using detail::config_error;
    using detail::get_as;
    ExperimentConfig c;
    if (!j.contains("scenario") || !j["scenario"].is_string()) throw config_error("config needs a scenario name");
    const auto s = parse_scenario(j["scenario"].get<std::string>());
    if (!s) throw config_error("unknown scenario '" + j["scenario"].get<std::string>() + "'");
    c.scenario = *s;
    if (j.contains("dimension")) c.dimension = get_as<int>(j, "dimension");
    if (c.dimension != 2 && c.dimension != 3) throw config_error("dimension must be 2 or 3");
    for (const char* key : {"d1", "d2"}) {
        if (!j.contains(key) || j[key].is_null()) continue;
        (std::string_view(key) == "d1" ? c.d1 : c.d2) = detail::spec_from_json(j[key], key);
    }
    for (const char* key : {"domains", "fields"}) {
        if (!j.contains(key)) continue;
        if (!j[key].is_array()) throw config_error(std::string(key) + " must be an array");
        auto& out = std::string_view(key) == "domains" ? c.domains : c.fields;
        for (std::size_t i = 0; i < j[key].size(); ++i)
            out.push_back(detail::spec_from_json(j[key][i], std::string(key) + "[" + std::to_string(i) + "]"));
    }
    if (j.contains("resolution")) c.resolution = get_as<double>(j, "resolution");
    if (c.resolution < 0.0) throw config_error("resolution must be non-negative");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
            throw config_error("seed must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("mc_samples")) c.mc_samples = get_as<std::uint64_t>(j, "mc_samples");
    if (c.mc_samples != 0 && c.mc_samples < 1000) throw config_error("mc_samples must be 0 or at least 1000");
    if (j.contains("random_configs")) c.random_configs = get_as<int>(j, "random_configs");
    if (c.random_configs < 0) throw config_error("random_configs must be non-negative");
    if (j.contains("comb_n")) c.comb_n = get_as<std::vector<int>>(j, "comb_n");
    for (int n : c.comb_n)
        if (n <= 2) throw config_error("comb_n entries must exceed 2");
    if (j.contains("etas")) c.etas = get_as<std::vector<double>>(j, "etas");
    if (j.contains("horizons")) c.horizons = get_as<std::vector<double>>(j, "horizons");
    if (j.contains("x0")) c.x0 = get_as<std::vector<double>>(j, "x0");
    if (j.contains("y0")) c.y0 = get_as<std::vector<double>>(j, "y0");
    for (const auto* p : {&c.x0, &c.y0})
        if (!p->empty() && p->size() != 2) throw config_error("x0 and y0 must be planar points");
    if (j.contains("r0")) c.r0 = get_as<double>(j, "r0");
    if (c.r0 < 0.0) throw config_error("r0 must be non-negative");
    if (j.contains("cover_m")) c.cover_m = get_as<int>(j, "cover_m");
    if (c.cover_m < 0) throw config_error("cover_m must be non-negative");
    if (j.contains("cover_perturbation")) c.cover_perturbation = get_as<double>(j, "cover_perturbation");
    if (j.contains("ball_grid")) c.ball_grid = get_as<int>(j, "ball_grid");
    if (c.ball_grid < 0) throw config_error("ball_grid must be non-negative");
    if (j.contains("ball_radius")) c.ball_radius = get_as<double>(j, "ball_radius");
    if (c.ball_radius < 0.0) throw config_error("ball_radius must be non-negative");
    if (j.contains("allow_non_simple")) c.allow_non_simple = get_as<bool>(j, "allow_non_simple");
    if (j.contains("output_dir")) c.output_dir = get_as<std::string>(j, "output_dir");
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ConfigInvalid, std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::ConfigInvalid, "cannot read config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

}  // namespace fluxgauge
