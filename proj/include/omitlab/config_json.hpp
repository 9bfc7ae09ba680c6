#pragma once

// JSON form of PhysicalConfig. Keys are the field names; frequencies may be a
// bare number (rad/s) or {"value": v, "unit": "rad/s" | "Hz" | "units_of_omega_m"}.
// Keys starting with '_' are comments and ignored.

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "omitlab/errors.hpp"
#include "omitlab/model.hpp"

namespace omitlab {

using json = nlohmann::json;

namespace detail {

inline double number(const json& j, const std::string& key) {
    if (!j.is_number())
        throw ValidationError("config key '" + key + "' must be a number");
    return j.get<double>();
}

/// Frequency in rad/s. `omega_m` is null while omega_m itself is being read.
inline double frequency(const json& j, const std::string& key, const double* omega_m) {
    if (j.is_number())
        return j.get<double>();
    if (!j.is_object() || !j.contains("value") || !j.contains("unit"))
        throw ValidationError("config key '" + key + "' must be a number or {value, unit}");
    for (const auto& [k, v] : j.items())
        if (k != "value" && k != "unit" && (k.empty() || k[0] != '_'))
            throw ValidationError("config key '" + key + "': unexpected field '" + k + "'");
    const double v = number(j.at("value"), key + ".value");
    const json& u = j.at("unit");
    if (!u.is_string())
        throw ValidationError("config key '" + key + "': unit must be a string");
    const std::string unit = u.get<std::string>();
    if (unit == "rad/s")
        return v;
    if (unit == "Hz")
        return 2.0 * constants::pi * v;
    if (unit == "units_of_omega_m") {
        if (omega_m == nullptr)
            throw ValidationError("config key '" + key + "' cannot be given in units of omega_m");
        return v * *omega_m;
    }
    throw ValidationError("config key '" + key + "': unknown unit '" + unit + "'");
}

} // namespace detail

/// Missing keys keep their default values; unknown keys are rejected.
inline PhysicalConfig config_from_json(const json& j) {
    if (!j.is_object())
        throw ValidationError("config must be a JSON object");
    static const std::set<std::string> known = {
        "lambda_c", "P",          "P_p",        "L",  "m",  "R",       "cav_len",
        "kappa",    "omega_phi1", "omega_phi2", "Q1", "Q2", "omega_m", "detuning_mode"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k) && (k.empty() || k[0] != '_'))
            throw ValidationError("unknown config key '" + k + "'");

    PhysicalConfig cfg;
    if (j.contains("omega_m"))
        cfg.omega_m = detail::frequency(j.at("omega_m"), "omega_m", nullptr);
    const double* wm = &cfg.omega_m;

    auto num = [&](const char* key, double& field) {
        if (j.contains(key))
            field = detail::number(j.at(key), key);
    };
    auto freq = [&](const char* key, double& field) {
        if (j.contains(key))
            field = detail::frequency(j.at(key), key, wm);
    };
    num("lambda_c", cfg.lambda_c);
    num("P", cfg.P);
    if (j.contains("P_p") && !j.at("P_p").is_null())
        cfg.P_p = detail::number(j.at("P_p"), "P_p");
    if (j.contains("L")) {
        const double L = detail::number(j.at("L"), "L");
        if (L != std::round(L))
            throw ValidationError("config key 'L' must be an integer");
        cfg.L = static_cast<int>(L);
    }
    num("m", cfg.m);
    num("R", cfg.R);
    num("cav_len", cfg.cav_len);
    freq("kappa", cfg.kappa);
    freq("omega_phi1", cfg.omega_phi1);
    freq("omega_phi2", cfg.omega_phi2);
    num("Q1", cfg.Q1);
    num("Q2", cfg.Q2);

    if (j.contains("detuning_mode")) {
        const json& mode = j.at("detuning_mode");
        if (!mode.is_object() || !mode.contains("type") || !mode.at("type").is_string())
            throw ValidationError("detuning_mode must be an object with a string 'type'");
        const std::string type = mode.at("type").get<std::string>();
        if (type == "fixed_effective") {
            if (!mode.contains("delta_prime"))
                throw ValidationError("fixed_effective detuning needs 'delta_prime'");
            cfg.detuning_mode = FixedEffective{detail::frequency(mode.at("delta_prime"), "delta_prime", wm)};
        } else if (type == "self_consistent") {
            if (!mode.contains("delta0"))
                throw ValidationError("self_consistent detuning needs 'delta0'");
            cfg.detuning_mode = SelfConsistent{detail::frequency(mode.at("delta0"), "delta0", wm)};
        } else {
            throw ValidationError("unknown detuning_mode type '" + type + "'");
        }
    } else {
        cfg.detuning_mode = FixedEffective{cfg.omega_m};
    }
    validate(cfg);
    return cfg;
}

inline PhysicalConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot read config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

/// Fully resolved SI form; every frequency in rad/s.
inline json config_to_json(const PhysicalConfig& cfg) {
    auto rad = [](double v) { return json{{"value", v}, {"unit", "rad/s"}}; };
    json j;
    j["lambda_c"] = cfg.lambda_c;
    j["P"] = cfg.P;
    j["P_p"] = cfg.probe_power();
    j["L"] = cfg.L;
    j["m"] = cfg.m;
    j["R"] = cfg.R;
    j["cav_len"] = cfg.cav_len;
    j["kappa"] = rad(cfg.kappa);
    j["omega_phi1"] = rad(cfg.omega_phi1);
    j["omega_phi2"] = rad(cfg.omega_phi2);
    j["Q1"] = cfg.Q1;
    j["Q2"] = cfg.Q2;
    j["omega_m"] = rad(cfg.omega_m);
    if (const auto* f = std::get_if<FixedEffective>(&cfg.detuning_mode))
        j["detuning_mode"] = {{"type", "fixed_effective"}, {"delta_prime", rad(f->delta_prime)}};
    else
        j["detuning_mode"] = {{"type", "self_consistent"},
                              {"delta0", rad(std::get<SelfConsistent>(cfg.detuning_mode).delta0)}};
    return j;
}

/// The default parameter set as an editable config document.
inline json defaults_document() {
    const PhysicalConfig d = default_config();
    json j;
    j["_notes"] = {
        "SI units. Frequencies: bare numbers are rad/s; objects take unit rad/s, Hz (ordinary "
        "frequency, converted with 2*pi) or units_of_omega_m.",
        "kappa is the cavity amplitude decay rate 2*pi x 15 MHz, i.e. kappa/omega_m = 0.1875.",
        "cav_len is not fixed by the model; 1 mm places the defaults in a visible transparency "
        "regime.",
        "P_p omitted: defaults to 1e-6 * P. The linear response does not depend on it."};
    j["lambda_c"] = d.lambda_c;
    j["P"] = d.P;
    j["L"] = d.L;
    j["m"] = d.m;
    j["R"] = d.R;
    j["cav_len"] = d.cav_len;
    j["kappa"] = {{"value", 15e6}, {"unit", "Hz"}};
    j["omega_phi1"] = {{"value", 1.1}, {"unit", "units_of_omega_m"}};
    j["omega_phi2"] = {{"value", 0.9}, {"unit", "units_of_omega_m"}};
    j["Q1"] = d.Q1;
    j["Q2"] = d.Q2;
    j["omega_m"] = {{"value", d.omega_m}, {"unit", "rad/s"}, {"_note", "160*pi x 10^6 rad/s"}};
    j["detuning_mode"] = {{"type", "fixed_effective"},
                          {"delta_prime", {{"value", 1.0}, {"unit", "units_of_omega_m"}}}};
    return j;
}

} // namespace omitlab
