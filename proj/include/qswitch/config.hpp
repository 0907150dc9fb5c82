#pragma once

// Run configuration: a single JSON file with device parameters, experiment
// grids and output paths. Unknown keys are rejected with their dotted path;
// omitted keys fall back to the measured device defaults. Flag overrides use
// the same dotted paths (e.g. --set circuit.g12_ghz=0.008).

#include <limits>
#include <string>

#include <json.hpp>

#include "qswitch/circuit.hpp"
#include "qswitch/errors.hpp"
#include "qswitch/tomography.hpp"

namespace qswitch {

using nlohmann::json;

inline json default_config() {
    return json{
        {"circuit",
         {{"omega1_ghz", 4.670},
          {"omega2_ghz", 4.619},
          {"omegac_ghz", 6.183},
          {"alpha1_ghz", -0.222},
          {"alpha2_ghz", -0.242},
          {"alphac_ghz", -0.378},
          {"g1_ghz", 0.110},
          {"g2_ghz", 0.105},
          {"g12_ghz", 0.0075},
          {"t1_q1_ns", 6510.0},
          {"t1_q2_ns", 6580.0},
          {"t1_c_ns", 4060.0},
          {"t2_q1_ns", 540.0},
          {"t2_q2_ns", 7430.0},
          {"t2_c_ns", 270.0},
          {"levels", 3}}},
        {"experiment",
         {{"coupler_state", 1},
          {"noisy", false},
          {"shots", 0L},
          {"seed", 1234L},
          {"chevron",
           {{"omegac_min_ghz", 6.00},
            {"omegac_max_ghz", 6.30},
            {"n_omegac", 31},
            {"t_max_ns", 300.0},
            {"n_t", 121}}},
          {"coupling",
           {{"delta_min_ghz", -2.6}, {"delta_max_ghz", -1.1}, {"n_delta", 25}}},
          {"transistor",
           {{"interaction_omegac_ghz", 6.183},
            {"t_max_ns", 120.0},
            {"n_t", 241},
            {"idle_ns", 5.0}}},
          {"qpt",
           {{"gate", "both"},
            {"idle_ns", 5.0},
            {"bootstrap", 200},
            {"correct_readout", true},
            {"write_records", true},
            {"records_in", ""}}},
          {"readout",
           {{"q1_flip_up", 0.0},
            {"q1_flip_down", 0.0},
            {"q2_flip_up", 0.0},
            {"q2_flip_down", 0.0},
            {"matrix", nullptr}}}}},
        {"output", {{"dir", "."}}}};
}

namespace detail {

inline void merge_into(json& base, const json& user, const std::string& path) {
    if (!user.is_object())
        throw config_error("config: expected an object at " + (path.empty() ? "<root>" : path));
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string full = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key()))
            throw config_error("config: unknown key '" + full + "'");
        json& slot = base[it.key()];
        if (slot.is_object() && !slot.is_null()) {
            merge_into(slot, it.value(), full);
        } else {
            // leaf: basic type compatibility against the default
            const json& v = it.value();
            const bool num_ok = slot.is_number() && v.is_number();
            const bool same = slot.type() == v.type();
            const bool nullable = it.key() == "matrix";  // readout.matrix: null or array
            if (!(num_ok || same || (nullable && (v.is_null() || v.is_array()))))
                throw config_error("config: bad value type for '" + full + "'");
            slot = v;
        }
    }
}

inline json parse_set_value(const std::string& raw) {
    try {
        return json::parse(raw);
    } catch (const json::exception&) {
        return json(raw);  // plain string
    }
}

} // namespace detail

// defaults <- file <- --set overrides, with unknown keys rejected throughout
inline json resolve_config(const json& file_config,
                           const std::vector<std::string>& set_overrides) {
    json cfg = default_config();
    if (!file_config.is_null()) detail::merge_into(cfg, file_config, "");
    for (const std::string& kv : set_overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw config_error("config: --set expects key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        json patch = detail::parse_set_value(kv.substr(eq + 1));
        // build the nested single-key object for the dotted path
        std::size_t pos = key.size();
        while (true) {
            const std::size_t dot = key.rfind('.', pos - 1);
            const std::string part =
                key.substr(dot == std::string::npos ? 0 : dot + 1,
                           pos - (dot == std::string::npos ? 0 : dot + 1));
            if (part.empty()) throw config_error("config: empty key segment in '" + key + "'");
            patch = json{{part, patch}};
            if (dot == std::string::npos) break;
            pos = dot;
        }
        detail::merge_into(cfg, patch, "");
    }
    return cfg;
}

inline CircuitParams circuit_from_config(const json& cfg) {
    const json& c = cfg.at("circuit");
    CircuitParams p;
    p.omega1 = c.at("omega1_ghz").get<double>();
    p.omega2 = c.at("omega2_ghz").get<double>();
    p.omegac = c.at("omegac_ghz").get<double>();
    p.alpha1 = c.at("alpha1_ghz").get<double>();
    p.alpha2 = c.at("alpha2_ghz").get<double>();
    p.alphac = c.at("alphac_ghz").get<double>();
    p.g1 = c.at("g1_ghz").get<double>();
    p.g2 = c.at("g2_ghz").get<double>();
    p.g12 = c.at("g12_ghz").get<double>();
    p.t1_q1 = c.at("t1_q1_ns").get<double>();
    p.t1_q2 = c.at("t1_q2_ns").get<double>();
    p.t1_c = c.at("t1_c_ns").get<double>();
    p.t2_q1 = c.at("t2_q1_ns").get<double>();
    p.t2_q2 = c.at("t2_q2_ns").get<double>();
    p.t2_c = c.at("t2_c_ns").get<double>();
    p.levels = c.at("levels").get<int>();
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw config_error(std::string("config: circuit: ") + e.what());
    }
    return p;
}

inline ReadoutMatrix readout_from_config(const json& cfg) {
    const json& r = cfg.at("experiment").at("readout");
    if (!r.at("matrix").is_null()) {
        const json& m = r.at("matrix");
        if (!m.is_array() || m.size() != 16)
            throw config_error("config: experiment.readout.matrix must have 16 entries");
        ReadoutMatrix out;
        for (int row = 0; row < 4; ++row)
            for (int col = 0; col < 4; ++col)
                out.m(row, col) = m[static_cast<std::size_t>(4 * row + col)].get<double>();
        try {
            out.validate();
        } catch (const std::exception& e) {
            throw config_error(std::string("config: experiment.readout.matrix: ") + e.what());
        }
        return out;
    }
    try {
        return readout_from_flip_probs(r.at("q1_flip_up").get<double>(),
                                       r.at("q1_flip_down").get<double>(),
                                       r.at("q2_flip_up").get<double>(),
                                       r.at("q2_flip_down").get<double>());
    } catch (const std::exception& e) {
        throw config_error(std::string("config: experiment.readout: ") + e.what());
    }
}

} // namespace qswitch
