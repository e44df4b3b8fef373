#pragma once

// JSON run configuration for the command-line tool.
//
// {
//   "system":  { "channels": 11, "cw_linewidth_hz": 1e5, "rf_linewidth_hz": 100,
//                "symbol_rate_baud": 2e10, "n_symbols": 20000, "pilot_rate": 0.01,
//                "seed": 1, "modulation_order": 64 },
//   "snr":     { "mode": "calibrated", "target_ber": 1e-3 }   // or { "mode": "fixed", "snr_db": 22 }
//   "schemes": [ { "kind": "rat", "d": 2 }, { "kind": "rat", "d": "half" },
//                { "kind": "rat", "indices": [-3, 3] }, { "kind": "wdt" } ],
//   "sweep":   { "channel_count": [11, 21] }        // or rf_linewidth_hz / rf_linewidth_normalized
//                                                   // or { "subset_scan": { "d": 2 } }
//   "trials":  10,
//   "tracker": { "init_cov": 3.29, "meas_floor": 1e-9 },
//   "output":  { "csv": "out.csv", "json": "out.json" }
// }
//
// Every object is closed: unknown keys are rejected with the offending path.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "eofc/error.hpp"
#include "eofc/harness.hpp"

namespace eofc {

struct RunConfig {
    ExperimentSpec spec;
    std::string csv_path;
    std::string json_path;
};

namespace config_detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items())
        if (!ok.count(k)) throw ConfigError(path.empty() ? k : path + "." + k, "unknown key");
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

template <typename T>
T get(const json& obj, const std::string& path, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    try {
        if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(join(path, key), "expected a string");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
        } else {
            if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
        }
        return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(join(path, key), e.what());
    }
}

template <typename T>
std::vector<T> get_list(const json& obj, const std::string& path, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_array()) throw ConfigError(join(path, key), "expected a list");
    if (v.empty()) throw ConfigError(join(path, key), "list must not be empty");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& e = v[i];
        const auto p = join(path, key) + "[" + std::to_string(i) + "]";
        if constexpr (std::is_integral_v<T>) {
            if (!e.is_number_integer()) throw ConfigError(p, "expected an integer");
        } else {
            if (!e.is_number()) throw ConfigError(p, "expected a number");
        }
        out.push_back(e.get<T>());
    }
    return out;
}

inline TrackerVariant parse_variant(const std::string& s, const std::string& path) {
    if (s == "ra_per_channel") return TrackerVariant::ra_per_channel;
    if (s == "joint_two_state") return TrackerVariant::joint_two_state;
    if (s == "pilot_interp") return TrackerVariant::pilot_interp;
    throw ConfigError(path, "unknown tracker variant '" + s + "'");
}

inline SchemeSpec parse_scheme(const json& j, const std::string& path) {
    check_keys(j, path, {"kind", "d", "indices", "tracker"});
    if (!j.contains("kind")) throw ConfigError(join(path, "kind"), "missing");
    const auto kind = get<std::string>(j, path, "kind", "");
    SchemeSpec s;
    if (kind == "wdt") {
        if (j.contains("d") || j.contains("indices"))
            throw ConfigError(path, "WDT takes neither 'd' nor 'indices'");
        s = SchemeSpec::wdt();
    } else if (kind == "rat") {
        if (j.contains("indices")) {
            if (j.contains("d")) throw ConfigError(path, "give either 'd' or 'indices', not both");
            s = SchemeSpec::rat_set(get_list<int>(j, path, "indices"));
        } else if (j.contains("d")) {
            const auto& d = j.at("d");
            if (d.is_number_integer()) {
                s = SchemeSpec::rat(d.get<int>());
                if (s.d < 2) throw ConfigError(join(path, "d"), "reference count must be >= 2");
            } else if (d == "half") {
                s = SchemeSpec::rat_half();
            } else if (d == "all") {
                s = SchemeSpec::rat_all();
            } else if (d == "heuristic") {
                s = SchemeSpec::rat_heuristic();
            } else {
                throw ConfigError(join(path, "d"), "expected an integer, \"half\", \"all\" or \"heuristic\"");
            }
        } else {
            throw ConfigError(join(path, "d"), "RAT needs 'd' or 'indices'");
        }
    } else {
        throw ConfigError(join(path, "kind"), "expected \"rat\" or \"wdt\"");
    }
    if (j.contains("tracker")) s.variant = parse_variant(get<std::string>(j, path, "tracker", ""), join(path, "tracker"));
    return s;
}

inline json scheme_to_json(const SchemeSpec& s) {
    json j;
    j["kind"] = s.kind == PilotScheme::rat ? "rat" : "wdt";
    if (s.kind == PilotScheme::rat) {
        switch (s.rule) {
            case RefCountRule::fixed: j["d"] = s.d; break;
            case RefCountRule::half: j["d"] = "half"; break;
            case RefCountRule::all: j["d"] = "all"; break;
            case RefCountRule::heuristic: j["d"] = "heuristic"; break;
            case RefCountRule::explicit_set: j["indices"] = s.indices; break;
        }
    }
    if (s.variant) j["tracker"] = to_string(*s.variant);
    return j;
}

}  // namespace config_detail

/// Parses and validates a configuration document. Throws ConfigError.
inline RunConfig parse_run_config(const nlohmann::json& root) {
    using namespace config_detail;
    check_keys(root, "", {"system", "snr", "schemes", "sweep", "trials", "tracker", "output"});
    RunConfig rc;
    auto& spec = rc.spec;

    if (root.contains("system")) {
        const auto& s = root.at("system");
        check_keys(s, "system",
                   {"channels", "cw_linewidth_hz", "rf_linewidth_hz", "symbol_rate_baud", "n_symbols", "pilot_rate",
                    "seed", "modulation_order"});
        auto& b = spec.base;
        b.channels = get<int>(s, "system", "channels", b.channels);
        b.delta_nu_c = get<double>(s, "system", "cw_linewidth_hz", b.delta_nu_c);
        b.delta_nu_r = get<double>(s, "system", "rf_linewidth_hz", b.delta_nu_r);
        b.symbol_rate = get<double>(s, "system", "symbol_rate_baud", b.symbol_rate);
        b.n_symbols = get<int>(s, "system", "n_symbols", b.n_symbols);
        b.pilot_rate = get<double>(s, "system", "pilot_rate", b.pilot_rate);
        b.seed = get<std::uint64_t>(s, "system", "seed", b.seed);
        spec.modulation_order = get<int>(s, "system", "modulation_order", spec.modulation_order);
    }

    if (root.contains("snr")) {
        const auto& s = root.at("snr");
        check_keys(s, "snr", {"mode", "target_ber", "snr_db"});
        const auto mode = get<std::string>(s, "snr", "mode", "calibrated");
        if (mode == "calibrated") {
            spec.snr_mode = SnrMode::calibrated;
            if (s.contains("snr_db")) throw ConfigError("snr.snr_db", "not used in calibrated mode");
            spec.target_ber = get<double>(s, "snr", "target_ber", spec.target_ber);
        } else if (mode == "fixed") {
            spec.snr_mode = SnrMode::fixed_db;
            if (!s.contains("snr_db")) throw ConfigError("snr.snr_db", "required in fixed mode");
            if (s.contains("target_ber")) throw ConfigError("snr.target_ber", "not used in fixed mode");
            spec.base.snr_db = get<double>(s, "snr", "snr_db", 0.0);
        } else {
            throw ConfigError("snr.mode", "expected \"calibrated\" or \"fixed\"");
        }
    }

    if (root.contains("schemes")) {
        const auto& arr = root.at("schemes");
        if (!arr.is_array()) throw ConfigError("schemes", "expected a list");
        if (arr.empty()) throw ConfigError("schemes", "list must not be empty");
        spec.schemes.clear();
        for (std::size_t i = 0; i < arr.size(); ++i)
            spec.schemes.push_back(parse_scheme(arr[i], "schemes[" + std::to_string(i) + "]"));
    }

    if (!root.contains("sweep")) throw ConfigError("sweep", "missing");
    {
        const auto& s = root.at("sweep");
        check_keys(s, "sweep", {"channel_count", "rf_linewidth_hz", "rf_linewidth_normalized", "subset_scan"});
        if (s.size() != 1) throw ConfigError("sweep", "exactly one sweep kind must be given");
        if (s.contains("channel_count")) {
            spec.sweep = ChannelCountSweep{get_list<int>(s, "sweep", "channel_count")};
        } else if (s.contains("rf_linewidth_hz")) {
            spec.sweep = LinewidthSweep{get_list<double>(s, "sweep", "rf_linewidth_hz"), false};
        } else if (s.contains("rf_linewidth_normalized")) {
            spec.sweep = LinewidthSweep{get_list<double>(s, "sweep", "rf_linewidth_normalized"), true};
        } else {
            const auto& sc = s.at("subset_scan");
            check_keys(sc, "sweep.subset_scan", {"d"});
            if (!sc.contains("d")) throw ConfigError("sweep.subset_scan.d", "missing");
            spec.sweep = SubsetScan{get<int>(sc, "sweep.subset_scan", "d", 2)};
        }
    }

    spec.trials = get<int>(root, "", "trials", spec.trials);

    if (root.contains("tracker")) {
        const auto& t = root.at("tracker");
        check_keys(t, "tracker", {"init_cov", "meas_floor"});
        spec.tracker.init_cov = get<double>(t, "tracker", "init_cov", spec.tracker.init_cov);
        spec.tracker.meas_floor = get<double>(t, "tracker", "meas_floor", spec.tracker.meas_floor);
    }

    if (root.contains("output")) {
        const auto& o = root.at("output");
        check_keys(o, "output", {"csv", "json"});
        rc.csv_path = get<std::string>(o, "output", "csv", "");
        rc.json_path = get<std::string>(o, "output", "json", "");
    }

    try {
        spec.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError("", e.what());
    }
    return rc;
}

inline RunConfig parse_run_config(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("<document>", e.what());
    }
    return parse_run_config(root);
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

/// Fully resolved configuration (every default made explicit).
inline nlohmann::json to_json(const ExperimentSpec& spec) {
    using nlohmann::json;
    json j;
    j["system"] = {{"channels", spec.base.channels},           {"cw_linewidth_hz", spec.base.delta_nu_c},
                   {"rf_linewidth_hz", spec.base.delta_nu_r},  {"symbol_rate_baud", spec.base.symbol_rate},
                   {"n_symbols", spec.base.n_symbols},         {"pilot_rate", spec.base.pilot_rate},
                   {"seed", spec.base.seed},                   {"modulation_order", spec.modulation_order}};
    if (spec.snr_mode == SnrMode::calibrated)
        j["snr"] = {{"mode", "calibrated"}, {"target_ber", spec.target_ber}};
    else
        j["snr"] = {{"mode", "fixed"}, {"snr_db", spec.base.snr_db}};
    j["schemes"] = json::array();
    for (const auto& s : spec.schemes) j["schemes"].push_back(config_detail::scheme_to_json(s));
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, ChannelCountSweep>)
                j["sweep"] = {{"channel_count", s.values}};
            else if constexpr (std::is_same_v<S, LinewidthSweep>)
                j["sweep"] = {{s.normalized ? "rf_linewidth_normalized" : "rf_linewidth_hz", s.values}};
            else
                j["sweep"] = {{"subset_scan", {{"d", s.d}}}};
        },
        spec.sweep);
    j["trials"] = spec.trials;
    j["tracker"] = {{"init_cov", spec.tracker.init_cov}, {"meas_floor", spec.tracker.meas_floor}};
    return j;
}

/// 64-bit FNV-1a of the resolved configuration, as 16 hex digits.
inline std::string config_hash(const ExperimentSpec& spec) {
    const std::string text = to_json(spec).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Archival summary: resolved configuration plus every result row.
inline nlohmann::json summary_json(const ExperimentSpec& spec, const SweepResult& res) {
    using nlohmann::json;
    json j;
    j["config"] = to_json(spec);
    j["config_hash"] = config_hash(spec);
    j["snr_db"] = res.snr_db;
    j["rows"] = json::array();
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    for (const auto& r : res.rows)
        j["rows"].push_back({{"sweep_kind", r.sweep_kind},
                             {"sweep_value", r.sweep_value},
                             {"L", r.channels},
                             {"scheme", r.scheme},
                             {"D", r.d},
                             {"reference_set", r.reference_set},
                             {"pilot_spacing", r.time_spacing},
                             {"pilot_fraction", num(r.pilot_fraction)},
                             {"ber", num(r.ber)},
                             {"ber_stderr", num(r.ber_stderr)},
                             {"mean_est_error", num(r.mean_est_error)},
                             {"est_error_stderr", num(r.est_error_stderr)},
                             {"bit_errors", r.bit_errors},
                             {"bits", r.bits},
                             {"trials", r.trials},
                             {"low_confidence", r.low_confidence},
                             {"feasible", r.feasible},
                             {"seed", r.seed},
                             {"note", r.note}});
    return j;
}

}  // namespace eofc
