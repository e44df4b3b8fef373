// eofc: reference-channel optimisation and Monte Carlo pilot experiments for
// electro-optic frequency comb phase tracking.
//
// Exit codes: 0 success, 1 runtime failure (or optimiser disagreement),
// 2 usage / configuration error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eofc/eofc.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

std::string criterion_line(const eofc::ReferenceSet& rs, double c) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "  %.6f", c);
    return rs.label() + buf;
}

int cmd_optimize(int channels, int count, bool closed, bool brute, const std::string& table) {
    if (!closed && !brute) closed = brute = true;
    std::optional<std::pair<eofc::ReferenceSet, double>> cf, bf;
    if (closed) {
        auto rs = eofc::closed_form_optimal(channels, count);
        const double c = eofc::frobenius_criterion(rs);
        cf.emplace(std::move(rs), c);
        std::cout << criterion_line(cf->first, cf->second) << '\n';
    }
    if (brute) {
        bf = eofc::brute_force_optimal(channels, count);
        std::cout << criterion_line(bf->first, bf->second) << '\n';
    }
    if (!table.empty()) {
        if (eofc::subset_count(channels, count) > eofc::max_scan_subsets)
            throw eofc::InvalidArgument("criterion table limited to 100000 subsets");
        std::ofstream os(table);
        if (!os) throw eofc::Error("cannot write " + table);
        os << "reference_set,criterion\n";
        for (const auto& [rs, c] : eofc::enumerate_criteria(channels, count)) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.10g", c);
            os << '"' << rs.label() << "\"," << buf << '\n';
        }
    }
    if (cf && bf && std::abs(cf->second - bf->second) > 1e-10) {
        std::cerr << "error: closed-form and brute-force optima disagree\n";
        return exit_runtime;
    }
    return exit_ok;
}

std::string replace_extension(const std::string& path, const std::string& ext) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + ext;
    return path.substr(0, dot) + ext;
}

int emit(const eofc::RunConfig& rc, bool quiet) {
    eofc::ProgressFn progress;
    if (!quiet) progress = [](const std::string& s) { std::cerr << "[eofc] " << s << '\n'; };
    const auto res = eofc::run_experiment(rc.spec, progress);
    const auto hash = eofc::config_hash(rc.spec);
    if (rc.csv_path.empty()) {
        eofc::write_sweep_csv(std::cout, res, hash);
    } else {
        std::ofstream os(rc.csv_path, std::ios::binary);
        if (!os) throw eofc::Error("cannot write " + rc.csv_path);
        eofc::write_sweep_csv(os, res, hash);
    }
    if (!rc.json_path.empty()) {
        std::ofstream os(rc.json_path, std::ios::binary);
        if (!os) throw eofc::Error("cannot write " + rc.json_path);
        os << eofc::summary_json(rc.spec, res).dump(2) << '\n';
    }
    return exit_ok;
}

void apply_overrides(eofc::RunConfig& rc, const CLI::App& sub, std::uint64_t seed, int trials,
                     const std::string& out) {
    if (sub.count("--seed")) rc.spec.base.seed = seed;
    if (sub.count("--trials")) {
        if (trials < 1) throw eofc::ConfigError("--trials", "must be >= 1");
        rc.spec.trials = trials;
    }
    if (!out.empty()) {
        rc.csv_path = out;
        rc.json_path = replace_extension(out, ".json");
    }
}

eofc::SchemeSpec parse_scheme_flag(const std::string& s) {
    if (s == "wdt") return eofc::SchemeSpec::wdt();
    if (s.rfind("rat:", 0) != 0) throw eofc::ConfigError("--scheme", "expected wdt or rat:<d|half|all|heuristic|i,j,..>");
    const auto arg = s.substr(4);
    if (arg == "half") return eofc::SchemeSpec::rat_half();
    if (arg == "all") return eofc::SchemeSpec::rat_all();
    if (arg == "heuristic") return eofc::SchemeSpec::rat_heuristic();
    std::vector<int> v;
    std::stringstream ss(arg);
    for (std::string tok; std::getline(ss, tok, ',');) {
        try {
            v.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw eofc::ConfigError("--scheme", "bad reference entry '" + tok + "'");
        }
    }
    if (v.size() == 1) return eofc::SchemeSpec::rat(v[0]);
    return eofc::SchemeSpec::rat_set(v);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pilot placement and phase tracking experiments for electro-optic frequency combs"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    int trials = 0;
    std::string out;
    bool quiet = false;

    // optimize
    int opt_l = 7, opt_d = 2;
    bool opt_closed = false, opt_brute = false, opt_both = false;
    std::string opt_table;
    auto* optimize = app.add_subcommand("optimize", "Optimal reference channels by closed form and/or enumeration");
    optimize->add_option("-L,--channels", opt_l, "Channel count (odd, >= 3)")->required();
    optimize->add_option("-D,--references", opt_d, "Number of reference channels")->required();
    auto* g = optimize->add_option_group("method");
    g->add_flag("--closed-form", opt_closed, "Closed-form optimum");
    g->add_flag("--brute-force", opt_brute, "Exhaustive search");
    g->add_flag("--both", opt_both, "Both, and fail if they disagree (default)");
    g->require_option(0, 1);
    optimize->add_option("--table", opt_table, "Write a CSV of every subset and its criterion");

    // simulate
    std::string config_path;
    auto* simulate = app.add_subcommand("simulate", "Run the experiment described by a JSON config");
    simulate->add_option("config", config_path, "Config file")->required();
    for (auto* s : {simulate}) {
        s->add_option("--seed", seed, "Override the seed");
        s->add_option("--trials", trials, "Override the trial count");
        s->add_option("--out", out, "CSV output path (JSON summary goes next to it)");
        s->add_flag("-q,--quiet", quiet, "No progress lines");
    }

    // sweep
    std::string sw_over = "channels";
    std::vector<double> sw_values;
    std::vector<std::string> sw_schemes{"rat:2"};
    eofc::SystemParams sw_params;
    int sw_d = 2;
    auto* sweep = app.add_subcommand("sweep", "Run a sweep described by flags");
    sweep->add_option("--over", sw_over, "channels | linewidth-hz | linewidth-norm | subsets")
        ->check(CLI::IsMember({"channels", "linewidth-hz", "linewidth-norm", "subsets"}));
    sweep->add_option("--values", sw_values, "Sweep values (L, Hz or delta_nu_r * Ts)");
    sweep->add_option("--scheme", sw_schemes, "wdt | rat:<d|half|all|heuristic> | rat:i,j,...")->expected(1, -1);
    sweep->add_option("-L,--channels", sw_params.channels, "Channel count");
    sweep->add_option("-D,--references", sw_d, "Reference count for --over subsets");
    sweep->add_option("--pilot-rate", sw_params.pilot_rate, "Average pilot rate alpha_p");
    sweep->add_option("-N,--n-symbols", sw_params.n_symbols, "Block length per channel");
    sweep->add_option("--cw-linewidth", sw_params.delta_nu_c, "CW laser linewidth [Hz]");
    sweep->add_option("--rf-linewidth", sw_params.delta_nu_r, "RF oscillator linewidth [Hz]");
    sweep->add_option("--seed", seed, "Seed");
    sweep->add_option("--trials", trials, "Trials per point");
    sweep->add_option("--out", out, "CSV output path (JSON summary goes next to it)");
    sweep->add_flag("-q,--quiet", quiet, "No progress lines");

    // calibrate-snr
    int cal_order = 64;
    double cal_target = 1e-3;
    auto* calibrate = app.add_subcommand("calibrate-snr", "Es/N0 giving a target AWGN BER");
    calibrate->add_option("--order", cal_order, "QAM order")->check(CLI::IsMember({4, 16, 64, 256}));
    calibrate->add_option("--target-ber", cal_target, "Target bit error rate");

    // pilots
    std::string pil_scheme = "rat:2";
    eofc::SystemParams pil_params;
    pil_params.channels = 5;
    pil_params.pilot_rate = 0.2;
    pil_params.n_symbols = 20;
    auto* pilots = app.add_subcommand("pilots", "Print a pilot mask as a plain PBM image");
    pilots->add_option("--scheme", pil_scheme, "wdt | rat:<d|half|all|heuristic> | rat:i,j,...");
    pilots->add_option("-L,--channels", pil_params.channels, "Channel count");
    pilots->add_option("--pilot-rate", pil_params.pilot_rate, "Average pilot rate alpha_p");
    pilots->add_option("-N,--n-symbols", pil_params.n_symbols, "Block length");

    // trial
    std::string tr_scheme = "rat:2";
    eofc::SystemParams tr_params;
    std::string tr_dump;
    auto* trial = app.add_subcommand("trial", "Run one trial and optionally dump the source-phase track");
    trial->add_option("--scheme", tr_scheme, "wdt | rat:<d|half|all|heuristic> | rat:i,j,...");
    trial->add_option("-L,--channels", tr_params.channels, "Channel count");
    trial->add_option("--pilot-rate", tr_params.pilot_rate, "Average pilot rate alpha_p");
    trial->add_option("-N,--n-symbols", tr_params.n_symbols, "Block length");
    trial->add_option("--rf-linewidth", tr_params.delta_nu_r, "RF oscillator linewidth [Hz]");
    trial->add_option("--seed", tr_params.seed, "Seed");
    trial->add_option("--dump-track", tr_dump, "CSV of k, theta_c, theta_c_hat, theta_r, theta_r_hat");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        if (optimize->parsed()) {
            return cmd_optimize(opt_l, opt_d, opt_closed || opt_both, opt_brute || opt_both, opt_table);
        }
        if (calibrate->parsed()) {
            const double snr = eofc::calibrate_snr(cal_target, eofc::Constellation::square_qam(cal_order));
            std::printf("%.6f\n", snr);
            return exit_ok;
        }
        if (simulate->parsed()) {
            auto rc = eofc::load_run_config(config_path);
            apply_overrides(rc, *simulate, seed, trials, out);
            return emit(rc, quiet);
        }
        if (sweep->parsed()) {
            eofc::RunConfig rc;
            rc.spec.base = sw_params;
            rc.spec.schemes.clear();
            for (const auto& s : sw_schemes) rc.spec.schemes.push_back(parse_scheme_flag(s));
            if (sw_over == "subsets") {
                rc.spec.sweep = eofc::SubsetScan{sw_d};
            } else {
                if (sw_values.empty()) throw eofc::ConfigError("--values", "sweep list is empty");
                if (sw_over == "channels") {
                    std::vector<int> ls;
                    for (double v : sw_values) ls.push_back(static_cast<int>(v));
                    rc.spec.sweep = eofc::ChannelCountSweep{ls};
                } else {
                    rc.spec.sweep = eofc::LinewidthSweep{sw_values, sw_over == "linewidth-norm"};
                }
            }
            apply_overrides(rc, *sweep, seed, trials, out);
            try {
                rc.spec.validate();
            } catch (const eofc::InvalidArgument& e) {
                throw eofc::ConfigError("", e.what());
            }
            return emit(rc, quiet);
        }
        if (pilots->parsed()) {
            const auto scheme = parse_scheme_flag(pil_scheme);
            eofc::write_pbm(std::cout, eofc::make_trial_scheme(scheme, pil_params).pattern);
            return exit_ok;
        }
        if (trial->parsed()) {
            tr_params.snr_db = eofc::calibrate_snr(1e-3, eofc::default_constellation());
            const auto ts = eofc::make_trial_scheme(parse_scheme_flag(tr_scheme), tr_params);
            const auto stream = eofc::trial_stream(tr_params.seed, 0, 0);
            const auto ch = eofc::simulate_channel(tr_params, ts.pattern, eofc::default_constellation(), stream);
            auto est = eofc::estimate_phases(ch.rx, ts, tr_params, {}, ch.trace);
            eofc::score_against(est, ch.trace);
            const auto report = eofc::detect_and_count(ch, est, ts.pattern, eofc::default_constellation());
            std::printf("ber %.6g  errors %llu  bits %llu  mean_est_error %.6g\n", report.ber_aggregate,
                        static_cast<unsigned long long>(report.total_errors()),
                        static_cast<unsigned long long>(report.total_bits()), est.mean_est_error());
            if (!tr_dump.empty()) {
                std::ofstream os(tr_dump);
                if (!os) throw eofc::Error("cannot write " + tr_dump);
                eofc::write_source_csv(os, ch.trace, est);
            }
            return exit_ok;
        }
    } catch (const eofc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_usage;
    } catch (const eofc::InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return exit_usage;
    } catch (const eofc::RateInfeasible& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_ok;
}
