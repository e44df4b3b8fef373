#pragma once

// Monte Carlo experiment engine.
//
// Every trial owns a random stream keyed by (seed, sweep index, trial index)
// and splits it into independent data / phase-noise / additive-noise streams.
// All schemes compared at one sweep point reuse the same trial streams, so they
// see identical data, phase noise and channel noise wherever their pilot masks
// agree. Reductions run in trial order, which makes every number a function of
// the ExperimentSpec and seed only, whatever the thread count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "eofc/error.hpp"
#include "eofc/model.hpp"
#include "eofc/modem.hpp"
#include "eofc/optimizer.hpp"
#include "eofc/pilots.hpp"
#include "eofc/random.hpp"
#include "eofc/tracker.hpp"

namespace eofc {

/// How a RAT scheme picks its reference count.
enum class RefCountRule { fixed, half, all, heuristic, explicit_set };

struct SchemeSpec {
    PilotScheme kind = PilotScheme::rat;
    RefCountRule rule = RefCountRule::fixed;
    int d = 2;                          ///< for RefCountRule::fixed
    std::vector<int> indices;           ///< for RefCountRule::explicit_set
    std::optional<TrackerVariant> variant;  ///< default: RA per channel for RAT, joint for WDT

    static SchemeSpec rat(int d) { return {PilotScheme::rat, RefCountRule::fixed, d, {}, {}}; }
    static SchemeSpec rat_half() { return {PilotScheme::rat, RefCountRule::half, 0, {}, {}}; }
    static SchemeSpec rat_all() { return {PilotScheme::rat, RefCountRule::all, 0, {}, {}}; }
    static SchemeSpec rat_heuristic() { return {PilotScheme::rat, RefCountRule::heuristic, 0, {}, {}}; }
    static SchemeSpec rat_set(std::vector<int> idx) {
        return {PilotScheme::rat, RefCountRule::explicit_set, 0, std::move(idx), {}};
    }
    static SchemeSpec wdt() { return {PilotScheme::wdt, RefCountRule::fixed, 0, {}, {}}; }

    TrackerVariant tracker_variant() const {
        if (variant) return *variant;
        return kind == PilotScheme::rat ? TrackerVariant::ra_per_channel : TrackerVariant::joint_two_state;
    }

    /// Reference count for a comb of L lines (RAT only).
    int reference_count(int channels, double pilot_rate) const {
        switch (rule) {
            case RefCountRule::fixed: return d;
            case RefCountRule::half: return (channels + 1) / 2;
            case RefCountRule::all: return channels;
            case RefCountRule::heuristic: return d_opt_heuristic(channels, pilot_rate);
            case RefCountRule::explicit_set: return static_cast<int>(indices.size());
        }
        return d;
    }

    /// Reference set chosen by the closed-form optimum unless given explicitly.
    ReferenceSet reference_set(int channels, double pilot_rate) const {
        if (rule == RefCountRule::explicit_set) return build_reference_set(channels, indices);
        return closed_form_optimal(channels, reference_count(channels, pilot_rate));
    }

    std::string label() const {
        std::string base;
        if (kind == PilotScheme::wdt) {
            base = "WDT";
        } else {
            switch (rule) {
                case RefCountRule::fixed: base = "RAT D=" + std::to_string(d); break;
                case RefCountRule::half: base = "RAT D=(L+1)/2"; break;
                case RefCountRule::all: base = "RAT D=L"; break;
                case RefCountRule::heuristic: base = "RAT D=heuristic"; break;
                case RefCountRule::explicit_set: {
                    base = "RAT D={";
                    for (std::size_t i = 0; i < indices.size(); ++i) base += (i ? "," : "") + std::to_string(indices[i]);
                    base += "}";
                    break;
                }
            }
        }
        if (variant) base += std::string(" [") + to_string(*variant) + "]";
        return base;
    }
};

enum class SnrMode { fixed_db, calibrated };

struct ChannelCountSweep { std::vector<int> values; };
struct LinewidthSweep {
    std::vector<double> values;
    bool normalized = false;  ///< values are delta_nu_r * Ts rather than Hz
};
struct SubsetScan { int d = 2; };

using Sweep = std::variant<ChannelCountSweep, LinewidthSweep, SubsetScan>;

struct ExperimentSpec {
    SystemParams base;
    std::vector<SchemeSpec> schemes{SchemeSpec::rat(2)};
    Sweep sweep = ChannelCountSweep{{11}};
    int trials = 10;
    SnrMode snr_mode = SnrMode::calibrated;
    double target_ber = 1e-3;
    int modulation_order = 64;
    TrackerConfig tracker;

    void validate() const {
        base.validate();
        tracker.validate();
        detail::require(trials >= 1, "trials must be >= 1");
        detail::require(!schemes.empty() || std::holds_alternative<SubsetScan>(sweep), "scheme list is empty");
        std::visit(
            [](const auto& s) {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, SubsetScan>) {
                    detail::require(s.d >= 2, "subset scan needs D >= 2");
                } else {
                    detail::require(!s.values.empty(), "sweep list is empty");
                    for (auto v : s.values) {
                        if constexpr (std::is_same_v<S, ChannelCountSweep>)
                            detail::require(v >= 3 && v % 2 == 1, "channel counts must be odd and >= 3");
                        else
                            detail::require(std::isfinite(v) && v >= 0.0, "linewidths must be finite and >= 0");
                    }
                }
            },
            sweep);
        if (snr_mode == SnrMode::calibrated)
            detail::require(target_ber > 0.0 && target_ber < 0.5, "target BER must lie in (0, 0.5)");
        (void)Constellation::square_qam(modulation_order);
    }

    /// Es/N0 used by every trial.
    double resolved_snr_db() const {
        if (snr_mode == SnrMode::fixed_db) return base.snr_db;
        return calibrate_snr(target_ber, Constellation::square_qam(modulation_order));
    }
};

struct TrialOutcome {
    BerReport report;
    double est_error = 0.0;  ///< realized mean over k of sum_m wrapped squared error [rad^2]
};

/// Pilot layout plus tracker choice for one trial.
struct TrialScheme {
    PilotPattern pattern;
    TrackerVariant variant = TrackerVariant::ra_per_channel;
};

inline TrialScheme make_trial_scheme(const SchemeSpec& scheme, const SystemParams& params,
                                     const Constellation& c = default_constellation()) {
    TrialScheme ts;
    ts.variant = scheme.tracker_variant();
    if (scheme.kind == PilotScheme::rat)
        ts.pattern = make_rat(params, scheme.reference_set(params.channels, params.pilot_rate), c);
    else
        ts.pattern = make_wdt(params, c);
    return ts;
}

/// Runs the trackers on a received grid. Trackers start on the true 2*pi
/// branch at k = 0 (`truth`); everything after that is driven by pilots only.
inline PhaseEstimate estimate_phases(const ChannelGrid& y, const TrialScheme& scheme, const SystemParams& params,
                                     const TrackerConfig& cfg, const PhaseTrace& truth) {
    const auto& pat = scheme.pattern;
    switch (scheme.variant) {
        case TrackerVariant::joint_two_state:
            return track_joint(y, pat, params, cfg, Eigen::Vector2d(truth.theta_c[0], truth.theta_r[0]));
        case TrackerVariant::ra_per_channel:
        case TrackerVariant::pilot_interp: {
            if (!pat.reference_set)
                throw InvalidArgument(std::string("tracker variant ") + to_string(scheme.variant) +
                                      " needs a RAT reference set");
            const auto& rs = *pat.reference_set;
            RealGrid refs(rs.size(), y.cols());
            for (int i = 0; i < rs.size(); ++i) {
                const int m = rs.indices[static_cast<std::size_t>(i)];
                const int row = params.row_of(m);
                const auto y_row = detail::grid_row(y, row);
                const auto p_row = detail::mask_row(pat.mask, row);
                const double anchor = channel_phase(truth, m, 0);
                if (scheme.variant == TrackerVariant::ra_per_channel) {
                    const auto tr = track_reference_channel(y_row, p_row, pat.pilot_point, m, params, cfg, anchor);
                    refs.row(i) = Eigen::Map<const Eigen::RowVectorXd>(tr.mean.data(), y.cols());
                } else {
                    const auto tr = pilot_interp_baseline(y_row, p_row, pat.pilot_point, params, anchor);
                    refs.row(i) = Eigen::Map<const Eigen::RowVectorXd>(tr.data(), y.cols());
                }
            }
            return ra_project(refs, rs);
        }
    }
    throw InvalidArgument("unknown tracker variant");
}

/// Data symbols, phase trace and received grid of one trial. Depends only on
/// (params, pattern, stream), so different schemes reuse the same draws.
struct TrialChannel {
    std::vector<std::uint32_t> tx_symbols;  ///< row-major L x N
    PhaseTrace trace;
    ChannelGrid rx;
};

inline TrialChannel simulate_channel(const SystemParams& params, const PilotPattern& pattern, const Constellation& c,
                                     const RandomStream& trial_stream) {
    const auto rows = static_cast<Eigen::Index>(params.channels);
    const auto cols = static_cast<Eigen::Index>(params.n_symbols);
    if (pattern.mask.rows() != rows || pattern.mask.cols() != cols)
        throw InvalidArgument("pilot pattern shape does not match parameters");
    TrialChannel ch;
    auto data = trial_stream.derive(StreamPurpose::data);
    const auto order_mask = static_cast<std::uint32_t>(c.order() - 1);
    ch.tx_symbols.resize(static_cast<std::size_t>(rows * cols));
    ChannelGrid tx(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index k = 0; k < cols; ++k) {
            auto s = static_cast<std::uint32_t>(data.bits() >> 32) & order_mask;
            if (pattern.mask(r, k)) s = pattern.pilot_symbol;
            ch.tx_symbols[static_cast<std::size_t>(r * cols + k)] = s;
            tx(r, k) = c.point(s);
        }
    auto phase = trial_stream.derive(StreamPurpose::phase_noise);
    ch.trace = gen_phase_trace(params, phase);
    auto noise = trial_stream.derive(StreamPurpose::additive_noise);
    ch.rx = apply_channel(tx, ch.trace, params.noise_var(), noise);
    return ch;
}

/// Derotates by the estimate, decides, and counts errors on data slots.
inline BerReport detect_and_count(const TrialChannel& ch, const PhaseEstimate& est, const PilotPattern& pattern,
                                  const Constellation& c) {
    const auto rows = ch.rx.rows();
    const auto cols = ch.rx.cols();
    std::vector<std::uint32_t> rx_symbols(static_cast<std::size_t>(rows * cols));
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index k = 0; k < cols; ++k)
            rx_symbols[static_cast<std::size_t>(r * cols + k)] =
                c.decide(ch.rx(r, k) * std::polar(1.0, -est.theta_hat(r, k)));
    return count_symbol_errors(ch.tx_symbols, rx_symbols, pattern.data_mask(), c.bits_per_symbol());
}

inline TrialOutcome run_trial(const SystemParams& params, const TrialScheme& scheme, const RandomStream& trial_stream,
                              const TrackerConfig& cfg = {}, const Constellation& c = default_constellation()) {
    const auto ch = simulate_channel(params, scheme.pattern, c, trial_stream);
    auto est = estimate_phases(ch.rx, scheme, params, cfg, ch.trace);
    score_against(est, ch.trace);
    TrialOutcome out;
    out.report = detect_and_count(ch, est, scheme.pattern, c);
    out.est_error = est.mean_est_error();
    out.report.mean_est_error = out.est_error;
    return out;
}

/// Stream of trial `trial` at sweep point `point`.
inline RandomStream trial_stream(std::uint64_t seed, std::size_t point, std::size_t trial) {
    return RandomStream(seed, {static_cast<std::uint64_t>(point), static_cast<std::uint64_t>(trial)});
}

/// Calls fn(i) for i in [0, n) on up to `threads` workers (0 = hardware).
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned threads = 0) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; !failed && (i = next.fetch_add(1)) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
            }
        });
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

struct SweepRow {
    std::string sweep_kind;   ///< channels | linewidth_hz | linewidth_norm | subset
    std::string sweep_value;
    int channels = 0;
    std::string scheme;
    int d = 0;                ///< reference count (1 for WDT: one pilot per slot)
    std::string reference_set;
    int time_spacing = 0;
    double pilot_fraction = 0.0;
    double ber = std::numeric_limits<double>::quiet_NaN();
    double ber_stderr = std::numeric_limits<double>::quiet_NaN();
    double mean_est_error = std::numeric_limits<double>::quiet_NaN();
    double est_error_stderr = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t bit_errors = 0;
    std::uint64_t bits = 0;
    int trials = 0;
    std::uint64_t seed = 0;
    bool feasible = true;
    bool low_confidence = false;  ///< fewer than 100 error events
    std::string note;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double snr_db = 0.0;

    const SweepRow* find(const std::string& sweep_value, const std::string& scheme) const {
        for (const auto& r : rows)
            if (r.sweep_value == sweep_value && r.scheme == scheme) return &r;
        return nullptr;
    }
};

using ProgressFn = std::function<void(const std::string&)>;

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double stderr_of(const std::vector<double>& v) {
    if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double mu = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

inline std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// Runs `trials` trials of one scheme at one sweep point and folds them into a row.
inline void fill_row(SweepRow& row, const SystemParams& params, const TrialScheme& ts, std::size_t point, int trials,
                     const TrackerConfig& cfg, const Constellation& c, unsigned threads) {
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(trials));
    parallel_for(
        outcomes.size(),
        [&](std::size_t t) { outcomes[t] = run_trial(params, ts, trial_stream(params.seed, point, t), cfg, c); },
        threads);
    std::vector<double> bers, errs;
    for (const auto& o : outcomes) {
        row.bit_errors += o.report.total_errors();
        row.bits += o.report.total_bits();
        bers.push_back(o.report.ber_aggregate);
        errs.push_back(o.est_error);
    }
    row.ber = row.bits == 0 ? 0.0 : static_cast<double>(row.bit_errors) / static_cast<double>(row.bits);
    row.ber_stderr = stderr_of(bers);
    row.mean_est_error = mean_of(errs);
    row.est_error_stderr = stderr_of(errs);
    row.trials = trials;
    row.seed = params.seed;
    row.low_confidence = row.bit_errors < 100;
    row.time_spacing = ts.pattern.time_spacing;
    row.pilot_fraction = ts.pattern.pilot_fraction();
}

inline SweepRow scheme_row(const SchemeSpec& scheme, const SystemParams& params, std::size_t point, int trials,
                           const TrackerConfig& cfg, const Constellation& c, unsigned threads) {
    SweepRow row;
    row.channels = params.channels;
    row.scheme = scheme.label();
    row.seed = params.seed;
    try {
        const auto ts = make_trial_scheme(scheme, params, c);
        if (ts.pattern.reference_set) {
            row.d = ts.pattern.reference_set->size();
            row.reference_set = ts.pattern.reference_set->label();
        } else {
            row.d = 1;
        }
        fill_row(row, params, ts, point, trials, cfg, c, threads);
    } catch (const RateInfeasible& e) {
        row.feasible = false;
        row.note = e.what();
    } catch (const InvalidArgument& e) {
        row.feasible = false;
        row.note = e.what();
    }
    return row;
}

}  // namespace detail

/// Ceiling on the number of subsets subset_scan will enumerate.
inline constexpr std::uint64_t max_scan_subsets = 100000;

/// Mean realized estimation error for every D-subset of reference channels,
/// sorted ascending (ties keep lexicographic subset order).
inline SweepResult subset_scan(const SystemParams& params, int d, int trials, const TrackerConfig& cfg = {},
                               const Constellation& c = default_constellation(), const ProgressFn& progress = {},
                               unsigned threads = 0) {
    params.validate();
    detail::check_subset_size(params.channels, d);
    if (subset_count(params.channels, d) > max_scan_subsets)
        throw InvalidArgument("subset scan over C(" + std::to_string(params.channels) + ", " + std::to_string(d) +
                              ") subsets exceeds the guard of 100000; use brute_force_optimal instead");
    SweepResult res;
    res.snr_db = params.snr_db;
    detail::for_each_subset(params.channels, d, [&](const std::vector<int>& idx) {
        auto scheme = SchemeSpec::rat_set(idx);
        auto row = detail::scheme_row(scheme, params, 0, trials, cfg, c, threads);
        row.sweep_kind = "subset";
        row.sweep_value = row.reference_set;
        if (progress) progress("subset " + row.reference_set);
        res.rows.push_back(std::move(row));
    });
    std::stable_sort(res.rows.begin(), res.rows.end(),
                     [](const SweepRow& a, const SweepRow& b) { return a.mean_est_error < b.mean_est_error; });
    return res;
}

/// One row per (L, scheme).
inline SweepResult sweep_channels(const ExperimentSpec& spec, const ProgressFn& progress = {}, unsigned threads = 0) {
    spec.validate();
    const auto& sw = std::get<ChannelCountSweep>(spec.sweep);
    const auto c = Constellation::square_qam(spec.modulation_order);
    SweepResult res;
    res.snr_db = spec.resolved_snr_db();
    for (std::size_t p = 0; p < sw.values.size(); ++p) {
        SystemParams params = spec.base;
        params.channels = sw.values[p];
        params.snr_db = res.snr_db;
        params.validate();
        for (const auto& scheme : spec.schemes) {
            auto row = detail::scheme_row(scheme, params, p, spec.trials, spec.tracker, c, threads);
            row.sweep_kind = "channels";
            row.sweep_value = std::to_string(params.channels);
            if (progress) progress("L=" + row.sweep_value + " " + row.scheme);
            res.rows.push_back(std::move(row));
        }
    }
    return res;
}

/// One row per (RF linewidth, scheme).
inline SweepResult sweep_linewidth(const ExperimentSpec& spec, const ProgressFn& progress = {}, unsigned threads = 0) {
    spec.validate();
    const auto& sw = std::get<LinewidthSweep>(spec.sweep);
    const auto c = Constellation::square_qam(spec.modulation_order);
    SweepResult res;
    res.snr_db = spec.resolved_snr_db();
    for (std::size_t p = 0; p < sw.values.size(); ++p) {
        SystemParams params = spec.base;
        params.delta_nu_r = sw.normalized ? sw.values[p] * params.symbol_rate : sw.values[p];
        params.snr_db = res.snr_db;
        params.validate();
        for (const auto& scheme : spec.schemes) {
            auto row = detail::scheme_row(scheme, params, p, spec.trials, spec.tracker, c, threads);
            row.sweep_kind = sw.normalized ? "linewidth_norm" : "linewidth_hz";
            row.sweep_value = detail::format_value(sw.values[p]);
            if (progress) progress("linewidth " + row.sweep_value + " " + row.scheme);
            res.rows.push_back(std::move(row));
        }
    }
    return res;
}

/// Dispatches on the experiment's sweep kind.
inline SweepResult run_experiment(const ExperimentSpec& spec, const ProgressFn& progress = {}, unsigned threads = 0) {
    spec.validate();
    if (std::holds_alternative<ChannelCountSweep>(spec.sweep)) return sweep_channels(spec, progress, threads);
    if (std::holds_alternative<LinewidthSweep>(spec.sweep)) return sweep_linewidth(spec, progress, threads);
    SystemParams params = spec.base;
    params.snr_db = spec.resolved_snr_db();
    const auto c = Constellation::square_qam(spec.modulation_order);
    return subset_scan(params, std::get<SubsetScan>(spec.sweep).d, spec.trials, spec.tracker, c, progress, threads);
}

inline constexpr const char* sweep_csv_header =
    "sweep_kind,sweep_value,L,scheme,D,reference_set,pilot_spacing,pilot_fraction,ber,ber_stderr,"
    "mean_est_error,est_error_stderr,bit_errors,bits,trials,low_confidence,feasible,seed,config_hash";

/// One CSV line per row; `config_hash` identifies the resolved configuration.
inline void write_sweep_csv(std::ostream& os, const SweepResult& res, const std::string& config_hash) {
    os << sweep_csv_header << '\n';
    auto quoted = [](const std::string& s) { return s.find_first_of(",\"") == std::string::npos ? s : "\"" + s + "\""; };
    for (const auto& r : res.rows) {
        os << r.sweep_kind << ',' << quoted(r.sweep_value) << ',' << r.channels << ',' << quoted(r.scheme) << ','
           << r.d << ',' << quoted(r.reference_set) << ',' << r.time_spacing << ','
           << detail::format_value(r.pilot_fraction) << ',' << detail::format_value(r.ber) << ','
           << detail::format_value(r.ber_stderr) << ',' << detail::format_value(r.mean_est_error) << ','
           << detail::format_value(r.est_error_stderr) << ',' << r.bit_errors << ',' << r.bits << ',' << r.trials
           << ',' << (r.low_confidence ? 1 : 0) << ',' << (r.feasible ? 1 : 0) << ',' << r.seed << ','
           << config_hash << '\n';
    }
}

}  // namespace eofc
