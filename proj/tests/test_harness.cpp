#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "eofc/harness.hpp"

using namespace eofc;

namespace {

SystemParams desk(int l, int n) {
    SystemParams p;
    p.channels = l;
    p.n_symbols = n;
    p.snr_db = calibrate_snr(1e-3, default_constellation());
    return p;
}

std::string csv_of(const SweepResult& r) {
    std::ostringstream os;
    write_sweep_csv(os, r, "0000000000000000");
    return os.str();
}

}  // namespace

TEST(RunTrial, SameStreamIsBitIdentical) {
    const auto p = desk(11, 5000);
    for (const auto& s : {SchemeSpec::rat(2), SchemeSpec::rat_all()}) {
        const auto ts = make_trial_scheme(s, p);
        const auto a = run_trial(p, ts, trial_stream(42, 3, 7));
        const auto b = run_trial(p, ts, trial_stream(42, 3, 7));
        EXPECT_EQ(a.report, b.report);
        EXPECT_EQ(a.est_error, b.est_error);
        const auto c = run_trial(p, ts, trial_stream(42, 3, 8));
        EXPECT_NE(a.report.total_errors(), c.report.total_errors());
    }
    auto pw = desk(5, 5000);
    pw.pilot_rate = 0.1;
    const auto ws = make_trial_scheme(SchemeSpec::wdt(), pw);
    EXPECT_EQ(run_trial(pw, ws, trial_stream(1, 0, 0)).report, run_trial(pw, ws, trial_stream(1, 0, 0)).report);
}

TEST(RunTrial, NoiselessStaticChannelHasNoErrors) {
    auto p = desk(7, 3000);
    p.delta_nu_c = p.delta_nu_r = 0.0;
    p.snr_db = 250.0;
    p.pilot_rate = 1.0 / 7;
    for (const auto& s : {SchemeSpec::rat(2), SchemeSpec::rat(4), SchemeSpec::rat_all(), SchemeSpec::wdt()}) {
        const auto out = run_trial(p, make_trial_scheme(s, p), trial_stream(5, 0, 0));
        EXPECT_EQ(out.report.total_errors(), 0u) << s.label();
        EXPECT_GT(out.report.total_bits(), 0u);
        EXPECT_LT(out.est_error, 1e-12) << s.label();
    }
}

TEST(RunTrial, StaticChannelAtCalibratedSnrHitsTargetBer) {
    auto p = desk(11, 20000);
    p.delta_nu_c = p.delta_nu_r = 0.0;
    p.pilot_rate = 1.0 / 11;
    for (const auto& s : {SchemeSpec::rat(2), SchemeSpec::rat_half(), SchemeSpec::rat_all(), SchemeSpec::wdt()}) {
        const auto ts = make_trial_scheme(s, p);
        std::uint64_t errs = 0, bits = 0;
        for (std::size_t t = 0; t < 4; ++t) {
            const auto out = run_trial(p, ts, trial_stream(9, 0, t));
            errs += out.report.total_errors();
            bits += out.report.total_bits();
        }
        const double ber = static_cast<double>(errs) / static_cast<double>(bits);
        const double se = std::sqrt(1e-3 * (1 - 1e-3) / static_cast<double>(bits));
        EXPECT_NEAR(ber, 1e-3, 3 * se) << s.label();
    }
}

TEST(SweepChannels, DeterministicAndThreadCountIndependent) {
    ExperimentSpec spec;
    spec.base = desk(11, 4000);
    spec.schemes = {SchemeSpec::rat(2), SchemeSpec::rat_all()};
    spec.sweep = ChannelCountSweep{{5, 11}};
    spec.trials = 3;
    const auto a = csv_of(sweep_channels(spec, {}, 1));
    EXPECT_EQ(a, csv_of(sweep_channels(spec, {}, 1)));
    EXPECT_EQ(a, csv_of(sweep_channels(spec, {}, 3)));
    spec.base.seed = 2;
    EXPECT_NE(a, csv_of(sweep_channels(spec, {}, 1)));
}

TEST(SweepChannels, RowsPerPointAndScheme) {
    ExperimentSpec spec;
    spec.base = desk(11, 2000);
    spec.schemes = {SchemeSpec::rat(2), SchemeSpec::rat_half(), SchemeSpec::wdt()};
    spec.sweep = ChannelCountSweep{{5, 7}};
    spec.trials = 2;
    const auto res = sweep_channels(spec);
    ASSERT_EQ(res.rows.size(), 6u);
    const auto* r = res.find("7", "RAT D=(L+1)/2");
    ASSERT_NE(r, nullptr);
    EXPECT_EQ(r->d, 4);
    EXPECT_EQ(r->reference_set, "{-3,-2,2,3}");
    EXPECT_EQ(r->trials, 2);
    EXPECT_GE(r->ber, 0.0);
    EXPECT_LE(r->ber, 1.0);
    EXPECT_EQ(res.find("5", "WDT")->d, 1);
}

TEST(SweepChannels, InfeasibleRowsAreFlaggedNotFatal) {
    ExperimentSpec spec;
    spec.base = desk(11, 2000);
    spec.base.pilot_rate = 0.2;
    spec.schemes = {SchemeSpec::rat(2), SchemeSpec::rat_all(), SchemeSpec::wdt()};
    spec.sweep = ChannelCountSweep{{11}};
    spec.trials = 1;
    const auto res = sweep_channels(spec);
    ASSERT_EQ(res.rows.size(), 3u);
    EXPECT_FALSE(res.find("11", "RAT D=2")->feasible);
    EXPECT_FALSE(res.find("11", "WDT")->feasible);
    EXPECT_NE(res.find("11", "WDT")->note.find("1/L"), std::string::npos);
    EXPECT_TRUE(res.find("11", "RAT D=L")->feasible);
    EXPECT_TRUE(std::isnan(res.find("11", "RAT D=2")->ber));
    const auto csv = csv_of(res);
    EXPECT_NE(csv.find(",nan,"), std::string::npos);
}

TEST(SweepChannels, LowConfidenceFlag) {
    ExperimentSpec spec;
    spec.base = desk(5, 500);
    spec.base.pilot_rate = 0.1;
    spec.snr_mode = SnrMode::fixed_db;
    spec.base.snr_db = 40.0;
    spec.sweep = ChannelCountSweep{{5}};
    spec.trials = 1;
    const auto res = sweep_channels(spec);
    EXPECT_TRUE(res.rows[0].low_confidence);
    EXPECT_EQ(res.snr_db, 40.0);
}

TEST(SubsetScan, GuardAndSingleRow) {
    auto p = desk(101, 1000);
    EXPECT_THROW(subset_scan(p, 50, 1), InvalidArgument);
    try {
        subset_scan(p, 50, 1);
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("brute_force_optimal"), std::string::npos);
    }
    auto q = desk(5, 2000);
    q.pilot_rate = 0.2;
    const auto res = subset_scan(q, 5, 1);
    ASSERT_EQ(res.rows.size(), 1u);
    EXPECT_EQ(res.rows[0].reference_set, "{-2,-1,0,1,2}");
}

TEST(SubsetScan, SortedAscendingAndComplete) {
    auto p = desk(5, 2000);
    p.pilot_rate = 0.2;
    const auto res = subset_scan(p, 2, 2);
    ASSERT_EQ(res.rows.size(), 10u);
    for (std::size_t i = 1; i < res.rows.size(); ++i)
        EXPECT_LE(res.rows[i - 1].mean_est_error, res.rows[i].mean_est_error);
    EXPECT_EQ(res.rows.front().reference_set, "{-2,2}");
}

TEST(SweepLinewidth, NormalizedValuesScaleBySymbolRate) {
    ExperimentSpec spec;
    spec.base = desk(11, 2000);
    spec.sweep = LinewidthSweep{{5e-9}, true};
    spec.trials = 1;
    const auto res = sweep_linewidth(spec);
    ASSERT_EQ(res.rows.size(), 1u);
    EXPECT_EQ(res.rows[0].sweep_kind, "linewidth_norm");
    EXPECT_EQ(res.rows[0].sweep_value, "5e-09");

    // Same realizations as an explicit-Hz sweep of the same value.
    spec.sweep = LinewidthSweep{{5e-9 * spec.base.symbol_rate}, false};
    const auto hz = sweep_linewidth(spec);
    EXPECT_EQ(hz.rows[0].bit_errors, res.rows[0].bit_errors);
}

TEST(Statistics, StandardErrorShrinksWithTrials) {
    ExperimentSpec spec;
    spec.base = desk(5, 4000);
    spec.base.pilot_rate = 0.05;
    spec.sweep = ChannelCountSweep{{5}};
    spec.trials = 16;
    const double se16 = sweep_channels(spec).rows[0].ber_stderr;
    spec.trials = 64;
    const double se64 = sweep_channels(spec).rows[0].ber_stderr;
    // Expected ratio of squared errors is 4; the spread of a sample variance
    // from 16 draws allows roughly a factor of two either way.
    const double ratio = (se16 * se16) / (se64 * se64);
    EXPECT_GT(ratio, 2.0);
    EXPECT_LT(ratio, 8.0);
}

TEST(Statistics, WithoutRfNoiseDenserPilotsApproachStaticBer) {
    auto p = desk(11, 20000);
    p.delta_nu_r = 0.0;
    for (const auto& s : {SchemeSpec::rat(2), SchemeSpec::rat_all()}) {
        double prev = std::numeric_limits<double>::infinity();
        for (double rate : {0.01, 0.04, 0.16}) {
            p.pilot_rate = rate;
            const auto ts = make_trial_scheme(s, p);
            std::uint64_t errs = 0, bits = 0;
            for (std::size_t t = 0; t < 3; ++t) {
                const auto out = run_trial(p, ts, trial_stream(21, 0, t));
                errs += out.report.total_errors();
                bits += out.report.total_bits();
            }
            const double excess = static_cast<double>(errs) / static_cast<double>(bits) - 1e-3;
            EXPECT_LT(excess, prev) << s.label() << " rate " << rate;
            prev = excess;
        }
        EXPECT_LT(prev, 1.5e-4) << s.label();
    }
}

TEST(ExperimentSpec, Validation) {
    ExperimentSpec spec;
    spec.sweep = ChannelCountSweep{{}};
    EXPECT_THROW(spec.validate(), InvalidArgument);
    spec.sweep = ChannelCountSweep{{11}};
    spec.trials = 0;
    EXPECT_THROW(spec.validate(), InvalidArgument);
    spec.trials = 1;
    spec.schemes.clear();
    EXPECT_THROW(spec.validate(), InvalidArgument);
    spec.schemes = {SchemeSpec::rat(2)};
    spec.modulation_order = 8;
    EXPECT_THROW(spec.validate(), InvalidArgument);
}

TEST(SchemeSpec, Labels) {
    EXPECT_EQ(SchemeSpec::rat(2).label(), "RAT D=2");
    EXPECT_EQ(SchemeSpec::rat_half().label(), "RAT D=(L+1)/2");
    EXPECT_EQ(SchemeSpec::rat_all().label(), "RAT D=L");
    EXPECT_EQ(SchemeSpec::rat_set({-3, 3}).label(), "RAT D={-3,3}");
    EXPECT_EQ(SchemeSpec::wdt().label(), "WDT");
    EXPECT_EQ(SchemeSpec::rat_half().reference_count(21, 0.01), 11);
    EXPECT_EQ(SchemeSpec::rat_heuristic().reference_count(11, 0.3), 4);
}
