#include <gtest/gtest.h>

#include <sstream>

#include "eofc/pilots.hpp"
#include "eofc/random.hpp"

using namespace eofc;

namespace {

SystemParams params(int l, double rate, int n = 40) {
    SystemParams p;
    p.channels = l;
    p.pilot_rate = rate;
    p.n_symbols = n;
    return p;
}

}  // namespace

TEST(MakeRat, FiveChannelsOuterPair) {
    const auto p = params(5, 1.0 / 5, 20);
    const auto pat = make_rat(p, build_reference_set(5, {-2, 2}));
    EXPECT_EQ(pat.kind, PilotScheme::rat);
    EXPECT_EQ(pat.time_spacing, 2);
    for (int r = 0; r < 5; ++r)
        for (int k = 0; k < 20; ++k) EXPECT_EQ(pat.mask(r, k), (r == 0 || r == 4) && k % 2 == 0) << r << "," << k;
}

TEST(MakeRat, SaturatedRateFillsReferenceRows) {
    const auto p = params(7, 3.0 / 7);
    const auto pat = make_rat(p, build_reference_set(7, {-3, 0, 3}));
    EXPECT_EQ(pat.time_spacing, 1);
    EXPECT_TRUE(pat.mask.row(0).all());
    EXPECT_TRUE(pat.mask.row(3).all());
    EXPECT_FALSE(pat.mask.row(1).any());
}

TEST(MakeRat, SevenChannelsSpacingTwo) {
    const auto pat = make_rat(params(7, 1.0 / 7), build_reference_set(7, {-3, 3}));
    EXPECT_EQ(pat.time_spacing, 2);
}

TEST(MakeRat, RateAboveBoundIsInfeasible) {
    try {
        make_rat(params(7, 0.3), build_reference_set(7, {-3, 3}));
        FAIL() << "expected RateInfeasible";
    } catch (const RateInfeasible& e) {
        EXPECT_NE(std::string(e.what()).find("D/L"), std::string::npos);
    }
}

TEST(MakeRat, PilotSymbolIsMaximumEnergyPoint) {
    const auto pat = make_rat(params(5, 0.2), build_reference_set(5, {-2, 2}));
    for (auto pt : default_constellation().points()) EXPECT_LE(std::norm(pt), std::norm(pat.pilot_point) + 1e-12);
    EXPECT_EQ(pat.pilot_point, default_constellation().point(pat.pilot_symbol));
}

TEST(MakeWdt, DiagonalCyclingAtFullRate) {
    const auto pat = make_wdt(params(5, 1.0 / 5, 12));
    EXPECT_EQ(pat.kind, PilotScheme::wdt);
    EXPECT_EQ(pat.time_spacing, 1);
    for (int k = 0; k < 12; ++k) {
        EXPECT_EQ(pat.mask.col(k).count(), 1);
        EXPECT_TRUE(pat.mask(k % 5, k));
    }
    EXPECT_TRUE(pat.mask(0, 0));  // k = 0 on channel -M
}

TEST(MakeWdt, HalfRateDoublesSpacing) {
    const auto pat = make_wdt(params(5, 1.0 / 10, 40));
    EXPECT_EQ(pat.time_spacing, 2);
    EXPECT_TRUE(pat.mask(0, 0));
    EXPECT_TRUE(pat.mask(1, 2));
    EXPECT_FALSE(pat.mask.col(1).any());
}

TEST(MakeWdt, RateAboveOneOverLIsInfeasible) {
    EXPECT_THROW(make_wdt(params(5, 0.25)), RateInfeasible);
}

TEST(MakeWdt, PerChannelFractionMatchesRateWhenExact) {
    // alpha_p * L * s = 1 exactly: s = 2 for L = 5, alpha = 1/10.
    const int n = 1000;
    const auto pat = make_wdt(params(5, 0.1, n));
    for (int m = -2; m <= 2; ++m) {
        const double frac = static_cast<double>(pat.pilots_in_channel(m)) / n;
        EXPECT_LE(std::abs(frac - 0.1), 1.0 / n) << m;
    }
}

TEST(PilotPatterns, RandomizedInvariants) {
    RandomStream rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const int l = 3 + 2 * static_cast<int>(rng.bits() % 12);
        const int n = 2 + static_cast<int>(rng.bits() % 3000);
        const bool rat = rng.bits() & 1;
        SystemParams p = params(l, 1.0, n);
        if (rat) {
            const int d = 2 + static_cast<int>(rng.bits() % static_cast<std::uint64_t>(l - 1));
            p.pilot_rate = rng.uniform(1e-3, 1.0) * d / l;
            const auto rs = closed_form_optimal(l, d);
            const auto pat = make_rat(p, rs);
            const int s = pat.time_spacing;
            EXPECT_LE(pat.pilot_fraction(), p.pilot_rate * (1.0 + static_cast<double>(l) * s / n) + 1e-12);
            if (n % s == 0) {
                EXPECT_LE(pat.pilot_fraction(), p.pilot_rate * (1.0 + 1.0 / n) + 1e-12);
            }
            const int first_ref = p.row_of(rs.indices.front());
            for (int r = 0; r < l; ++r) {
                const bool is_ref = std::find(rs.indices.begin(), rs.indices.end(), r - p.half_width()) != rs.indices.end();
                if (is_ref) {
                    EXPECT_TRUE((pat.mask.row(r) == pat.mask.row(first_ref)).all());
                    EXPECT_TRUE(pat.mask(r, 0));
                } else {
                    EXPECT_FALSE(pat.mask.row(r).any());
                }
            }
            EXPECT_TRUE((pat.mask.cast<int>() - make_rat(p, rs).mask.cast<int>()).abs().maxCoeff() == 0);
        } else {
            p.pilot_rate = rng.uniform(1e-3, 1.0) / l;
            const auto pat = make_wdt(p);
            const int s = pat.time_spacing;
            EXPECT_LE(pat.pilot_fraction(), p.pilot_rate * (1.0 + static_cast<double>(l) * s / n) + 1e-12);
            const auto lo = static_cast<std::int64_t>(n / (static_cast<std::int64_t>(s) * l));
            const auto hi = (n + static_cast<std::int64_t>(s) * l - 1) / (static_cast<std::int64_t>(s) * l);
            for (int m = -p.half_width(); m <= p.half_width(); ++m) {
                EXPECT_GE(pat.pilots_in_channel(m), lo);
                EXPECT_LE(pat.pilots_in_channel(m), hi);
            }
            for (int k = 0; k < n; ++k) EXPECT_LE(pat.mask.col(k).count(), 1);
            EXPECT_TRUE(pat.mask(0, 0));
        }
    }
}

TEST(PilotPatterns, PbmRoundTrip) {
    RandomStream rng(5);
    for (int i = 0; i < 20; ++i) {
        const int l = 3 + 2 * static_cast<int>(rng.bits() % 5);
        const auto p = params(l, rng.uniform(0.01, 1.0) / l, 1 + 2 + static_cast<int>(rng.bits() % 200));
        const auto pat = make_wdt(p);
        std::istringstream is(to_pbm(pat));
        const auto back = read_pbm(is);
        ASSERT_EQ(back.rows(), pat.mask.rows());
        ASSERT_EQ(back.cols(), pat.mask.cols());
        EXPECT_TRUE((back == pat.mask).all());
    }
    std::istringstream bad("P2\n1 1\n0\n");
    EXPECT_THROW(read_pbm(bad), InvalidArgument);
}

TEST(PilotPatterns, PbmHeaderFormat) {
    const auto pat = make_rat(params(5, 0.2, 6), build_reference_set(5, {-2, 2}));
    EXPECT_EQ(to_pbm(pat), "P1\n6 5\n101010\n000000\n000000\n000000\n101010\n");
}
