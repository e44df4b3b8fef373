#include <gtest/gtest.h>

#include "eofc/config.hpp"

using namespace eofc;

namespace {

std::string error_key(const std::string& text) {
    try {
        parse_run_config(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<accepted>";
}

constexpr const char* full = R"({
  "system": {"channels": 21, "cw_linewidth_hz": 1e5, "rf_linewidth_hz": 100, "symbol_rate_baud": 2e10,
             "n_symbols": 20000, "pilot_rate": 0.01, "seed": 7, "modulation_order": 64},
  "snr": {"mode": "calibrated", "target_ber": 0.001},
  "schemes": [{"kind": "rat", "d": 2}, {"kind": "rat", "d": "half"}, {"kind": "rat", "d": "all"},
              {"kind": "rat", "indices": [-10, 10]}, {"kind": "wdt"}],
  "sweep": {"channel_count": [11, 21]},
  "trials": 5,
  "output": {"csv": "out.csv"}
})";

}  // namespace

TEST(Config, ParsesFullDocument) {
    const auto rc = parse_run_config(std::string(full));
    const auto& s = rc.spec;
    EXPECT_EQ(s.base.channels, 21);
    EXPECT_EQ(s.base.seed, 7u);
    EXPECT_EQ(s.trials, 5);
    ASSERT_EQ(s.schemes.size(), 5u);
    EXPECT_EQ(s.schemes[1].label(), "RAT D=(L+1)/2");
    EXPECT_EQ(s.schemes[3].label(), "RAT D={-10,10}");
    EXPECT_EQ(s.schemes[4].kind, PilotScheme::wdt);
    EXPECT_EQ(std::get<ChannelCountSweep>(s.sweep).values, (std::vector<int>{11, 21}));
    EXPECT_EQ(rc.csv_path, "out.csv");
    EXPECT_TRUE(rc.json_path.empty());
}

TEST(Config, UnknownKeysAreRejectedByName) {
    EXPECT_EQ(error_key(R"({"sweep": {"channel_count": [11]}, "trails": 3})"), "trails");
    EXPECT_EQ(error_key(R"({"sweep": {"channel_count": [11]}, "system": {"chanels": 3}})"), "system.chanels");
    EXPECT_EQ(error_key(R"({"sweep": {"channel_count": [11]}, "schemes": [{"kind": "rat", "dd": 2}]})"),
              "schemes[0].dd");
    EXPECT_EQ(error_key(R"({"sweep": {"subset_scan": {"d": 2, "x": 1}}})"), "sweep.subset_scan.x");
}

TEST(Config, SweepMustBeSingleAndNonEmpty) {
    EXPECT_EQ(error_key(R"({"trials": 1})"), "sweep");
    EXPECT_EQ(error_key(R"({"sweep": {}})"), "sweep");
    EXPECT_EQ(error_key(R"({"sweep": {"channel_count": [11], "rf_linewidth_hz": [1]}})"), "sweep");
    EXPECT_NE(error_key(R"({"sweep": {"channel_count": []}})"), "<accepted>");
}

TEST(Config, TypeAndValueErrors) {
    EXPECT_EQ(error_key(R"({"sweep": {"channel_count": [11]}, "trials": "ten"})"), "trials");
    EXPECT_EQ(error_key(R"({"sweep": {"channel_count": [11]}, "snr": {"mode": "auto"}})"), "snr.mode");
    EXPECT_EQ(error_key(R"({"sweep": {"channel_count": [11]}, "snr": {"mode": "fixed"}})"), "snr.snr_db");
    EXPECT_EQ(error_key("{not json"), "<document>");
    EXPECT_NE(error_key(R"({"sweep": {"channel_count": [10]}})"), "<accepted>");
    EXPECT_NE(error_key(R"({"sweep": {"channel_count": [11]}, "trials": 0})"), "<accepted>");
}

TEST(Config, ResolvedFormRoundTripsAndHashIsStable) {
    const auto a = parse_run_config(std::string(full)).spec;
    const auto resolved = to_json(a);
    const auto b = parse_run_config(resolved).spec;
    EXPECT_EQ(to_json(b), resolved);
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);

    auto c = a;
    c.base.seed = 8;
    EXPECT_NE(config_hash(a), config_hash(c));
}

TEST(Config, DefaultsMatchDeskScale) {
    const auto s = parse_run_config(std::string(R"({"sweep": {"channel_count": [11]}})")).spec;
    EXPECT_EQ(s.base.n_symbols, 20000);
    EXPECT_EQ(s.trials, 10);
    EXPECT_DOUBLE_EQ(s.base.pilot_rate, 0.01);
    EXPECT_EQ(s.snr_mode, SnrMode::calibrated);
    EXPECT_EQ(s.modulation_order, 64);
}

TEST(Config, ShippedRecipesParse) {
    for (const char* name : {"subsets_l7.json", "channel_count.json", "rf_linewidth.json"}) {
        const auto rc = load_run_config(std::string(EOFC_CONFIG_DIR) + "/" + name);
        EXPECT_FALSE(rc.csv_path.empty()) << name;
        EXPECT_EQ(rc.spec.base.seed, 1u) << name;
    }
    EXPECT_EQ(std::get<SubsetScan>(load_run_config(std::string(EOFC_CONFIG_DIR) + "/subsets_l7.json").spec.sweep).d, 2);
}
