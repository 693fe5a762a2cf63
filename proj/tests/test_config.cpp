#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "trs/config.hpp"

using namespace trs;
using nlohmann::json;

TEST(Config, EmptyDocumentGivesDefaults) {
  const auto c = parse_config(json::object());
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(c.plant.spec.n_turbines, 24);
  EXPECT_EQ(c.plant.coeffs.cd_sluice, 1.0);
  EXPECT_EQ(c.rl.train.ppo.lr, 1e-4);
  EXPECT_EQ(c.rl.train.beta0, 0.038);
  EXPECT_EQ(c.rl.train.gamma, 0.99);
  EXPECT_EQ(c.rl.train.ppo.clip, 0.2);
  EXPECT_EQ(c.rl.train.ppo.epochs, 3);
  EXPECT_TRUE(std::isnan(c.simulation.initial_lagoon_z));
  EXPECT_EQ(c.tide.constituents.size(), 4u);
}

TEST(Config, OverridesMergeOverDefaults) {
  const auto c = parse_config(json::parse(R"({"plant": {"cd_sluice": 1.017}, "rl": {"lr": 3e-4},
                                             "simulation": {"initial_lagoon_z": 5.5}})"));
  EXPECT_EQ(c.plant.coeffs.cd_sluice, 1.017);
  EXPECT_EQ(c.plant.coeffs.cd_turbine, 1.0);
  EXPECT_EQ(c.rl.train.ppo.lr, 3e-4);
  EXPECT_EQ(c.simulation.initial_lagoon_z, 5.5);
}

TEST(Config, UnknownKeysAreRejectedWithTheirPath) {
  try {
    parse_config(json::parse(R"({"plant": {"cd_sluce": 1.0}})"));
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("cd_sluce"), std::string::npos);
  }
  EXPECT_THROW(parse_config(json::parse(R"({"bogus": 1})")), InvalidInput);
  EXPECT_THROW(parse_config(json::parse(R"({"tide": {"constituents": [{"name": "M2", "amp": 1}]}})")), InvalidInput);
}

TEST(Config, InvalidValuesRejected) {
  EXPECT_THROW(parse_config(json::parse(R"({"jobs": 0})")), InvalidInput);
  EXPECT_THROW(parse_config(json::parse(R"({"control": {"h_min_m": 3, "h_start_m": 2}})")), InvalidInput);
  EXPECT_THROW(parse_config(json::array()), InvalidInput);
}

TEST(Config, SeedPrecedence) {
  EXPECT_EQ(parse_config(json::object(), 77).seed, 77u);
  EXPECT_EQ(parse_config(json::parse(R"({"seed": 5})"), 77).seed, 5u);
  ::setenv("TRS_ENGINE_SEED", "123", 1);
  EXPECT_EQ(seed_from_environment().value(), 123u);
  ::setenv("TRS_ENGINE_SEED", "x1", 1);
  EXPECT_THROW(seed_from_environment(), InvalidInput);
  ::unsetenv("TRS_ENGINE_SEED");
  EXPECT_FALSE(seed_from_environment().has_value());
}

TEST(Config, ResolvedConfigRoundTrips) {
  auto c = parse_config(json::parse(R"({"seed": 9, "control": {"scheme": "twp"}})"));
  const auto dir = std::filesystem::temp_directory_path() / "trs_cfg_resolved";
  write_resolved_config(c, dir);
  std::ifstream in(dir / "resolved_config.json");
  const auto back = parse_config(json::parse(in));
  EXPECT_EQ(to_json_value(back), to_json_value(c));
  EXPECT_EQ(back.control.scheme, "twp");
}

TEST(Config, RepositoryConfigLoads) {
  const auto c = load_config(std::string(TRS_SOURCE_DIR) + "/configs/la_rance.json");
  EXPECT_EQ(c.rl.train.n_envs, 8);
  EXPECT_LE(c.rl.train.total_steps, 2000000);
  EXPECT_TRUE(c.rl.train.anneal_lr);
  EXPECT_FALSE(parse_config(json::object()).rl.train.anneal_lr);
}

TEST(Config, TideBuiltFromConstituentsOrCsv) {
  RunConfig c;
  c.tide.duration_days = 1;
  const auto t = build_tide(c);
  EXPECT_EQ(t.size(), 241u);
  const auto p = std::filesystem::temp_directory_path() / "trs_cfg_tide.csv";
  export_tide_csv(t, p);
  c.paths.tide_csv = p.string();
  c.tide.correction_factor = 1.1;
  const auto s = build_tide(c);
  EXPECT_NEAR(s.max() - s.mean(), 1.1 * (t.max() - t.mean()), 1e-9);
  c.paths.tide_csv = "/nonexistent/tide.csv";
  EXPECT_ANY_THROW(build_tide(c));
}
