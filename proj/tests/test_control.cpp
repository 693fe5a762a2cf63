#include <gtest/gtest.h>

#include <vector>

#include "trs/control.hpp"

using namespace trs;

namespace {

PlantView view(double ocean, double ocean_prev, double lagoon, OperationalMode mode = {}) {
  PlantView v;
  v.ocean_z = ocean;
  v.ocean_prev_z = ocean_prev;
  v.lagoon_z = lagoon;
  v.lagoon_prev_z = lagoon;
  v.mode = mode;
  return v;
}

TideSeries default_forcing(double days, double dt = 360.0) {
  const std::vector<HarmonicConstituent> c{{"M2", 3.7, 12.4206012, 0.0},
                                           {"S2", 1.75, 12.0, 0.0},
                                           {"N2", 1.1, 12.65834751, 0.0},
                                           {"K1", 0.2, 23.93447213, 0.0}};
  return synthesize_tide(c, 6.75, 0, days * 86400.0, dt);
}

int runs_of(const Trace& tr, TurbineMode m) {
  int runs = 0;
  bool in = false;
  for (const auto& r : tr.records) {
    const bool now = r.turbine_mode == m;
    if (now && !in) ++runs;
    in = now;
  }
  return runs;
}

}  // namespace

TEST(Action, ValidationRules) {
  const OperationalMode cur;
  EXPECT_EQ(validate_action({0, 1, 0}, cur), "");
  EXPECT_EQ(validate_action({1, 3, 0}, cur), "");
  EXPECT_EQ(validate_action({0, 4, 16}, cur), "");
  EXPECT_NE(validate_action({2, 0, 0}, cur), "");
  EXPECT_NE(validate_action({0, 5, 0}, cur), "");
  EXPECT_NE(validate_action({0, 0, 17}, cur), "");
  EXPECT_NE(validate_action({0, 4, 0}, cur), "");
  EXPECT_NE(validate_action({1, 0, 0}, cur), "");
}

TEST(Action, CoercionYieldsLegalNearestAction) {
  for (int s = -1; s <= 2; ++s)
    for (int t = -1; t <= 5; ++t)
      for (int p = -1; p <= 17; ++p) {
        const auto c = coerce_action({s, t, p});
        EXPECT_EQ(validate_action(c.action, {}), "");
        EXPECT_EQ(c.coerced, !(c.action == Action{s, t, p}));
      }
  EXPECT_EQ(coerce_action({0, 4, 0}).action, (Action{0, 0, 0}));
  EXPECT_EQ(coerce_action({1, 0, 0}).action, (Action{1, 3, 0}));
  EXPECT_FALSE(coerce_action({1, 2, 5}).coerced);
}

TEST(Action, OperationalModeRoundTrip) {
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 5; ++t)
      for (int p = 0; p < 17; ++p) {
        const Action a{s, t, p};
        if (!validate_action(a, {}).empty()) continue;
        const auto m = to_operational_mode(a);
        const Action back = to_action(m);
        EXPECT_EQ(back.n_os, s);
        EXPECT_EQ(back.n_ot, t);
        if (t == 4) {
          EXPECT_EQ(back.n_op, p);
        }
      }
  EXPECT_EQ(to_operational_mode({0, 4, 8}).pump_setting_w, 2e6);
}

TEST(Eog, RuleReadouts) {
  EogController c;
  const OperationalMode gen{TurbineMode::EbbGeneration, SluiceMode::Offline, 0.0};
  EXPECT_EQ(c.decide(view(5.0, 5.1, 7.5)).turbine, TurbineMode::EbbGeneration);
  EXPECT_EQ(c.decide(view(5.0, 5.1, 6.5)).turbine, TurbineMode::Offline);
  EXPECT_EQ(c.decide(view(5.0, 5.1, 6.5, gen)).turbine, TurbineMode::EbbGeneration);
  EXPECT_EQ(c.decide(view(5.0, 5.1, 5.8, gen)).turbine, TurbineMode::Offline);
  const auto fill = c.decide(view(8.0, 7.9, 6.0));
  EXPECT_EQ(fill.turbine, TurbineMode::Idling);
  EXPECT_EQ(fill.sluice, SluiceMode::Online);
  EXPECT_EQ(c.decide(view(8.0, 8.1, 6.0)).turbine, TurbineMode::Offline);
}

TEST(Eog, OneGenerationPhasePerTide) {
  const std::vector<HarmonicConstituent> c{{"M2", 4.0, 12.4206012, 0.0}};
  const auto tide = synthesize_tide(c, 6.75, 0, 12.4206012 * 3600.0, 60.0);
  EogController eog;
  SimulationOptions o;
  o.dt_s = 60.0;
  o.horizon_s = 12.4 * 3600.0;
  const auto tr = simulate(eog, tide, tide[0], o, PlantBundle{});
  EXPECT_EQ(runs_of(tr, TurbineMode::EbbGeneration), 1);
  EXPECT_EQ(runs_of(tr, TurbineMode::FloodGeneration), 0);
  EXPECT_EQ(runs_of(tr, TurbineMode::Pumping), 0);
  EXPECT_GT(energy_summary(tr).generated_j, 0.0);
}

TEST(Twp, GeneratesBothWaysAndPumpsOnlyAgainstHead) {
  const auto tide = default_forcing(4.0);
  ControlConfig cc;
  cc.scheme = "twp";
  const PlantBundle b;
  auto ctl = make_controller(cc, b);
  SimulationOptions o;
  o.horizon_s = 4 * 86400.0;
  const auto tr = simulate(*ctl, tide, tide[0], o, b);
  EXPECT_GT(runs_of(tr, TurbineMode::EbbGeneration), 3);
  EXPECT_GT(runs_of(tr, TurbineMode::FloodGeneration), 3);
  EXPECT_GT(runs_of(tr, TurbineMode::Pumping), 0);
  for (const auto& r : tr.records) {
    EXPECT_FALSE(pumping_with_positive_head(r)) << "t = " << r.time_s;
    if (r.turbine_mode == TurbineMode::EbbGeneration) {
      EXPECT_LT(r.head_m, -cc.h_min_m + 1e-9);
    }
    if (r.turbine_mode == TurbineMode::FloodGeneration) {
      EXPECT_GT(r.head_m, cc.h_min_m - 1e-9);
    }
  }
}

TEST(Twp, RejectsPumpInputAboveCap) {
  ControlConfig cc;
  cc.pump_p_in_w = 5e6;
  EXPECT_THROW(TwpConstrainedController(cc, PlantBundle{}), InvalidInput);
  cc.scheme = "bogus";
  EXPECT_THROW(make_controller(cc, PlantBundle{}), InvalidInput);
}

TEST(Baselines, TwpBeatsEogOnSpringNeapForcing) {
  const auto tide = default_forcing(14.77);
  const PlantBundle b;
  SimulationOptions o;
  o.horizon_s = 14.77 * 86400.0;
  ControlConfig e, t;
  t.scheme = "twp";
  auto eog = make_controller(e, b);
  auto twp = make_controller(t, b);
  const double e_net = energy_summary(simulate(*eog, tide, tide[0], o, b)).net_j;
  const double t_net = energy_summary(simulate(*twp, tide, tide[0], o, b)).net_j;
  EXPECT_GT(e_net, 0.0);
  EXPECT_GE(t_net, e_net);
}

TEST(Baselines, ResetMakesRunsRepeatable) {
  const auto tide = default_forcing(2.0);
  ControlConfig t;
  t.scheme = "twp";
  const PlantBundle b;
  auto ctl = make_controller(t, b);
  SimulationOptions o;
  o.horizon_s = 2 * 86400.0;
  const auto a = simulate(*ctl, tide, tide[0], o, b);
  const auto c = simulate(*ctl, tide, tide[0], o, b);
  ASSERT_EQ(a.size(), c.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.records[i].lagoon_z, c.records[i].lagoon_z);
}
