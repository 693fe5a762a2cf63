#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "trs/calibration.hpp"
#include "trs/control.hpp"

using namespace trs;

namespace {

// Drives one ebb unit through a head schedule by holding the ocean a fixed
// distance below the lagoon, recording the per-unit power after each step.
PowerTrace engine_power_trace(double zeta_a, double zeta_d, double dt = 60.0) {
  PlantBundle b;
  b.zeta.accel_ebb = zeta_a;
  b.zeta.decel_ebb = zeta_d;
  std::vector<double> heads;
  for (int k = 0; k < 10; ++k) heads.push_back(0.0);
  for (int k = 0; k < 70; ++k) heads.push_back(5.0);
  for (int k = 0; k < 30; ++k) heads.push_back(3.0);
  for (int k = 0; k < 40; ++k) heads.push_back(4.2);
  for (int k = 0; k < 20; ++k) heads.push_back(0.5);
  PowerTrace tr;
  tr.dt_s = dt;
  auto s = initial_state(10.0);
  const OperationalMode gen{TurbineMode::EbbGeneration, SluiceMode::Offline, 0.0};
  for (double h : heads) {
    s = step(s, s.lagoon_z - h, gen, dt, b).state;
    tr.head_m.push_back(h);
    tr.power_w.push_back(s.ebb_power_w);
  }
  return tr;
}

TideSeries m2_window(double hours, double phase, double dt = 60.0) {
  const std::vector<HarmonicConstituent> c{{"M2", 4.0, 12.4206012, phase}};
  return synthesize_tide(c, 6.75, 0, hours * 3600.0, dt);
}

SluicingTrace planted_trace(const OperationalMode& mode, double l0, double phase, DischargeCoefficients truth) {
  PlantBundle b;
  b.coeffs = truth;
  SluicingTrace tr{m2_window(6.0, phase), {}, mode};
  tr.lagoon_z.assign(tr.ocean.size(), l0);
  tr.lagoon_z = predict_sluicing(tr, b);
  return tr;
}

std::vector<SluicingTrace> mixed_traces(DischargeCoefficients truth) {
  const OperationalMode gates{TurbineMode::Offline, SluiceMode::Online, 0.0};
  const OperationalMode idle{TurbineMode::Idling, SluiceMode::Offline, 0.0};
  return {planted_trace(gates, 3.0, 3.5, truth), planted_trace(idle, 3.0, 3.5, truth),
          planted_trace(kFill, 10.0, 0.3, truth)};
}

}  // namespace

TEST(GoldenSection, FindsInteriorAndBoundaryMinima) {
  EXPECT_NEAR(golden_section([](double x) { return (x - 2.3) * (x - 2.3); }, 0, 5, 1e-9), 2.3, 1e-6);
  EXPECT_NEAR(golden_section([](double x) { return x; }, 1, 4, 1e-9), 1.0, 1e-12);
}

TEST(CalibrateZeta, RecoversEngineConstants) {
  const std::vector<PowerTrace> traces{engine_power_trace(14.2, 1.355)};
  const auto fit = calibrate_zeta(traces, la_rance_ebb_chart());
  EXPECT_FALSE(fit.degenerate);
  EXPECT_NEAR(fit.zeta_accel_min, 14.2, 0.1);
  EXPECT_NEAR(fit.zeta_decel_min, 1.355, 0.1);
}

TEST(CalibrateZeta, LowerBoundRecoveredAtBound) {
  const std::vector<PowerTrace> traces{engine_power_trace(kMinZetaMin, kMinZetaMin)};
  const auto fit = calibrate_zeta(traces, la_rance_ebb_chart());
  EXPECT_NEAR(fit.zeta_accel_min, kMinZetaMin, 1e-3);
  EXPECT_NEAR(fit.zeta_decel_min, kMinZetaMin, 1e-3);
}

TEST(CalibrateZeta, NoisyTracesWithinOneMinute) {
  const auto clean = engine_power_trace(14.2, 1.355);
  double peak = 0;
  for (double p : clean.power_w) peak = std::max(peak, p);
  for (unsigned seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 0.01 * peak);
    auto noisy = clean;
    for (double& p : noisy.power_w) p += n(rng);
    const std::vector<PowerTrace> traces{noisy};
    const auto fit = calibrate_zeta(traces, la_rance_ebb_chart());
    EXPECT_NEAR(fit.zeta_accel_min, 14.2, 1.0) << "seed " << seed;
    EXPECT_NEAR(fit.zeta_decel_min, 1.355, 1.0) << "seed " << seed;
  }
}

TEST(CalibrateZeta, FlatTraceIsDegenerate) {
  PowerTrace tr;
  tr.dt_s = 60;
  tr.head_m.assign(50, 0.5);
  tr.power_w.assign(50, 0.0);
  const std::vector<PowerTrace> traces{tr};
  const auto fit = calibrate_zeta(traces, la_rance_ebb_chart());
  EXPECT_TRUE(fit.degenerate);
  EXPECT_EQ(fit.zeta_accel_min, kMinZetaMin);
  EXPECT_THROW(calibrate_zeta(std::vector<PowerTrace>{}, la_rance_ebb_chart()), InvalidInput);
}

TEST(FitDischarge, RecoversPlantedCoefficients) {
  const auto traces = mixed_traces({1.017, 0.967});
  const auto fit = fit_discharge_coefficients(traces, PlantBundle{});
  EXPECT_NEAR(fit.coeffs.cd_sluice, 1.017, 0.01);
  EXPECT_NEAR(fit.coeffs.cd_turbine, 0.967, 0.01);
}

TEST(FitDischarge, UnitCoefficientsBarelyChangeNssdWhenBothStructuresOpen) {
  const DischargeCoefficients truth{1.017, 0.967};
  std::vector<SluicingTrace> traces{planted_trace(kFill, 10.0, 0.3, truth), planted_trace(kFill, 2.5, 3.5, truth)};
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.01);
  for (auto& tr : traces)
    for (double& z : tr.lagoon_z) z += n(rng);
  const auto fit = fit_discharge_coefficients(traces, PlantBundle{});
  PlantBundle unit;
  unit.coeffs = {1.0, 1.0};
  EXPECT_LT(nssd(traces, unit), 1.1 * fit.nssd);
}

TEST(FitDischarge, InteriorTruthsNeverLandOnCorners) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> cd(1.01, 1.07), cdt(0.95, 1.35);
  using D = DischargeCoefficients;
  for (int i = 0; i < 4; ++i) {
    const D truth{cd(rng), cdt(rng)};
    const auto fit = fit_discharge_coefficients(mixed_traces(truth), PlantBundle{});
    const bool sluice_edge = fit.coeffs.cd_sluice <= D::kSluiceMin + 1e-6 || fit.coeffs.cd_sluice >= D::kSluiceMax - 1e-6;
    const bool turbine_edge =
        fit.coeffs.cd_turbine <= D::kTurbineMin + 1e-6 || fit.coeffs.cd_turbine >= D::kTurbineMax - 1e-6;
    EXPECT_FALSE(sluice_edge && turbine_edge) << truth.cd_sluice << " " << truth.cd_turbine;
    EXPECT_NEAR(fit.coeffs.cd_sluice, truth.cd_sluice, 0.01);
    EXPECT_NEAR(fit.coeffs.cd_turbine, truth.cd_turbine, 0.01);
  }
}

TEST(FitDischarge, EmptyTraceSetRejected) {
  EXPECT_THROW(fit_discharge_coefficients(std::vector<SluicingTrace>{}, PlantBundle{}), InvalidInput);
}
