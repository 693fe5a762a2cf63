#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "trs/geometry.hpp"

using namespace trs;

namespace {

// Least squares through the origin by Householder QR on the design matrix.
Eigen::Vector2d qr_oracle(const std::vector<StageStoragePoint>& pts) {
  Eigen::MatrixXd A(pts.size(), 2);
  Eigen::VectorXd y(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    A(i, 0) = pts[i].z_m * pts[i].z_m;
    A(i, 1) = pts[i].z_m;
    y(i) = pts[i].delta_v_m3;
  }
  return A.householderQr().solve(y);
}

}  // namespace

TEST(AreaFit, MatchesQrOracleOnFixture) {
  const auto pts = read_stage_storage_csv(std::string(TRS_FIXTURE_DIR) + "/la_rance_stage_storage.csv");
  ASSERT_EQ(pts.size(), 5u);
  const auto m = fit_area_model(pts);
  const auto o = qr_oracle(pts);
  EXPECT_NEAR(m.s() / o(0), 1.0, 1e-9);
  EXPECT_NEAR(m.al0 / o(1), 1.0, 1e-9);
}

TEST(AreaFit, ResidualsWithinThreePercent) {
  const auto pts = la_rance_stage_storage();
  const auto m = fit_area_model(pts);
  for (const auto& p : pts) {
    if (p.z_m == 0.0) continue;
    EXPECT_LE(std::abs(volume_between(m, 0, p.z_m) - p.delta_v_m3) / p.delta_v_m3, 0.03) << "z = " << p.z_m;
  }
}

TEST(AreaFit, ExactQuadraticIsRecovered) {
  std::vector<StageStoragePoint> pts;
  for (double z : {1.0, 2.0, 4.5, 7.0}) pts.push_back({z, 3.0e4 * z * z + 2.0e6 * z});
  const auto m = fit_area_model(pts);
  EXPECT_NEAR(m.s(), 3.0e4, 1e-6);
  EXPECT_NEAR(m.al0, 2.0e6, 1e-4);
  EXPECT_NEAR(area_at(m, 2.0), 2 * 3.0e4 * 2.0 + 2.0e6, 1e-4);
}

TEST(AreaFit, RankDeficientInputsRejected) {
  EXPECT_THROW(fit_area_model(std::vector<StageStoragePoint>{{0, 0}, {5, 1e6}}), FitError);
  EXPECT_THROW(fit_area_model(std::vector<StageStoragePoint>{{5, 1e6}, {5, 1.1e6}, {0, 0}}), FitError);
  EXPECT_THROW(fit_area_model(std::vector<StageStoragePoint>{{1, 1}}), FitError);
}

TEST(Volume, AntisymmetricAndAdditive) {
  const auto m = la_rance_area_model();
  EXPECT_DOUBLE_EQ(volume_between(m, 3, 7), -volume_between(m, 7, 3));
  EXPECT_NEAR(volume_between(m, 1, 4) + volume_between(m, 4, 9), volume_between(m, 1, 9), 1e-3);
  // Derivative of the stored volume is the wetted area.
  const double h = 1e-4;
  EXPECT_NEAR((volume_between(m, 0, 6 + h) - volume_between(m, 0, 6 - h)) / (2 * h), area_at(m, 6), 1.0);
}

TEST(StageStorageCsv, DecreasingVolumeRejected) {
  const auto p = std::filesystem::temp_directory_path() / "trs_bad_stage.csv";
  std::ofstream(p) << "z_m,delta_v_m3\n0,0\n5,6e7\n8,5e7\n";
  try {
    read_stage_storage_csv(p);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.row(), 4u);
  }
}
