#pragma once

// Equivalent lagoon wetted area: Al(z) = 2s*z + Al0, fitted through the
// origin of the stage-storage curve dV(z) = s*z^2 + Al0*z.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <vector>

#include "trs/csv.hpp"
#include "trs/error.hpp"

namespace trs {

struct StageStoragePoint {
  double z_m = 0.0;
  double delta_v_m3 = 0.0;
};

struct AreaModel {
  double slope_2s = 0.0;  // m^2 per m
  double al0 = 0.0;       // m^2 at z = 0

  double s() const noexcept { return 0.5 * slope_2s; }
};

inline AreaModel fit_area_model(std::span<const StageStoragePoint> points) {
  if (points.size() < 2) throw FitError("area fit needs at least two points");
  for (const auto& p : points)
    if (!std::isfinite(p.z_m) || !std::isfinite(p.delta_v_m3) || p.z_m < 0.0)
      throw InvalidInput("stage-storage point must have finite z >= 0");
  // Normal equations for dV = s*z^2 + a*z, no constant term.
  double z2 = 0, z3 = 0, z4 = 0, vz = 0, vz2 = 0;
  for (const auto& p : points) {
    const double z = p.z_m, zz = z * z;
    z2 += zz;
    z3 += zz * z;
    z4 += zz * zz;
    vz += p.delta_v_m3 * z;
    vz2 += p.delta_v_m3 * zz;
  }
  const double det = z4 * z2 - z3 * z3;
  // The two columns z^2 and z are independent iff there are two distinct
  // nonzero z values.
  std::vector<double> nonzero;
  for (const auto& p : points)
    if (p.z_m > 0.0 && std::none_of(nonzero.begin(), nonzero.end(), [&](double z) { return z == p.z_m; }))
      nonzero.push_back(p.z_m);
  if (nonzero.size() < 2 || !(std::abs(det) > 1e-12 * z4 * z2))
    throw FitError("area fit is rank deficient: need two distinct nonzero stages");
  const double s = (vz2 * z2 - vz * z3) / det;
  const double a = (z4 * vz - z3 * vz2) / det;
  return AreaModel{2.0 * s, a};
}

/// Stored volume of the La Rance estuary against stage, z = 0 at the lowest
/// equinoctial low tide.
inline std::vector<StageStoragePoint> la_rance_stage_storage() {
  return {{0.0, 0.0}, {5.0, 65e6}, {8.5, 110e6}, {10.9, 150e6}, {13.5, 184e6}};
}

inline AreaModel la_rance_area_model() {
  const auto pts = la_rance_stage_storage();
  return fit_area_model(pts);
}

inline double area_at(const AreaModel& m, double z) { return m.slope_2s * z + m.al0; }

/// Stored volume between two stages; antisymmetric in its arguments.
inline double volume_between(const AreaModel& m, double z1, double z2) {
  return m.s() * (z2 * z2 - z1 * z1) + m.al0 * (z2 - z1);
}

inline std::vector<StageStoragePoint> read_stage_storage_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path, {"z_m", "delta_v_m3"});
  std::vector<StageStoragePoint> pts;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    pts.push_back({csv::parse_double(t.rows[r][0], r + 2, "z_m"), csv::parse_double(t.rows[r][1], r + 2, "delta_v_m3")});
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].z_m > pts[i - 1].z_m && pts[i].delta_v_m3 < pts[i - 1].delta_v_m3)
      throw FormatError(path.string() + ": stored volume decreases with stage", i + 2);
  return pts;
}

}  // namespace trs
