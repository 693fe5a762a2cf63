#pragma once

// Fitting the ramp time constants to power traces and the discharge
// coefficients to sluicing traces. Both objectives are low dimensional and
// smooth, so a coarse grid followed by golden-section refinement suffices.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "trs/error.hpp"
#include "trs/hydraulics.hpp"
#include "trs/simulator.hpp"
#include "trs/tide.hpp"

namespace trs {

// ---- minimisers ------------------------------------------------------------

/// Minimiser of a unimodal f on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-6) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  // The bracket ends are candidates too, so a minimum on the bound is found.
  double best = 0.5 * (a + b), fbest = f(best);
  for (double x : {lo, hi, a, b})
    if (double fx = f(x); fx < fbest) best = x, fbest = fx;
  return best;
}

struct Box2 {
  double x_lo, x_hi, y_lo, y_hi;
};

struct Min2 {
  double x = 0.0, y = 0.0, f = 0.0;
};

/// Grid search on an n x n lattice, then alternating golden-section line
/// searches inside one grid cell of the incumbent until it stops moving.
inline Min2 grid_golden_2d(const std::function<double(double, double)>& f, const Box2& box, int n = 25,
                           double tol = 1e-7, int max_rounds = 40) {
  if (n < 2) throw InvalidInput("grid_golden_2d: grid needs at least two points per axis");
  const double hx = (box.x_hi - box.x_lo) / (n - 1), hy = (box.y_hi - box.y_lo) / (n - 1);
  Min2 best{box.x_lo, box.y_lo, std::numeric_limits<double>::infinity()};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = box.x_lo + i * hx, y = box.y_lo + j * hy;
      if (const double v = f(x, y); v < best.f) best = {x, y, v};
    }
  double wx = hx, wy = hy;
  for (int round = 0; round < max_rounds; ++round) {
    const Min2 prev = best;
    const double x = golden_section([&](double t) { return f(t, best.y); }, std::max(box.x_lo, best.x - wx),
                                    std::min(box.x_hi, best.x + wx), tol * (box.x_hi - box.x_lo));
    if (const double v = f(x, best.y); v <= best.f) best = {x, best.y, v};
    const double y = golden_section([&](double t) { return f(best.x, t); }, std::max(box.y_lo, best.y - wy),
                                    std::min(box.y_hi, best.y + wy), tol * (box.y_hi - box.y_lo));
    if (const double v = f(best.x, y); v <= best.f) best = {best.x, y, v};
    const double moved = std::max(std::abs(best.x - prev.x) / (box.x_hi - box.x_lo),
                                  std::abs(best.y - prev.y) / (box.y_hi - box.y_lo));
    if (moved < tol) break;
    wx = std::max(0.5 * wx, 4.0 * std::abs(best.x - prev.x) + tol);
    wy = std::max(0.5 * wy, 4.0 * std::abs(best.y - prev.y) + tol);
  }
  return best;
}

// ---- ramp time constants ---------------------------------------------------

/// Per-unit generating power sampled every dt.
///
/// power_w[k] is the power over step k: the previous value relaxed for one dt
/// toward the hill-chart power at head_m[k]. The unit starts from rest.
struct PowerTrace {
  double dt_s = 0.0;
  std::vector<double> head_m;
  std::vector<double> power_w;
};

struct ZetaFit {
  double zeta_accel_min = kMinZetaMin;
  double zeta_decel_min = kMinZetaMin;
  double ssr = 0.0;
  bool degenerate = false;
};

inline constexpr double kZetaSearchMax = 60.0;

/// Ramped hill-chart prediction for one trace.
inline std::vector<double> predict_ramped_power(const PowerTrace& tr, const HillChart& chart, const PlantSpec& spec,
                                                double cd_turbine, double zeta_accel, double zeta_decel) {
  std::vector<double> out(tr.head_m.size());
  double p = 0.0;
  for (std::size_t k = 0; k < tr.head_m.size(); ++k) {
    const double target = turbine_power_ss(chart, spec, cd_turbine, tr.head_m[k]);
    const double zeta = target > p ? zeta_accel : zeta_decel;
    p = ramp_step(RampState{p, zeta}, target, tr.dt_s).current;
    out[k] = p;
  }
  return out;
}

inline double ramp_ssr(std::span<const PowerTrace> traces, const HillChart& chart, const PlantSpec& spec,
                       double cd_turbine, double zeta_accel, double zeta_decel) {
  double ssr = 0.0;
  for (const auto& tr : traces) {
    const auto pred = predict_ramped_power(tr, chart, spec, cd_turbine, zeta_accel, zeta_decel);
    for (std::size_t k = 0; k < pred.size(); ++k) {
      const double r = pred[k] - tr.power_w[k];
      ssr += r * r;
    }
  }
  return ssr;
}

inline ZetaFit calibrate_zeta(std::span<const PowerTrace> traces, const HillChart& chart, const PlantSpec& spec = {},
                              double cd_turbine = 1.0) {
  if (traces.empty()) throw InvalidInput("calibrate_zeta: no traces");
  for (const auto& tr : traces) {
    if (!(tr.dt_s > 0.0)) throw InvalidInput("calibrate_zeta: trace dt must be positive");
    if (tr.head_m.size() != tr.power_w.size() || tr.head_m.empty())
      throw InvalidInput("calibrate_zeta: head and power series must be non-empty and equally long");
  }
  auto f = [&](double za, double zd) { return ramp_ssr(traces, chart, spec, cd_turbine, za, zd); };

  // A trace that never leaves steady state carries no information on either
  // constant: the objective is the same at every corner of the box.
  const double lo = kMinZetaMin, hi = kZetaSearchMax;
  const double c[4] = {f(lo, lo), f(lo, hi), f(hi, lo), f(hi, hi)};
  const double cmax = *std::max_element(c, c + 4), cmin = *std::min_element(c, c + 4);
  if (cmax - cmin <= 1e-12 * (1.0 + cmax)) return {lo, lo, c[0], true};

  const auto m = grid_golden_2d(f, {lo, hi, lo, hi}, 41, 1e-8);
  return {m.x, m.y, m.f, false};
}

// ---- discharge coefficients ------------------------------------------------

/// One sluicing event: the ocean forcing, the measured lagoon level at every
/// step, and the structures that were open.
struct SluicingTrace {
  TideSeries ocean;
  std::vector<double> lagoon_z;
  OperationalMode mode{TurbineMode::Idling, SluiceMode::Online, 0.0};

  double duration_s() const noexcept { return ocean.dt() * static_cast<double>(lagoon_z.size()); }
};

/// Lagoon levels predicted by the 0D model from the first measured level.
inline std::vector<double> predict_sluicing(const SluicingTrace& tr, const PlantBundle& b) {
  std::vector<double> out(tr.lagoon_z.size());
  PlantState s = initial_state(tr.lagoon_z.front(), static_cast<double>(tr.ocean.start_time()));
  for (std::size_t k = 0; k < tr.lagoon_z.size(); ++k) {
    out[k] = s.lagoon_z;
    s = step(s, tr.ocean.z_at_index(k), tr.mode, tr.ocean.dt(), b).state;
  }
  return out;
}

/// Sum over traces of the squared level residuals divided by the trace length in seconds.
inline double nssd(std::span<const SluicingTrace> traces, const PlantBundle& b) {
  double total = 0.0;
  for (const auto& tr : traces) {
    const auto pred = predict_sluicing(tr, b);
    double ss = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
      const double r = pred[k] - tr.lagoon_z[k];
      ss += r * r;
    }
    total += ss / tr.duration_s();
  }
  return total;
}

struct DischargeFit {
  DischargeCoefficients coeffs;
  double nssd = 0.0;
};

inline DischargeFit fit_discharge_coefficients(std::span<const SluicingTrace> traces, PlantBundle bundle) {
  if (traces.empty()) throw InvalidInput("fit_discharge_coefficients: empty trace set");
  for (const auto& tr : traces) {
    if (tr.lagoon_z.size() < 2) throw InvalidInput("fit_discharge_coefficients: trace needs two or more samples");
    if (tr.ocean.size() < tr.lagoon_z.size())
      throw InvalidInput("fit_discharge_coefficients: ocean series shorter than lagoon series");
  }
  auto f = [&](double cd, double cdt) {
    bundle.coeffs = {cd, cdt};
    return nssd(traces, bundle);
  };
  using D = DischargeCoefficients;
  const auto m = grid_golden_2d(f, {D::kSluiceMin, D::kSluiceMax, D::kTurbineMin, D::kTurbineMax}, 21, 1e-7);
  return {{m.x, m.y}, m.f};
}

}  // namespace trs
