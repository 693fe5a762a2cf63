#pragma once

// Steady-state flow and power laws for sluices and bulb turbines in every
// operating mode, plus the first-order ramp that smooths transitions.
//
// Head conventions: every law here takes the head in its own working
// direction. For a hill chart that is the head driving the turbine; for a pump
// curve h_p <= 0 means lifting water against gravity and h_p > 0 means
// gravity already pushes water the way the pump is moving it.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "trs/csv.hpp"
#include "trs/error.hpp"

namespace trs {

enum class Direction { Ebb, Flood };

inline const char* to_string(Direction d) { return d == Direction::Ebb ? "ebb" : "flood"; }

inline Direction parse_direction(const std::string& s) {
  if (s == "ebb") return Direction::Ebb;
  if (s == "flood") return Direction::Flood;
  throw InvalidInput("unknown direction '" + s + "' (expected ebb|flood)");
}

struct PlantSpec {
  int n_turbines = 24;
  double turbine_diameter_m = 5.35;
  double turbine_capacity_w = 10e6;
  double turbine_speed_rpm = 94.0;
  double sluice_area_m2 = 900.0;
  double max_pump_head_m = 6.0;
  double max_turbine_flow_m3s = 280.0;
  double rho = 1024.0;
  double g = 9.81;

  double turbine_area_m2() const noexcept {
    const double r = 0.5 * turbine_diameter_m;
    return std::numbers::pi * r * r;
  }
  double plant_capacity_w() const noexcept { return turbine_capacity_w * n_turbines; }

  void validate() const {
    if (n_turbines <= 0 || !(turbine_diameter_m > 0) || !(turbine_capacity_w > 0) || !(turbine_speed_rpm > 0) ||
        !(sluice_area_m2 > 0) || !(max_pump_head_m > 0) || !(max_turbine_flow_m3s > 0) || !(rho > 0) || !(g > 0))
      throw InvalidInput("plant spec values must all be positive");
  }
};

/// Quadratic efficiency-vs-head law of a turbine in generating mode.
struct HillChart {
  Direction direction = Direction::Ebb;
  double c2 = 0.0, c1 = 0.0, c0 = 0.0;
  double h_min_m = 1.0;    // below this head the unit produces nothing
  double h_start_m = 2.0;  // head a controller waits for before starting

  double efficiency(double h) const noexcept { return std::clamp((c2 * h + c1) * h + c0, 0.0, 1.0); }
};

inline HillChart la_rance_ebb_chart() { return {Direction::Ebb, -0.0144, 0.2417, 0.0981, 1.0, 2.0}; }
inline HillChart la_rance_flood_chart() { return {Direction::Flood, -0.01, 0.167, 0.0259, 1.0, 2.0}; }

/// Characteristic pump curve Q = a*h^2 + b*h + Q_M at the reference input
/// power, rescaled to other inputs with the rotational-speed affinity laws.
/// `h_s_ref` is the nominal shutoff head at the reference power.
struct PumpCurve {
  Direction direction = Direction::Ebb;
  double a = 0.0;      // s/m^5
  double b = 0.0;      // m^2/s
  double h_s_ref = -6.0;
  double q_m_ref = 0.0;
  double p_ref_w = 6e6;

  double reference_flow(double h) const noexcept { return (a * h + b) * h + q_m_ref; }
};

inline PumpCurve la_rance_ebb_pump() { return {Direction::Ebb, 1.6, 51.8, -6.0, 252.2, 6e6}; }
inline PumpCurve la_rance_flood_pump() { return {Direction::Flood, -0.6, 32.4, -6.0, 215.8, 6e6}; }

/// Measured pump operating point.
struct PumpPoint {
  Direction direction = Direction::Ebb;
  double h_p_m = 0.0;
  double p_in_w = 0.0;
  double q_m3s = 0.0;
};

inline std::vector<PumpPoint> read_pump_points_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path, {"direction", "h_p_m", "p_in_w", "q_m3s"});
  std::vector<PumpPoint> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto row = r + 2;
    PumpPoint p;
    try {
      p.direction = parse_direction(t.rows[r][0]);
    } catch (const InvalidInput& e) {
      throw FormatError(e.what(), row);
    }
    p.h_p_m = csv::parse_double(t.rows[r][1], row, "h_p_m");
    p.p_in_w = csv::parse_double(t.rows[r][2], row, "p_in_w");
    p.q_m3s = csv::parse_double(t.rows[r][3], row, "q_m3s");
    out.push_back(p);
  }
  return out;
}

struct DischargeCoefficients {
  double cd_sluice = 1.0;
  double cd_turbine = 1.0;

  static constexpr double kSluiceMin = 1.0, kSluiceMax = 1.077;
  static constexpr double kTurbineMin = 0.91, kTurbineMax = 1.4;

  bool within_bounds() const noexcept {
    return cd_sluice >= kSluiceMin && cd_sluice <= kSluiceMax && cd_turbine >= kTurbineMin &&
           cd_turbine <= kTurbineMax;
  }
};

/// Orifice law; the result carries the sign of `h`.
inline double orifice_flow(double cd, double area_m2, double h, double g = 9.81) {
  if (!(area_m2 > 0.0)) throw InvalidInput("orifice_flow: area must be positive");
  const double q = cd * area_m2 * std::sqrt(2.0 * g * std::abs(h));
  return h < 0.0 ? -q : q;
}

/// Per-unit turbine passage flow at head `h` (>= 0), capped at the unit limit.
inline double turbine_flow_ss(const HillChart&, const PlantSpec& spec, double cd_turbine, double h) {
  if (h <= 0.0) return 0.0;
  return std::min(orifice_flow(cd_turbine, spec.turbine_area_m2(), h, spec.g), spec.max_turbine_flow_m3s);
}

/// Per-unit steady-state generating power (hill chart).
inline double turbine_power_ss(const HillChart& chart, const PlantSpec& spec, double cd_turbine, double h) {
  if (!(h >= chart.h_min_m)) return 0.0;
  const double q = turbine_flow_ss(chart, spec, cd_turbine, h);
  return std::min(spec.turbine_capacity_w, chart.efficiency(h) * spec.rho * spec.g * h * q);
}

// ---- pumping ---------------------------------------------------------------

/// cbrt(p_in / p_ref); the affinity laws scale flow by this and head by its square.
inline double affinity_speed_ratio(const PumpCurve& curve, double p_in_w) {
  if (!(p_in_w > 0.0)) throw InvalidInput("pump input power must be positive");
  return std::cbrt(p_in_w / curve.p_ref_w);
}

inline double shutoff_head(const PumpCurve& curve, double p_in_w) {
  const double c = affinity_speed_ratio(curve, p_in_w);
  return curve.h_s_ref * c * c;
}

inline double max_pump_flow(const PumpCurve& curve, double p_in_w) {
  return curve.q_m_ref * affinity_speed_ratio(curve, p_in_w);
}

/// Pump flow lifting against a head h_p <= 0 at input power p_in.
///
/// Evaluates the reference quadratic at the affinity-equivalent head
/// h_p * (p_ref/p_in)^(2/3) and scales the flow by (p_in/p_ref)^(1/3). This is
/// the product form a*R*(h - h_s)(h - Q_M/(a*R*h_s)) written without needing
/// the roots explicitly.
inline double pump_flow(const PumpCurve& curve, double h_p, double p_in_w, double max_flow_m3s) {
  if (h_p > 0.0) throw InvalidInput("pump_flow expects h_p <= 0; use pump_flow_positive_head");
  const double c = affinity_speed_ratio(curve, p_in_w);
  if (h_p <= curve.h_s_ref * c * c) return 0.0;
  const double q = c * curve.reference_flow(h_p / (c * c));
  return std::clamp(q, 0.0, max_flow_m3s);
}

/// Gravity-aided pumping (h > 0): maximum pump flow plus the passage flow.
inline double pump_flow_positive_head(const PumpCurve& curve, const PlantSpec& spec, double cd_turbine, double h,
                                      double p_in_w) {
  if (h < 0.0) throw InvalidInput("pump_flow_positive_head expects h >= 0");
  const double q = max_pump_flow(curve, p_in_w) + orifice_flow(cd_turbine, spec.turbine_area_m2(), h, spec.g);
  return std::min(q, spec.max_turbine_flow_m3s);
}

/// Dispatches on the sign of the pump head.
inline double pump_flow_any_head(const PumpCurve& curve, const PlantSpec& spec, double cd_turbine, double h_p,
                                 double p_in_w) {
  return h_p > 0.0 ? pump_flow_positive_head(curve, spec, cd_turbine, h_p, p_in_w)
                   : pump_flow(curve, h_p, p_in_w, spec.max_turbine_flow_m3s);
}

/// Hydraulic power delivered to the water.
inline double pump_power_out(double q_p, double h_p, double rho = 1024.0, double g = 9.81) {
  return rho * g * q_p * std::abs(h_p);
}

/// Constant-efficiency pump model. Singular at zero head, and it has no notion
/// of shutoff or maximum flow.
inline double idealized_pump_flow(double eta_p, double p_in_w, double h_p, double rho = 1024.0, double g = 9.81) {
  if (h_p == 0.0) throw DegenerateInput("idealized pump flow is singular at zero head");
  return eta_p * p_in_w / (rho * g * std::abs(h_p));
}

// ---- ramping ---------------------------------------------------------------

inline constexpr double kMinZetaMin = 1.091;

struct RampState {
  double current = 0.0;
  double zeta_min = kMinZetaMin;
};

/// One exponential relaxation step toward `target`.
inline RampState ramp_step(const RampState& state, double target, double dt_s) {
  if (!(state.zeta_min > 0.0)) throw InvalidInput("ramp time constant must be positive");
  const double decay = std::exp(-dt_s / (60.0 * state.zeta_min));
  return {target + (state.current - target) * decay, state.zeta_min};
}

enum class RampRegime { Generating, Sluicing, Idling, Pumping };

/// Ramp time constants in minutes.
struct ZetaTable {
  double accel_ebb = 14.2;
  double accel_flood = 11.257;
  double decel_ebb = 1.355;
  double decel_flood = 1.091;
  double sluice = 1.091;
  double idle = 1.091;
  double pump = 1.091;
};

/// Generating units ramp with the accelerating constant when the target power
/// lies above the current power and with the decelerating one otherwise.
inline double select_zeta(const ZetaTable& z, RampRegime regime, Direction dir, bool accelerating) {
  switch (regime) {
    case RampRegime::Generating:
      if (dir == Direction::Ebb) return accelerating ? z.accel_ebb : z.decel_ebb;
      return accelerating ? z.accel_flood : z.decel_flood;
    case RampRegime::Sluicing: return z.sluice;
    case RampRegime::Idling: return z.idle;
    case RampRegime::Pumping: return z.pump;
  }
  throw InvalidInput("select_zeta: unknown ramp regime " + std::to_string(static_cast<int>(regime)));
}

}  // namespace trs
