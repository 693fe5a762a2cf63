#pragma once

// 0D plant: lagoon level driven by the aggregate flow of turbines and sluices,
// L(t+dt) = L(t) + Q_T * dt / Al(L(t)).
//
// Flows are positive into the lagoon. Every structure's flow (or, for
// generating turbines, power) relaxes toward its steady-state target through
// its own ramp channel, so a unit switching mode ramps the outgoing quantity
// down while the incoming one ramps up.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "trs/csv.hpp"
#include "trs/error.hpp"
#include "trs/geometry.hpp"
#include "trs/hydraulics.hpp"
#include "trs/tide.hpp"

namespace trs {

enum class TurbineMode : int { Offline = 0, EbbGeneration = 1, FloodGeneration = 2, Idling = 3, Pumping = 4 };
enum class SluiceMode : int { Offline = 0, Online = 1 };

inline const char* to_string(TurbineMode m) {
  switch (m) {
    case TurbineMode::Offline: return "offline";
    case TurbineMode::EbbGeneration: return "ebb_generation";
    case TurbineMode::FloodGeneration: return "flood_generation";
    case TurbineMode::Idling: return "idling";
    case TurbineMode::Pumping: return "pumping";
  }
  return "?";
}

struct OperationalMode {
  TurbineMode turbine = TurbineMode::Offline;
  SluiceMode sluice = SluiceMode::Offline;
  double pump_setting_w = 0.0;  // per unit, only while pumping

  bool operator==(const OperationalMode&) const = default;
};

/// Everything that parametrises the plant apart from its state.
struct PlantBundle {
  PlantSpec spec;
  HillChart ebb_chart = la_rance_ebb_chart();
  HillChart flood_chart = la_rance_flood_chart();
  PumpCurve ebb_pump = la_rance_ebb_pump();
  PumpCurve flood_pump = la_rance_flood_pump();
  DischargeCoefficients coeffs;
  AreaModel area = la_rance_area_model();
  ZetaTable zeta;
  double max_pump_setting_w = 4e6;
  /// Pumping starts ebb-oriented (into the lagoon) when the ocean is at or
  /// above this level, flood-oriented (out of the lagoon) otherwise.
  double pump_pivot_z = 6.75;
  double area_z_min = 0.0, area_z_max = 13.5;
  double guard_z_min = -0.5, guard_z_max = 14.0;
};

/// Checks the invariants of a commanded mode; returns an empty string if legal.
inline std::string check_operational_mode(const OperationalMode& m, const PlantBundle& b) {
  const int t = static_cast<int>(m.turbine), s = static_cast<int>(m.sluice);
  if (t < 0 || t > 4) return "turbine mode out of range";
  if (s < 0 || s > 1) return "sluice mode out of range";
  if (!std::isfinite(m.pump_setting_w)) return "non-finite pump setting";
  if (m.turbine == TurbineMode::Pumping) {
    if (!(m.pump_setting_w > 0.0)) return "pumping requires a positive pump setting";
    if (m.pump_setting_w > b.max_pump_setting_w * (1 + 1e-12)) return "pump setting above the per-unit cap";
  } else if (m.pump_setting_w != 0.0) {
    return "pump setting given while not pumping";
  }
  return {};
}

struct PlantDiagnostics {
  std::int64_t area_clamps = 0;
  std::int64_t guard_band_clamps = 0;
};

struct PlantState {
  double time_s = 0.0;
  double lagoon_z = 0.0;
  OperationalMode mode;
  // Ramp channels. Turbine channels are per unit, the sluice one is aggregate.
  double ebb_power_w = 0.0;
  double flood_power_w = 0.0;
  double idle_flow = 0.0;
  double pump_flow = 0.0;
  double pump_power_w = 0.0;
  double sluice_flow = 0.0;
  Direction pump_direction = Direction::Ebb;
  PlantDiagnostics diagnostics;
};

inline PlantState initial_state(double lagoon_z, double time_s = 0.0) {
  PlantState s;
  s.lagoon_z = lagoon_z;
  s.time_s = time_s;
  return s;
}

struct StepRecord {
  double time_s = 0.0;
  double ocean_z = 0.0;
  double lagoon_z = 0.0;
  double head_m = 0.0;  // ocean - lagoon
  TurbineMode turbine_mode = TurbineMode::Offline;
  SluiceMode sluice_mode = SluiceMode::Offline;
  double q_turbine = 0.0;
  double q_sluice = 0.0;
  double q_total = 0.0;
  double p_gen_w = 0.0;
  double p_pump_w = 0.0;

  double p_net_w() const noexcept { return p_gen_w - p_pump_w; }
};

/// Pumping while gravity already pushes water the pump's way: the pump moves
/// water into the lagoon with the ocean above it, or out with the ocean below.
inline bool pumping_with_positive_head(const StepRecord& r) {
  return r.turbine_mode == TurbineMode::Pumping && r.q_turbine * r.head_m > 0.0;
}

struct Trace {
  double dt_s = 0.0;
  std::vector<StepRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
};

struct StepResult {
  PlantState state;
  StepRecord record;
};

namespace detail {

// Generating flow follows from the ramped power; the head is floored at h_min
// so a unit coasting down near zero head does not blow the flow up.
inline double generating_flow(double power_w, const HillChart& chart, const PlantBundle& b, double head) {
  if (power_w <= 0.0) return 0.0;
  const double hf = std::max(head, chart.h_min_m);
  const double eta = std::max(chart.efficiency(hf), 0.05);
  return std::min(power_w / (eta * b.spec.rho * b.spec.g * hf), b.spec.max_turbine_flow_m3s);
}

inline double ramp_to(double current, double target, double zeta_min, double dt_s) {
  double v = ramp_step(RampState{current, zeta_min}, target, dt_s).current;
  if (target == 0.0 && std::abs(v) < 1e-9) v = 0.0;
  return v;
}

}  // namespace detail

/// Advances the plant by one step of length `dt_s` under `action`.
///
/// The record describes the step that starts at `state.time_s`: levels at the
/// start, the commanded modes, and the ramped flows and powers that act over
/// the step.
inline StepResult step(const PlantState& state, double ocean_z, const OperationalMode& action, double dt_s,
                       const PlantBundle& b) {
  if (!(dt_s > 0.0) || !std::isfinite(dt_s)) throw InvalidInput("step: dt must be positive");
  if (!std::isfinite(ocean_z) || !std::isfinite(state.lagoon_z)) throw NumericalError("step: non-finite level");
  if (auto why = check_operational_mode(action, b); !why.empty()) throw InvalidInput("step: " + why);

  const auto& spec = b.spec;
  const double cdt = b.coeffs.cd_turbine;
  const double head = ocean_z - state.lagoon_z;
  const double n = spec.n_turbines;

  PlantState next = state;
  next.mode = action;
  if (action.turbine == TurbineMode::Pumping && state.mode.turbine != TurbineMode::Pumping)
    next.pump_direction = ocean_z >= b.pump_pivot_z ? Direction::Ebb : Direction::Flood;

  // Steady-state targets at the current head.
  const bool ebb_on = action.turbine == TurbineMode::EbbGeneration;
  const bool flood_on = action.turbine == TurbineMode::FloodGeneration;
  const double ebb_target = ebb_on ? turbine_power_ss(b.ebb_chart, spec, cdt, -head) : 0.0;
  const double flood_target = flood_on ? turbine_power_ss(b.flood_chart, spec, cdt, head) : 0.0;
  double idle_target = 0.0;
  if (action.turbine == TurbineMode::Idling) {
    const double q = std::min(std::abs(orifice_flow(cdt, spec.turbine_area_m2(), head, spec.g)),
                              spec.max_turbine_flow_m3s);
    idle_target = head < 0.0 ? -q : q;
  }
  double pump_target = 0.0, pump_power_target = 0.0;
  if (action.turbine == TurbineMode::Pumping) {
    const bool into = next.pump_direction == Direction::Ebb;
    const auto& curve = into ? b.ebb_pump : b.flood_pump;
    const double h_p = into ? head : -head;
    const double q = pump_flow_any_head(curve, spec, cdt, h_p, action.pump_setting_w);
    pump_target = into ? q : -q;
    pump_power_target = action.pump_setting_w;
  }
  const double sluice_target =
      action.sluice == SluiceMode::Online ? orifice_flow(b.coeffs.cd_sluice, spec.sluice_area_m2, head, spec.g) : 0.0;

  const auto& z = b.zeta;
  next.ebb_power_w = detail::ramp_to(
      state.ebb_power_w, ebb_target,
      select_zeta(z, RampRegime::Generating, Direction::Ebb, ebb_target > state.ebb_power_w), dt_s);
  next.flood_power_w = detail::ramp_to(
      state.flood_power_w, flood_target,
      select_zeta(z, RampRegime::Generating, Direction::Flood, flood_target > state.flood_power_w), dt_s);
  next.idle_flow = detail::ramp_to(state.idle_flow, idle_target, z.idle, dt_s);
  next.pump_flow = detail::ramp_to(state.pump_flow, pump_target, z.pump, dt_s);
  next.pump_power_w = detail::ramp_to(state.pump_power_w, pump_power_target, z.pump, dt_s);
  next.sluice_flow = detail::ramp_to(state.sluice_flow, sluice_target, z.sluice, dt_s);

  const double per_unit =
      -detail::generating_flow(next.ebb_power_w, b.ebb_chart, b, -head) +
      detail::generating_flow(next.flood_power_w, b.flood_chart, b, head) + next.idle_flow + next.pump_flow;
  const double q_turbine = n * std::clamp(per_unit, -spec.max_turbine_flow_m3s, spec.max_turbine_flow_m3s);
  const double q_total = q_turbine + next.sluice_flow;

  double area_z = state.lagoon_z;
  if (area_z < b.area_z_min || area_z > b.area_z_max) {
    area_z = std::clamp(area_z, b.area_z_min, b.area_z_max);
    ++next.diagnostics.area_clamps;
  }
  double lagoon = state.lagoon_z + q_total * dt_s / area_at(b.area, area_z);
  if (lagoon < b.guard_z_min || lagoon > b.guard_z_max) {
    lagoon = std::clamp(lagoon, b.guard_z_min, b.guard_z_max);
    ++next.diagnostics.guard_band_clamps;
  }
  if (!std::isfinite(lagoon)) throw NumericalError("step: lagoon level became non-finite");
  next.lagoon_z = lagoon;
  next.time_s = state.time_s + dt_s;

  const double p_net = n * (next.ebb_power_w + next.flood_power_w - next.pump_power_w);
  StepRecord rec;
  rec.time_s = state.time_s;
  rec.ocean_z = ocean_z;
  rec.lagoon_z = state.lagoon_z;
  rec.head_m = head;
  rec.turbine_mode = action.turbine;
  rec.sluice_mode = action.sluice;
  rec.q_turbine = q_turbine;
  rec.q_sluice = next.sluice_flow;
  rec.q_total = q_total;
  rec.p_gen_w = std::max(p_net, 0.0);
  rec.p_pump_w = std::max(-p_net, 0.0);
  return {next, rec};
}

// ---- closed loop -----------------------------------------------------------

/// What a controller may look at: the current and previous sample of each
/// level, the modes in force, and nothing about the future.
struct PlantView {
  std::size_t step_index = 0;
  double time_s = 0.0;
  double ocean_z = 0.0;
  double ocean_prev_z = 0.0;
  double lagoon_z = 0.0;
  double lagoon_prev_z = 0.0;
  OperationalMode mode;
  OperationalMode prev_mode;

  double head() const noexcept { return ocean_z - lagoon_z; }
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual OperationalMode decide(const PlantView& view) = 0;
  virtual void reset() {}
};

struct SimulationOptions {
  double dt_s = 360.0;
  double horizon_s = 86400.0;
  /// The controller is consulted every this many seconds and its answer held
  /// in between; 0 means every step.
  double control_interval_s = 0.0;
};

/// Ocean level on the tidal datum at time t.
inline double ocean_z_at(const TideSeries& tide, double t_s) { return level_at(tide, t_s) + tide.datum_offset(); }

inline Trace simulate(Controller& controller, const TideSeries& tide, double initial_lagoon_z,
                      const SimulationOptions& opt, const PlantBundle& bundle, PlantState* final_state = nullptr) {
  if (!(opt.dt_s > 0.0)) throw InvalidInput("simulate: dt must be positive");
  const auto n_steps = static_cast<std::size_t>(std::floor(opt.horizon_s / opt.dt_s + 1e-9));
  if (n_steps == 0) throw InvalidInput("simulate: horizon shorter than one step");
  std::size_t every = 1;
  if (opt.control_interval_s > 0.0) {
    const double ratio = opt.control_interval_s / opt.dt_s;
    every = static_cast<std::size_t>(std::llround(ratio));
    if (every == 0 || std::abs(ratio - static_cast<double>(every)) > 1e-9)
      throw InvalidInput("simulate: control interval must be a whole number of steps");
  }
  const double t0 = static_cast<double>(tide.start_time());
  controller.reset();
  PlantState state = initial_state(initial_lagoon_z, t0);
  Trace trace;
  trace.dt_s = opt.dt_s;
  trace.records.reserve(n_steps);
  PlantView view;
  double prev_ocean = ocean_z_at(tide, t0);
  double prev_lagoon = initial_lagoon_z;
  OperationalMode prev_mode = state.mode;
  OperationalMode action;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = t0 + opt.dt_s * static_cast<double>(k);
    const double ocean = ocean_z_at(tide, t);
    if (k % every == 0) {
      view.step_index = k;
      view.time_s = t;
      view.ocean_z = ocean;
      view.ocean_prev_z = prev_ocean;
      view.lagoon_z = state.lagoon_z;
      view.lagoon_prev_z = prev_lagoon;
      view.mode = state.mode;
      view.prev_mode = prev_mode;
      action = controller.decide(view);
      if (auto why = check_operational_mode(action, bundle); !why.empty())
        throw InvalidInput("controller returned an invalid mode at step " + std::to_string(k) + ": " + why);
      prev_ocean = ocean;
      prev_lagoon = state.lagoon_z;
      prev_mode = state.mode;
    }
    auto res = step(state, ocean, action, opt.dt_s, bundle);
    state = res.state;
    trace.records.push_back(res.record);
  }
  if (final_state) *final_state = state;
  return trace;
}

// ---- accounting ------------------------------------------------------------

struct EnergySummary {
  double generated_j = 0.0;
  double pump_input_j = 0.0;
  double net_j = 0.0;
};

/// Trapezoidal integral of generated and pump-input power over the records.
inline EnergySummary energy_summary(const Trace& trace) {
  EnergySummary e;
  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    const auto& a = trace.records[i - 1];
    const auto& c = trace.records[i];
    const double dt = c.time_s - a.time_s;
    e.generated_j += 0.5 * (a.p_gen_w + c.p_gen_w) * dt;
    e.pump_input_j += 0.5 * (a.p_pump_w + c.p_pump_w) * dt;
  }
  e.net_j = e.generated_j - e.pump_input_j;
  return e;
}

inline constexpr double kJoulesPerGWh = 3.6e12;

// ---- trace CSV -------------------------------------------------------------

inline const std::vector<std::string>& trace_csv_header() {
  static const std::vector<std::string> h{"time_s",   "ocean_m", "lagoon_m",     "head_m",  "t_mode",
                                          "s_mode",   "q_turb_m3s", "q_sluice_m3s", "p_gen_w", "p_pump_w"};
  return h;
}

inline void export_trace(const Trace& trace, const std::filesystem::path& path) {
  csv::Writer w(path, trace_csv_header());
  for (const auto& r : trace.records)
    w.row(r.time_s, r.ocean_z, r.lagoon_z, r.head_m, static_cast<int>(r.turbine_mode), static_cast<int>(r.sluice_mode),
          r.q_turbine, r.q_sluice, r.p_gen_w, r.p_pump_w);
}

inline Trace import_trace(const std::filesystem::path& path) {
  const auto table = csv::read(path, trace_csv_header());
  Trace trace;
  const auto& h = trace_csv_header();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const std::size_t row = i + 2;
    StepRecord r;
    r.time_s = csv::parse_double(f[0], row, h[0]);
    r.ocean_z = csv::parse_double(f[1], row, h[1]);
    r.lagoon_z = csv::parse_double(f[2], row, h[2]);
    r.head_m = csv::parse_double(f[3], row, h[3]);
    const auto tm = csv::parse_int(f[4], row, h[4]);
    const auto sm = csv::parse_int(f[5], row, h[5]);
    if (tm < 0 || tm > 4) throw FormatError("turbine mode code out of range", row);
    if (sm < 0 || sm > 1) throw FormatError("sluice mode code out of range", row);
    r.turbine_mode = static_cast<TurbineMode>(tm);
    r.sluice_mode = static_cast<SluiceMode>(sm);
    r.q_turbine = csv::parse_double(f[6], row, h[6]);
    r.q_sluice = csv::parse_double(f[7], row, h[7]);
    r.q_total = r.q_turbine + r.q_sluice;
    r.p_gen_w = csv::parse_double(f[8], row, h[8]);
    r.p_pump_w = csv::parse_double(f[9], row, h[9]);
    if (!trace.records.empty() && !(r.time_s > trace.records.back().time_s))
      throw FormatError("time not strictly increasing", row);
    trace.records.push_back(r);
  }
  if (trace.records.size() >= 2) trace.dt_s = trace.records[1].time_s - trace.records[0].time_s;
  return trace;
}

}  // namespace trs
