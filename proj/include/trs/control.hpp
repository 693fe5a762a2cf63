#pragma once

// Action vocabulary shared by the heuristics and the learned policy, and the
// two baseline operating schemes: ebb-only generation and the two-way with
// pumping scheme restricted to pumping against the head.

#include <algorithm>
#include <memory>
#include <optional>
#include <string>

#include "trs/error.hpp"
#include "trs/hydraulics.hpp"
#include "trs/simulator.hpp"

namespace trs {

/// One choice per branch: sluices (2), turbine mode (5), pump input index (17).
struct Action {
  int n_os = 0;
  int n_ot = 0;
  int n_op = 0;

  static constexpr int kSluiceOptions = 2;
  static constexpr int kTurbineOptions = 5;
  static constexpr int kPumpOptions = 17;
  static constexpr double kPumpStepW = 0.25e6;

  bool operator==(const Action&) const = default;
};

/// Empty string when the action is legal.
///
/// Besides the branch ranges, a pump request needs a nonzero input, and
/// sluices only open with the turbines passing water: every operating mode of
/// the plant that opens the sluices also has the turbines on.
inline std::string validate_action(const Action& a, const OperationalMode& current) {
  if (a.n_os < 0 || a.n_os >= Action::kSluiceOptions) return "sluice branch out of range";
  if (a.n_ot < 0 || a.n_ot >= Action::kTurbineOptions) return "turbine branch out of range";
  if (a.n_op < 0 || a.n_op >= Action::kPumpOptions) return "pump branch out of range";
  const auto t = static_cast<TurbineMode>(a.n_ot);
  if (t == TurbineMode::Pumping && a.n_op == 0) return "pumping requested with zero input power";
  if (t == TurbineMode::Offline && a.n_os == 1)
    return std::string("sluices cannot open with the turbines offline (current turbine mode ") +
           to_string(current.turbine) + ")";
  return {};
}

struct CoercedAction {
  Action action;
  bool coerced = false;
};

/// Nearest legal action: a zero-power pump request becomes turbines offline,
/// and open sluices with turbines offline become sluicing with idling units.
inline CoercedAction coerce_action(Action a) {
  CoercedAction out{a, false};
  a.n_os = std::clamp(a.n_os, 0, Action::kSluiceOptions - 1);
  a.n_ot = std::clamp(a.n_ot, 0, Action::kTurbineOptions - 1);
  a.n_op = std::clamp(a.n_op, 0, Action::kPumpOptions - 1);
  if (static_cast<TurbineMode>(a.n_ot) == TurbineMode::Pumping && a.n_op == 0) a.n_ot = 0;
  if (static_cast<TurbineMode>(a.n_ot) == TurbineMode::Offline && a.n_os == 1) a.n_ot = 3;
  out.coerced = !(a == out.action);
  out.action = a;
  return out;
}

inline OperationalMode to_operational_mode(const Action& a) {
  OperationalMode m;
  m.turbine = static_cast<TurbineMode>(a.n_ot);
  m.sluice = static_cast<SluiceMode>(a.n_os);
  m.pump_setting_w = m.turbine == TurbineMode::Pumping ? Action::kPumpStepW * a.n_op : 0.0;
  return m;
}

inline Action to_action(const OperationalMode& m) {
  Action a;
  a.n_os = static_cast<int>(m.sluice);
  a.n_ot = static_cast<int>(m.turbine);
  a.n_op = m.turbine == TurbineMode::Pumping ? static_cast<int>(std::lround(m.pump_setting_w / Action::kPumpStepW)) : 0;
  return a;
}

struct ControlConfig {
  std::string scheme = "eog";
  double h_start_m = 2.0;
  double h_min_m = 1.0;
  double pump_p_in_w = 4e6;
  /// Pumping stops once the lagoon sits this far beyond the ocean extreme.
  double pump_target_m = 0.3;
  /// During two-way generation sluices join the turbines once the head drops
  /// below h_min + this margin.
  double sluice_assist_m = 0.5;
};

inline constexpr OperationalMode kHold{};
inline constexpr OperationalMode kFill{TurbineMode::Idling, SluiceMode::Online, 0.0};

/// Ebb-only generation: fill through sluices and idling turbines on the
/// rising tide, hold, then generate alone on the ebb until the head falls
/// below h_min.
class EogController final : public Controller {
 public:
  explicit EogController(ControlConfig cfg = {}) : cfg_(cfg) {}

  OperationalMode decide(const PlantView& v) override {
    const double ebb_head = v.lagoon_z - v.ocean_z;
    const bool generating = v.mode.turbine == TurbineMode::EbbGeneration;
    if (ebb_head >= cfg_.h_start_m || (generating && ebb_head >= cfg_.h_min_m))
      return {TurbineMode::EbbGeneration, SluiceMode::Offline, 0.0};
    const bool rising = v.ocean_z >= v.ocean_prev_z;
    if (v.head() > 0.0 && rising) return kFill;
    return kHold;
  }

 private:
  ControlConfig cfg_;
};

/// Two-way generation with end-of-generation sluicing and fixed-power pumping,
/// pumping only while the water has to be lifted against the head.
class TwpConstrainedController final : public Controller {
 public:
  TwpConstrainedController(ControlConfig cfg, const PlantBundle& bundle)
      : cfg_(cfg), pivot_z_(bundle.pump_pivot_z), ebb_pump_(bundle.ebb_pump), flood_pump_(bundle.flood_pump) {
    if (!(cfg_.pump_p_in_w > 0.0) || cfg_.pump_p_in_w > bundle.max_pump_setting_w)
      throw InvalidInput("twp controller: pump input must lie in (0, per-unit cap]");
  }

  void reset() override {
    phase_ = Phase::Holding;
    extreme_ = 0.0;
  }

  OperationalMode decide(const PlantView& v) override {
    const double ebb_head = v.lagoon_z - v.ocean_z;
    const double flood_head = -ebb_head;
    auto start_generation = [&]() -> std::optional<Direction> {
      if (ebb_head >= cfg_.h_start_m) return Direction::Ebb;
      if (flood_head >= cfg_.h_start_m) return Direction::Flood;
      return std::nullopt;
    };

    switch (phase_) {
      case Phase::Holding:
      case Phase::Pumping:
        if (auto d = start_generation()) {
          phase_ = Phase::Generating;
          gen_dir_ = *d;
          return generate(v);
        }
        if (phase_ == Phase::Pumping) return pump(v);
        return kHold;
      case Phase::Generating: return generate(v);
      case Phase::Sluicing: return sluice(v);
    }
    return kHold;
  }

  /// Head in the pumping direction the plant would pick right now; negative
  /// means lifting against gravity.
  double pump_head(const PlantView& v) const {
    return pump_into_lagoon(v) ? v.ocean_z - v.lagoon_z : v.lagoon_z - v.ocean_z;
  }

 private:
  enum class Phase { Holding, Generating, Sluicing, Pumping };

  bool pump_into_lagoon(const PlantView& v) const {
    if (v.mode.turbine == TurbineMode::Pumping) return into_;
    return v.ocean_z >= pivot_z_;
  }

  OperationalMode generate(const PlantView& v) {
    const double head = gen_dir_ == Direction::Ebb ? v.lagoon_z - v.ocean_z : v.ocean_z - v.lagoon_z;
    if (head < cfg_.h_min_m) {
      phase_ = Phase::Sluicing;
      extreme_ = v.ocean_z;
      return sluice(v);
    }
    const auto sl = head < cfg_.h_min_m + cfg_.sluice_assist_m ? SluiceMode::Online : SluiceMode::Offline;
    return {gen_dir_ == Direction::Ebb ? TurbineMode::EbbGeneration : TurbineMode::FloodGeneration, sl, 0.0};
  }

  OperationalMode sluice(const PlantView& v) {
    // After ebb generation the ocean heads for low water, after flood
    // generation for high water.
    extreme_ = gen_dir_ == Direction::Ebb ? std::min(extreme_, v.ocean_z) : std::max(extreme_, v.ocean_z);
    if (pump_head(v) >= 0.0) return kFill;
    if (target_reached(v)) {
      phase_ = Phase::Holding;
      return kHold;
    }
    phase_ = Phase::Pumping;
    into_ = v.ocean_z >= pivot_z_;
    return pump(v);
  }

  bool target_reached(const PlantView& v) const {
    return gen_dir_ == Direction::Ebb ? v.lagoon_z <= extreme_ - cfg_.pump_target_m
                                      : v.lagoon_z >= extreme_ + cfg_.pump_target_m;
  }

  OperationalMode pump(const PlantView& v) {
    const double h_p = pump_head(v);
    const auto& curve = into_ ? ebb_pump_ : flood_pump_;
    if (h_p >= 0.0 || target_reached(v) || h_p <= shutoff_head(curve, cfg_.pump_p_in_w)) {
      phase_ = Phase::Holding;
      return kHold;
    }
    return {TurbineMode::Pumping, SluiceMode::Offline, cfg_.pump_p_in_w};
  }

  ControlConfig cfg_;
  double pivot_z_;
  PumpCurve ebb_pump_, flood_pump_;
  Phase phase_ = Phase::Holding;
  Direction gen_dir_ = Direction::Ebb;
  double extreme_ = 0.0;
  bool into_ = true;
};

/// Holds one fixed mode. The sluicing schemes produce the traces the
/// discharge-coefficient fit consumes.
class ConstantController final : public Controller {
 public:
  explicit ConstantController(OperationalMode m) : m_(m) {}
  OperationalMode decide(const PlantView&) override { return m_; }

 private:
  OperationalMode m_;
};

inline std::unique_ptr<Controller> make_controller(const ControlConfig& cfg, const PlantBundle& bundle) {
  if (cfg.scheme == "eog") return std::make_unique<EogController>(cfg);
  if (cfg.scheme == "twp") return std::make_unique<TwpConstrainedController>(cfg, bundle);
  if (cfg.scheme == "offline") return std::make_unique<ConstantController>(kHold);
  if (cfg.scheme == "sluice") return std::make_unique<ConstantController>(kFill);
  if (cfg.scheme == "idle")
    return std::make_unique<ConstantController>(OperationalMode{TurbineMode::Idling, SluiceMode::Offline, 0.0});
  if (cfg.scheme == "gates")
    return std::make_unique<ConstantController>(OperationalMode{TurbineMode::Offline, SluiceMode::Online, 0.0});
  throw InvalidInput("unknown control scheme '" + cfg.scheme + "' (expected eog|twp|offline|sluice|idle|gates)");
}

}  // namespace trs
