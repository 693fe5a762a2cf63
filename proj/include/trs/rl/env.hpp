#pragma once

// The plant as a Markov decision process: one simulator step per action,
// reward equal to the step's net electrical energy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>

#include "trs/control.hpp"
#include "trs/error.hpp"
#include "trs/rl/network.hpp"
#include "trs/simulator.hpp"
#include "trs/tide.hpp"

namespace trs::rl {

/// Levels and modes at the current and previous decision.
struct Observation {
  double ocean_z = 0.0, ocean_prev_z = 0.0;
  double lagoon_z = 0.0, lagoon_prev_z = 0.0;
  Action mode, prev_mode;

  static constexpr int kFeatures = 18;
  static constexpr double kLevelChangeScale_m = 0.5;

  /// Both normalised current levels and their changes since the previous
  /// decision (clipped to [-1, 1]), both sluice states, one-hot turbine modes
  /// for both decisions and both pump indices scaled to [0, 1].
  Vec features(const LevelNorm& norm) const {
    auto change = [](double now, double before) {
      return std::clamp((now - before) / kLevelChangeScale_m, -1.0, 1.0);
    };
    Vec f = Vec::Zero(kFeatures);
    f[0] = norm(ocean_z);
    f[1] = change(ocean_z, ocean_prev_z);
    f[2] = norm(lagoon_z);
    f[3] = change(lagoon_z, lagoon_prev_z);
    f[4] = mode.n_os;
    f[5] = prev_mode.n_os;
    f[6 + mode.n_ot] = 1.0;
    f[11 + prev_mode.n_ot] = 1.0;
    f[16] = mode.n_op / static_cast<double>(Action::kPumpOptions - 1);
    f[17] = prev_mode.n_op / static_cast<double>(Action::kPumpOptions - 1);
    return f;
  }
};

struct EnvConfig {
  std::size_t episode_steps = 3544;  // one spring-neap cycle at 6 min
  double dt_s = 360.0;
  /// Episodes start at a random whole step inside the tide window; otherwise
  /// at its first sample.
  bool random_start = true;
};

struct StepOutcome {
  Observation obs;
  double reward = 0.0;    // energy_j / reward scale
  double energy_j = 0.0;  // net electrical energy credited to this step
  bool done = false;
  bool coerced = false;
  StepRecord record;
};

class Env {
 public:
  Env(std::shared_ptr<const TideSeries> tide, PlantBundle bundle, EnvConfig cfg, LevelNorm norm)
      : tide_(std::move(tide)), bundle_(std::move(bundle)), cfg_(cfg), norm_(norm) {
    if (!tide_) throw InvalidInput("env: no tide");
    if (cfg_.episode_steps == 0) throw InvalidInput("env: episode needs at least one step");
    if (!(cfg_.dt_s > 0.0)) throw InvalidInput("env: dt must be positive");
    const double span = tide_->end_time() - static_cast<double>(tide_->start_time());
    if (static_cast<double>(cfg_.episode_steps) * cfg_.dt_s > span + 1e-6)
      throw InvalidInput("env: tide window shorter than one episode");
    max_start_ = static_cast<std::size_t>(
        std::floor((span - static_cast<double>(cfg_.episode_steps) * cfg_.dt_s) / cfg_.dt_s + 1e-9));
  }

  double reward_scale_j() const { return bundle_.spec.plant_capacity_w() * cfg_.dt_s; }
  const LevelNorm& norm() const noexcept { return norm_; }
  const EnvConfig& config() const noexcept { return cfg_; }
  const PlantBundle& bundle() const noexcept { return bundle_; }
  const PlantState& state() const noexcept { return state_; }
  std::size_t steps_taken() const noexcept { return k_; }

  Observation reset(std::uint64_t seed) {
    std::size_t start = 0;
    if (cfg_.random_start && max_start_ > 0) {
      std::mt19937_64 rng(seed);
      start = static_cast<std::size_t>(rng() % (max_start_ + 1));
    }
    t0_ = static_cast<double>(tide_->start_time()) + cfg_.dt_s * static_cast<double>(start);
    k_ = 0;
    const double ocean = ocean_z_at(*tide_, t0_);
    state_ = initial_state(ocean, t0_);
    ocean_prev_ = ocean;
    lagoon_prev_ = ocean;
    prev_mode_ = {};
    prev_p_net_ = 0.0;
    return observe();
  }

  /// A controller's view of the current decision point, matching what
  /// `simulate` hands it.
  PlantView view() const {
    PlantView v;
    v.step_index = k_;
    v.time_s = state_.time_s;
    v.ocean_z = ocean_z_at(*tide_, state_.time_s);
    v.ocean_prev_z = ocean_prev_;
    v.lagoon_z = state_.lagoon_z;
    v.lagoon_prev_z = lagoon_prev_;
    v.mode = state_.mode;
    v.prev_mode = to_operational_mode(prev_mode_);
    return v;
  }

  StepOutcome step(const Action& requested) {
    if (k_ >= cfg_.episode_steps) throw InvalidInput("env: step after the episode ended; call reset");
    const auto c = coerce_action(requested);
    const double ocean = ocean_z_at(*tide_, state_.time_s);
    const Action current = to_action(state_.mode);
    auto res = trs::step(state_, ocean, to_operational_mode(c.action), cfg_.dt_s, bundle_);

    StepOutcome out;
    out.coerced = c.coerced;
    out.record = res.record;
    // Trapezoidal credit between consecutive records, so an episode's
    // rewards add up to the trace's integrated net energy.
    const double p = res.record.p_net_w();
    out.energy_j = k_ == 0 ? 0.0 : 0.5 * (prev_p_net_ + p) * cfg_.dt_s;
    out.reward = out.energy_j / reward_scale_j();
    prev_p_net_ = p;

    ocean_prev_ = ocean;
    lagoon_prev_ = state_.lagoon_z;
    prev_mode_ = current;
    state_ = res.state;
    ++k_;
    out.done = k_ >= cfg_.episode_steps;
    out.obs = observe();
    return out;
  }

 private:
  Observation observe() const {
    Observation o;
    o.ocean_z = ocean_z_at(*tide_, state_.time_s);
    o.ocean_prev_z = ocean_prev_;
    o.lagoon_z = state_.lagoon_z;
    o.lagoon_prev_z = lagoon_prev_;
    o.mode = to_action(state_.mode);
    o.prev_mode = prev_mode_;
    return o;
  }

  std::shared_ptr<const TideSeries> tide_;
  PlantBundle bundle_;
  EnvConfig cfg_;
  LevelNorm norm_;
  std::size_t max_start_ = 0;
  double t0_ = 0.0;
  std::size_t k_ = 0;
  PlantState state_;
  double ocean_prev_ = 0.0, lagoon_prev_ = 0.0;
  Action prev_mode_;
  double prev_p_net_ = 0.0;
};

/// Training-data level range widened by `margin_m` on both sides.
inline LevelNorm level_norm_from(const TideSeries& tide, double margin_m = 1.0) {
  return {tide.min() + tide.datum_offset() - margin_m, tide.max() + tide.datum_offset() + margin_m};
}

inline Env make_env(std::shared_ptr<const TideSeries> tide, const PlantBundle& bundle, std::size_t episode_steps,
                    double dt_s = 360.0, bool random_start = true) {
  auto norm = level_norm_from(*tide);
  return Env(std::move(tide), bundle, EnvConfig{episode_steps, dt_s, random_start}, norm);
}

}  // namespace trs::rl
