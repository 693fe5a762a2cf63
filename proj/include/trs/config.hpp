#pragma once

// Run configuration: one JSON document with tide, plant, control, simulation
// and rl sections. Missing keys take the defaults below; unknown keys are an
// error.

#include <cstdint>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "trs/control.hpp"
#include "trs/error.hpp"
#include "trs/rl/train.hpp"
#include "trs/simulator.hpp"
#include "trs/tide.hpp"

namespace trs {

using nlohmann::json;

struct TideConfig {
  std::vector<HarmonicConstituent> constituents{{"M2", 3.7, 12.4206012, 0.0},
                                                {"S2", 1.75, 12.0, 0.0},
                                                {"N2", 1.1, 12.65834751, 0.0},
                                                {"K1", 0.2, 23.93447213, 0.0}};
  double mean_level_m = 6.75;
  double dt_s = 360.0;
  double correction_factor = 1.0;
  std::int64_t start_s = 0;
  double duration_days = 365.0;
  double datum_offset_m = 0.0;
};

struct SimulationConfig {
  double dt_s = 360.0;
  double horizon_days = 14.77;
  /// Starting lagoon level; NaN means equal to the ocean at the start.
  double initial_lagoon_z = std::numeric_limits<double>::quiet_NaN();
};

struct RlConfig {
  rl::TrainConfig train;
  double episode_days = 14.77;
};

struct PathsConfig {
  std::string tide_csv;
  std::string stage_storage_csv;
};

struct RunConfig {
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string output_dir = "out";
  PathsConfig paths;
  TideConfig tide;
  PlantBundle plant;
  ControlConfig control;
  SimulationConfig simulation;
  RlConfig rl;
};

// ---- JSON mapping ----------------------------------------------------------

inline json to_json_value(const RunConfig& c) {
  json cons = json::array();
  for (const auto& k : c.tide.constituents)
    cons.push_back({{"name", k.name}, {"amplitude_m", k.amplitude_m}, {"period_h", k.period_h}, {"phase_rad", k.phase_rad}});
  const auto& p = c.plant;
  const auto& t = c.rl.train;
  return {
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"output_dir", c.output_dir},
      {"paths", {{"tide_csv", c.paths.tide_csv}, {"stage_storage_csv", c.paths.stage_storage_csv}}},
      {"tide",
       {{"constituents", cons},
        {"mean_level_m", c.tide.mean_level_m},
        {"dt_s", c.tide.dt_s},
        {"correction_factor", c.tide.correction_factor},
        {"start_s", c.tide.start_s},
        {"duration_days", c.tide.duration_days},
        {"datum_offset_m", c.tide.datum_offset_m}}},
      {"plant",
       {{"n_turbines", p.spec.n_turbines},
        {"turbine_diameter_m", p.spec.turbine_diameter_m},
        {"turbine_capacity_w", p.spec.turbine_capacity_w},
        {"sluice_area_m2", p.spec.sluice_area_m2},
        {"max_turbine_flow_m3s", p.spec.max_turbine_flow_m3s},
        {"rho", p.spec.rho},
        {"g", p.spec.g},
        {"cd_sluice", p.coeffs.cd_sluice},
        {"cd_turbine", p.coeffs.cd_turbine},
        {"max_pump_setting_w", p.max_pump_setting_w},
        {"pump_pivot_z", p.pump_pivot_z},
        {"area_slope_m2_per_m", p.area.slope_2s},
        {"area_at_datum_m2", p.area.al0},
        {"zeta_min",
         {{"accel_ebb", p.zeta.accel_ebb},
          {"accel_flood", p.zeta.accel_flood},
          {"decel_ebb", p.zeta.decel_ebb},
          {"decel_flood", p.zeta.decel_flood},
          {"sluice", p.zeta.sluice},
          {"idle", p.zeta.idle},
          {"pump", p.zeta.pump}}}}},
      {"control",
       {{"scheme", c.control.scheme},
        {"h_start_m", c.control.h_start_m},
        {"h_min_m", c.control.h_min_m},
        {"pump_p_in_w", c.control.pump_p_in_w},
        {"pump_target_m", c.control.pump_target_m},
        {"sluice_assist_m", c.control.sluice_assist_m}}},
      {"simulation",
       {{"dt_s", c.simulation.dt_s},
        {"horizon_days", c.simulation.horizon_days},
        {"initial_lagoon_z", std::isnan(c.simulation.initial_lagoon_z) ? json(nullptr)
                                                                        : json(c.simulation.initial_lagoon_z)}}},
      {"rl",
       {{"n_envs", t.n_envs},
        {"total_steps", t.total_steps},
        {"rollout_steps", t.rollout_steps},
        {"episode_days", c.rl.episode_days},
        {"gamma", t.gamma},
        {"use_gae", t.use_gae},
        {"anneal_lr", t.anneal_lr},
        {"gae_lambda", t.gae_lambda},
        {"clip", t.ppo.clip},
        {"value_coef", t.ppo.value_coef},
        {"lr", t.ppo.lr},
        {"epochs", t.ppo.epochs},
        {"minibatch", t.ppo.minibatch},
        {"max_grad_norm", t.ppo.max_grad_norm},
        {"beta0", t.beta0},
        {"hidden", t.hidden}}},
  };
}

namespace detail {

inline void reject_unknown_keys(const json& user, const json& ref, const std::string& where) {
  if (!user.is_object()) return;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = where.empty() ? it.key() : where + "." + it.key();
    if (!ref.contains(it.key())) throw InvalidInput("config: unknown key '" + path + "'");
    const auto& r = ref.at(it.key());
    if (r.is_object()) {
      if (!it.value().is_object()) throw InvalidInput("config: '" + path + "' must be an object");
      reject_unknown_keys(it.value(), r, path);
    } else if (r.is_array() && !r.empty() && r.front().is_object()) {
      if (!it.value().is_array()) throw InvalidInput("config: '" + path + "' must be an array");
      for (const auto& e : it.value()) reject_unknown_keys(e, r.front(), path + "[]");
    }
  }
}

template <class T>
void get(const json& j, const char* key, T& out, const std::string& section) {
  try {
    j.at(key).get_to(out);
  } catch (const json::exception& e) {
    throw InvalidInput("config: bad value for '" + section + "." + key + "': " + e.what());
  }
}

}  // namespace detail

inline RunConfig from_json_value(const json& j) {
  RunConfig c;
  detail::get(j, "seed", c.seed, "");
  detail::get(j, "jobs", c.jobs, "");
  detail::get(j, "output_dir", c.output_dir, "");
  detail::get(j.at("paths"), "tide_csv", c.paths.tide_csv, "paths");
  detail::get(j.at("paths"), "stage_storage_csv", c.paths.stage_storage_csv, "paths");

  const auto& t = j.at("tide");
  c.tide.constituents.clear();
  for (const auto& k : t.at("constituents")) {
    HarmonicConstituent h;
    h.name = k.value("name", "");
    detail::get(k, "amplitude_m", h.amplitude_m, "tide.constituents[]");
    detail::get(k, "period_h", h.period_h, "tide.constituents[]");
    h.phase_rad = k.value("phase_rad", 0.0);
    c.tide.constituents.push_back(h);
  }
  detail::get(t, "mean_level_m", c.tide.mean_level_m, "tide");
  detail::get(t, "dt_s", c.tide.dt_s, "tide");
  detail::get(t, "correction_factor", c.tide.correction_factor, "tide");
  detail::get(t, "start_s", c.tide.start_s, "tide");
  detail::get(t, "duration_days", c.tide.duration_days, "tide");
  detail::get(t, "datum_offset_m", c.tide.datum_offset_m, "tide");

  const auto& p = j.at("plant");
  auto& b = c.plant;
  detail::get(p, "n_turbines", b.spec.n_turbines, "plant");
  detail::get(p, "turbine_diameter_m", b.spec.turbine_diameter_m, "plant");
  detail::get(p, "turbine_capacity_w", b.spec.turbine_capacity_w, "plant");
  detail::get(p, "sluice_area_m2", b.spec.sluice_area_m2, "plant");
  detail::get(p, "max_turbine_flow_m3s", b.spec.max_turbine_flow_m3s, "plant");
  detail::get(p, "rho", b.spec.rho, "plant");
  detail::get(p, "g", b.spec.g, "plant");
  detail::get(p, "cd_sluice", b.coeffs.cd_sluice, "plant");
  detail::get(p, "cd_turbine", b.coeffs.cd_turbine, "plant");
  detail::get(p, "max_pump_setting_w", b.max_pump_setting_w, "plant");
  detail::get(p, "pump_pivot_z", b.pump_pivot_z, "plant");
  detail::get(p, "area_slope_m2_per_m", b.area.slope_2s, "plant");
  detail::get(p, "area_at_datum_m2", b.area.al0, "plant");
  const auto& z = p.at("zeta_min");
  detail::get(z, "accel_ebb", b.zeta.accel_ebb, "plant.zeta_min");
  detail::get(z, "accel_flood", b.zeta.accel_flood, "plant.zeta_min");
  detail::get(z, "decel_ebb", b.zeta.decel_ebb, "plant.zeta_min");
  detail::get(z, "decel_flood", b.zeta.decel_flood, "plant.zeta_min");
  detail::get(z, "sluice", b.zeta.sluice, "plant.zeta_min");
  detail::get(z, "idle", b.zeta.idle, "plant.zeta_min");
  detail::get(z, "pump", b.zeta.pump, "plant.zeta_min");

  const auto& ctl = j.at("control");
  detail::get(ctl, "scheme", c.control.scheme, "control");
  detail::get(ctl, "h_start_m", c.control.h_start_m, "control");
  detail::get(ctl, "h_min_m", c.control.h_min_m, "control");
  detail::get(ctl, "pump_p_in_w", c.control.pump_p_in_w, "control");
  detail::get(ctl, "pump_target_m", c.control.pump_target_m, "control");
  detail::get(ctl, "sluice_assist_m", c.control.sluice_assist_m, "control");

  const auto& s = j.at("simulation");
  detail::get(s, "dt_s", c.simulation.dt_s, "simulation");
  detail::get(s, "horizon_days", c.simulation.horizon_days, "simulation");
  if (!s.at("initial_lagoon_z").is_null()) detail::get(s, "initial_lagoon_z", c.simulation.initial_lagoon_z, "simulation");

  const auto& r = j.at("rl");
  auto& tr = c.rl.train;
  detail::get(r, "n_envs", tr.n_envs, "rl");
  detail::get(r, "total_steps", tr.total_steps, "rl");
  detail::get(r, "rollout_steps", tr.rollout_steps, "rl");
  detail::get(r, "episode_days", c.rl.episode_days, "rl");
  detail::get(r, "gamma", tr.gamma, "rl");
  detail::get(r, "use_gae", tr.use_gae, "rl");
  detail::get(r, "anneal_lr", tr.anneal_lr, "rl");
  detail::get(r, "gae_lambda", tr.gae_lambda, "rl");
  detail::get(r, "clip", tr.ppo.clip, "rl");
  detail::get(r, "value_coef", tr.ppo.value_coef, "rl");
  detail::get(r, "lr", tr.ppo.lr, "rl");
  detail::get(r, "epochs", tr.ppo.epochs, "rl");
  detail::get(r, "minibatch", tr.ppo.minibatch, "rl");
  detail::get(r, "max_grad_norm", tr.ppo.max_grad_norm, "rl");
  detail::get(r, "beta0", tr.beta0, "rl");
  detail::get(r, "hidden", tr.hidden, "rl");
  tr.seed = c.seed;
  tr.jobs = c.jobs;
  return c;
}

inline void validate(const RunConfig& c) {
  c.plant.spec.validate();
  if (c.jobs < 1) throw InvalidInput("config: jobs must be at least 1");
  if (!(c.tide.dt_s > 0) || !(c.tide.duration_days > 0)) throw InvalidInput("config: tide dt and duration must be positive");
  if (!(c.simulation.dt_s > 0) || !(c.simulation.horizon_days > 0))
    throw InvalidInput("config: simulation dt and horizon must be positive");
  if (!(c.control.h_min_m > 0) || c.control.h_start_m < c.control.h_min_m)
    throw InvalidInput("config: need 0 < h_min_m <= h_start_m");
  if (!(c.plant.area.al0 > 0)) throw InvalidInput("config: lagoon area at datum must be positive");
  if (!(c.rl.episode_days > 0)) throw InvalidInput("config: rl.episode_days must be positive");
}

/// Parses a config document over the defaults. `seed_from_env` is used when
/// the document does not set a seed.
inline RunConfig parse_config(const json& user, std::optional<std::uint64_t> seed_from_env = std::nullopt) {
  if (!user.is_object()) throw InvalidInput("config: top level must be an object");
  const json defaults = to_json_value(RunConfig{});
  detail::reject_unknown_keys(user, defaults, "");
  json merged = defaults;
  merged.merge_patch(user);
  // merge_patch drops keys set to null; restore the ones where null is meaningful.
  if (!merged.at("simulation").contains("initial_lagoon_z")) merged["simulation"]["initial_lagoon_z"] = nullptr;
  if (!user.contains("seed") && seed_from_env) merged["seed"] = *seed_from_env;
  auto c = from_json_value(merged);
  validate(c);
  return c;
}

/// Seed from TRS_ENGINE_SEED, if set and numeric.
inline std::optional<std::uint64_t> seed_from_environment() {
  const char* s = std::getenv("TRS_ENGINE_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const auto v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw InvalidInput(std::string("TRS_ENGINE_SEED is not an unsigned integer: ") + s);
  return v;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw FormatError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j, seed_from_environment());
}

inline void write_resolved_config(const RunConfig& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "resolved_config.json");
  if (!out) throw Error("cannot write resolved config into " + dir.string());
  out << to_json_value(c).dump(2) << '\n';
}

// ---- builders --------------------------------------------------------------

inline TideSeries build_tide(const RunConfig& c) {
  if (!c.paths.tide_csv.empty()) {
    auto t = ingest_tide_csv(c.paths.tide_csv, c.tide.datum_offset_m);
    return c.tide.correction_factor == 1.0 ? t : apply_correction(t, c.tide.correction_factor);
  }
  auto t = synthesize_tide(c.tide.constituents, c.tide.mean_level_m, c.tide.start_s, c.tide.duration_days * 86400.0,
                           c.tide.dt_s, c.tide.datum_offset_m);
  return c.tide.correction_factor == 1.0 ? t : apply_correction(t, c.tide.correction_factor);
}

}  // namespace trs
