#pragma once

// Synchronous PPO training over several environment copies, greedy yearly
// evaluation, and the policy checkpoint format.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "trs/control.hpp"
#include "trs/csv.hpp"
#include "trs/error.hpp"
#include "trs/rl/env.hpp"
#include "trs/rl/network.hpp"
#include "trs/rl/ppo.hpp"
#include "trs/simulator.hpp"

namespace trs::rl {

struct TrainConfig {
  int n_envs = 8;
  std::int64_t total_steps = 2'000'000;
  int rollout_steps = 248;  // about one tidal day at 6 min per env
  double gamma = 0.99;
  bool use_gae = false;
  double gae_lambda = 0.95;
  PpoHyper ppo;
  double beta0 = 0.038;  // decays linearly to 0 over the run
  bool anneal_lr = false;  // learning rate decays linearly to 0 as well
  std::vector<int> hidden{128, 128};
  std::uint64_t seed = 1;
  int jobs = 1;
};

struct CurvePoint {
  int update = 0;
  double mean_episode_energy_j = 0.0;
  double entropy = 0.0;
  double beta = 0.0;
};

struct TrainResult {
  Policy policy;
  std::vector<CurvePoint> curve;
};

using EnvFactory = std::function<Env(int index)>;

inline constexpr std::uint64_t kEnvStreamStride = 0x9E3779B97F4A7C15ull;

namespace detail {

struct Worker {
  Env env;
  std::mt19937_64 rng;
  Observation obs;
  std::uint64_t episode = 0;
  std::uint64_t stream = 0;

  // Rollout buffers.
  std::vector<Vec> feats;
  std::vector<std::vector<int>> acts;
  std::vector<double> logp, values, rewards, energy;
  std::vector<bool> dones;
  double bootstrap = 0.0;

  void begin_episode() { obs = env.reset(stream + 0x632BE59BD9B4E019ull * ++episode); }

  void collect(const Policy& p, int steps) {
    feats.clear();
    acts.clear();
    logp.clear();
    values.clear();
    rewards.clear();
    energy.clear();
    dones.clear();
    for (int t = 0; t < steps; ++t) {
      const Vec f = obs.features(p.norm);
      const auto a = act(p, f, rng);
      const auto out = env.step({a.action[0], a.action[1], a.action[2]});
      feats.push_back(f);
      acts.push_back(a.action);
      logp.push_back(a.log_prob);
      values.push_back(a.value);
      rewards.push_back(out.reward);
      energy.push_back(out.energy_j);
      dones.push_back(out.done);
      if (out.done)
        begin_episode();
      else
        obs = out.obs;
    }
    bootstrap = dones.back() ? 0.0 : p.critic.forward(obs.features(p.norm))(0, 0);
  }
};

inline void run_parallel(int jobs, int n, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&, j] {
      for (int i = j; i < n; i += jobs) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

inline double beta_at(double beta0, int update, int n_updates) {
  return n_updates <= 1 ? beta0 * (update == 0 ? 1.0 : 0.0)
                        : beta0 * (1.0 - static_cast<double>(update) / static_cast<double>(n_updates - 1));
}

inline int planned_updates(const TrainConfig& c) {
  const std::int64_t per = static_cast<std::int64_t>(c.n_envs) * c.rollout_steps;
  return static_cast<int>(std::max<std::int64_t>(1, c.total_steps / per));
}

using UpdateCallback = std::function<void(const CurvePoint&, const LossInfo&)>;

/// Collects `rollout_steps` transitions from every env copy, then applies one
/// PPO update; repeats until the step budget is spent. Each copy has its own
/// random stream derived from the seed, so the result does not depend on
/// `jobs`.
inline TrainResult train(const EnvFactory& make, const TrainConfig& cfg, const UpdateCallback& on_update = {}) {
  if (cfg.n_envs < 1) throw InvalidInput("train: need at least one environment");
  if (cfg.rollout_steps < 1) throw InvalidInput("train: rollout needs at least one step");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw InvalidInput("train: discount must lie in (0, 1)");

  std::vector<detail::Worker> workers;
  workers.reserve(static_cast<std::size_t>(cfg.n_envs));
  for (int i = 0; i < cfg.n_envs; ++i) {
    const std::uint64_t stream = cfg.seed + kEnvStreamStride * static_cast<std::uint64_t>(i + 1);
    workers.push_back({make(i), std::mt19937_64(stream), {}, 0, stream, {}, {}, {}, {}, {}, {}, {}, 0.0});
    workers.back().begin_episode();
  }
  const Env& env0 = workers.front().env;

  TrainResult result;
  PolicyShape shape;
  shape.hidden = cfg.hidden;
  result.policy = Policy(shape, cfg.seed);
  result.policy.norm = env0.norm();
  result.policy.reward_scale_j = env0.reward_scale_j();
  Optimizer opt(result.policy);
  std::mt19937_64 update_rng(cfg.seed ^ 0xD1B54A32D192ED03ull);

  const int n_updates = planned_updates(cfg);
  const double episode_steps = static_cast<double>(env0.config().episode_steps);
  for (int u = 0; u < n_updates; ++u) {
    detail::run_parallel(cfg.jobs, cfg.n_envs,
                         [&](int i) { workers[static_cast<std::size_t>(i)].collect(result.policy, cfg.rollout_steps); });

    const Eigen::Index B = static_cast<Eigen::Index>(cfg.n_envs) * cfg.rollout_steps;
    Batch batch;
    batch.obs.resize(Observation::kFeatures, B);
    batch.act.resize(3, B);
    batch.log_prob_old.resize(B);
    batch.returns.resize(B);
    std::vector<double> adv;
    adv.reserve(static_cast<std::size_t>(B));
    double energy_sum = 0.0;
    Eigen::Index col = 0;
    for (auto& w : workers) {
      const auto& ds = w.dones;
      const auto ret = compute_returns(w.rewards, cfg.gamma, ds, w.bootstrap);
      std::vector<double> a;
      if (cfg.use_gae) {
        a = compute_gae(w.rewards, w.values, cfg.gamma, cfg.gae_lambda, ds, w.bootstrap);
      } else {
        a.resize(ret.size());
        for (std::size_t t = 0; t < ret.size(); ++t) a[t] = ret[t] - w.values[t];
      }
      for (std::size_t t = 0; t < ret.size(); ++t, ++col) {
        batch.obs.col(col) = w.feats[t];
        for (int k = 0; k < 3; ++k) batch.act(k, col) = w.acts[t][static_cast<std::size_t>(k)];
        batch.log_prob_old[col] = w.logp[t];
        // With GAE the critic regresses on advantage + value.
        batch.returns[col] = cfg.use_gae ? a[t] + w.values[t] : ret[t];
        adv.push_back(a[t]);
        energy_sum += w.energy[t];
      }
    }
    normalize_in_place(adv);
    batch.advantages = Eigen::Map<const Vec>(adv.data(), B);

    PpoHyper h = cfg.ppo;
    h.beta = beta_at(cfg.beta0, u, n_updates);
    if (cfg.anneal_lr) h.lr = cfg.ppo.lr * (1.0 - static_cast<double>(u) / static_cast<double>(n_updates));
    const auto info = ppo_update(result.policy, opt, batch, h, update_rng);
    CurvePoint pt{u, energy_sum / static_cast<double>(B) * episode_steps, info.entropy, h.beta};
    result.curve.push_back(pt);
    if (on_update) on_update(pt, info);
  }
  return result;
}

inline void write_learning_curve(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
  csv::Writer w(path, {"update_idx", "mean_episode_energy_j", "entropy", "beta"});
  for (const auto& p : curve) w.row(p.update, p.mean_episode_energy_j, p.entropy, p.beta);
}

// ---- evaluation ------------------------------------------------------------

struct EvaluationReport {
  EnergySummary energy;
  double reward_energy_j = 0.0;  // sum of per-step credited energy
  std::size_t steps = 0;
  std::array<double, 5> turbine_occupancy{};  // fraction of steps per turbine mode
  double sluice_open_fraction = 0.0;
  std::size_t coerced_actions = 0;
  std::size_t positive_head_pumping_steps = 0;
  std::int64_t guard_band_clamps = 0;
  Trace trace;
};

using ActionSource = std::function<Action(const Env&, const Observation&)>;

/// One episode from the first sample of the env's tide, driven by `source`.
inline EvaluationReport rollout(Env env, const ActionSource& source) {
  EvaluationReport rep;
  auto obs = env.reset(0);
  rep.trace.dt_s = env.config().dt_s;
  for (;;) {
    const auto out = env.step(source(env, obs));
    rep.trace.records.push_back(out.record);
    rep.reward_energy_j += out.energy_j;
    rep.coerced_actions += out.coerced ? 1 : 0;
    rep.turbine_occupancy[static_cast<std::size_t>(out.record.turbine_mode)] += 1.0;
    rep.sluice_open_fraction += out.record.sluice_mode == SluiceMode::Online ? 1.0 : 0.0;
    rep.positive_head_pumping_steps += pumping_with_positive_head(out.record) ? 1 : 0;
    obs = out.obs;
    if (out.done) break;
  }
  rep.steps = rep.trace.records.size();
  for (auto& o : rep.turbine_occupancy) o /= static_cast<double>(rep.steps);
  rep.sluice_open_fraction /= static_cast<double>(rep.steps);
  rep.energy = energy_summary(rep.trace);
  rep.guard_band_clamps = env.state().diagnostics.guard_band_clamps;
  return rep;
}

/// Greedy policy over the whole tide held by `env` (which must not start at random).
inline EvaluationReport evaluate(const Policy& p, Env env) {
  std::mt19937_64 unused(0);
  return rollout(std::move(env), [&](const Env&, const Observation& o) {
    const auto a = act(p, o.features(p.norm), unused, true);
    return Action{a.action[0], a.action[1], a.action[2]};
  });
}

/// A heuristic controller driven through the same env path.
inline EvaluationReport evaluate_controller(Controller& c, Env env) {
  c.reset();
  return rollout(std::move(env), [&](const Env& e, const Observation&) { return to_action(c.decide(e.view())); });
}

/// Uniformly random branch choices.
inline EvaluationReport evaluate_random(Env env, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return rollout(std::move(env), [&](const Env&, const Observation&) {
    return Action{static_cast<int>(rng() % Action::kSluiceOptions), static_cast<int>(rng() % Action::kTurbineOptions),
                  static_cast<int>(rng() % Action::kPumpOptions)};
  });
}

// ---- checkpoint ------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json policy_to_json(const Policy& p) {
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"format", "trs-policy"},
          {"version", kCheckpointVersion},
          {"obs_dim", p.shape.obs_dim},
          {"hidden", p.shape.hidden},
          {"branches", p.shape.branches},
          {"level_norm", {{"lo", p.norm.lo}, {"hi", p.norm.hi}}},
          {"reward_scale_j", p.reward_scale_j},
          {"actor", vec(p.actor.params())},
          {"critic", vec(p.critic.params())}};
}

inline Policy policy_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "trs-policy") throw FormatError("checkpoint: not a policy file");
  if (j.value("version", 0) != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(j.value("version", 0)));
  PolicyShape s;
  s.obs_dim = j.at("obs_dim").get<int>();
  s.hidden = j.at("hidden").get<std::vector<int>>();
  s.branches = j.at("branches").get<std::vector<int>>();
  Policy p(s, 0);
  auto load = [](Mlp& m, const std::vector<double>& v, const char* name) {
    if (v.size() != static_cast<std::size_t>(m.params().size()))
      throw FormatError(std::string("checkpoint: ") + name + " has the wrong number of parameters");
    m.params() = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  };
  load(p.actor, j.at("actor").get<std::vector<double>>(), "actor");
  load(p.critic, j.at("critic").get<std::vector<double>>(), "critic");
  p.norm = {j.at("level_norm").at("lo").get<double>(), j.at("level_norm").at("hi").get<double>()};
  p.reward_scale_j = j.at("reward_scale_j").get<double>();
  return p;
}

inline void save_policy(const Policy& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << policy_to_json(p).dump(1) << '\n';
}

inline Policy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint " + path.string() + ": " + e.what());
  }
  return policy_from_json(j);
}

}  // namespace trs::rl
