#pragma once

// Proximal policy optimisation for a multi-branch discrete actor: sampling,
// return and advantage estimation, the clipped loss with its gradient, and Adam.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "trs/error.hpp"
#include "trs/rl/network.hpp"

namespace trs::rl {

struct ActResult {
  std::vector<int> action;  // one index per branch
  double log_prob = 0.0;    // sum over branches
  double value = 0.0;
};

/// Branch probabilities for a single observation.
inline std::vector<Vec> branch_probabilities(const Policy& p, const Vec& obs) {
  const Mat logits = p.actor.forward(obs);
  std::vector<Vec> out;
  int off = 0;
  for (int n : p.shape.branches) {
    out.push_back(log_softmax_rows(logits, off, n).col(0).array().exp());
    off += n;
  }
  return out;
}

/// Samples every branch independently (or takes each argmax when greedy).
inline ActResult act(const Policy& p, const Vec& obs, std::mt19937_64& rng, bool greedy = false) {
  const Mat logits = p.actor.forward(obs);
  ActResult r;
  int off = 0;
  for (int n : p.shape.branches) {
    const Vec lp = log_softmax_rows(logits, off, n).col(0);
    int pick = 0;
    if (greedy) {
      lp.maxCoeff(&pick);
    } else {
      const double u = uniform01(rng);
      double cum = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        cum += std::exp(lp[i]);
        if (u < cum) {
          pick = i;
          break;
        }
      }
    }
    r.action.push_back(pick);
    r.log_prob += lp[pick];
    off += n;
  }
  r.value = p.critic.forward(obs)(0, 0);
  return r;
}

/// G_t = r_t + gamma * G_{t+1}, restarting after every terminal step and
/// seeded with `bootstrap` past the last step. rewards[t] is the reward
/// received for the transition out of step t.
inline std::vector<double> compute_returns(std::span<const double> rewards, double gamma,
                                           const std::vector<bool>& dones = {}, double bootstrap = 0.0) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("discount must lie in [0, 1)");
  if (!dones.empty() && dones.size() != rewards.size()) throw InvalidInput("returns: dones length mismatch");
  std::vector<double> g(rewards.size());
  double acc = bootstrap;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    if (!dones.empty() && dones[t]) acc = 0.0;
    acc = rewards[t] + gamma * acc;
    g[t] = acc;
  }
  return g;
}

/// Generalised advantage estimate; values[t] is the critic at step t and
/// `bootstrap` the critic after the last step.
inline std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                       double gamma, double lambda, const std::vector<bool>& dones = {},
                                       double bootstrap = 0.0) {
  if (values.size() != rewards.size()) throw InvalidInput("gae: values length mismatch");
  std::vector<double> adv(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    const bool end = !dones.empty() && dones[t];
    const double next_v = end ? 0.0 : (t + 1 < rewards.size() ? values[t + 1] : bootstrap);
    if (end) acc = 0.0;
    const double delta = rewards[t] + gamma * next_v - values[t];
    acc = delta + gamma * lambda * acc;
    adv[t] = acc;
  }
  return adv;
}

/// Shift to zero mean and scale to unit standard deviation.
inline void normalize_in_place(std::vector<double>& v) {
  if (v.size() < 2) return;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(v.size()));
  for (double& x : v) x = (x - m) / (sd + 1e-8);
}

struct Batch {
  Mat obs;              // obs_dim x B
  Eigen::MatrixXi act;  // branches x B
  Vec log_prob_old;
  Vec returns;
  Vec advantages;

  Eigen::Index size() const noexcept { return obs.cols(); }

  Batch subset(std::span<const Eigen::Index> idx) const {
    Batch b;
    const auto n = static_cast<Eigen::Index>(idx.size());
    b.obs.resize(obs.rows(), n);
    b.act.resize(act.rows(), n);
    b.log_prob_old.resize(n);
    b.returns.resize(n);
    b.advantages.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto i = idx[static_cast<std::size_t>(j)];
      b.obs.col(j) = obs.col(i);
      b.act.col(j) = act.col(i);
      b.log_prob_old[j] = log_prob_old[i];
      b.returns[j] = returns[i];
      b.advantages[j] = advantages[i];
    }
    return b;
  }
};

struct PpoHyper {
  double clip = 0.2;
  double value_coef = 0.5;
  double beta = 0.038;
  double lr = 1e-4;
  int epochs = 3;
  int minibatch = 256;
  double max_grad_norm = 0.5;  // per network; 0 disables clipping
};

struct LossInfo {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;  // mean joint entropy (sum over branches)
  double clip_fraction = 0.0;
};

struct Gradients {
  Vec actor;
  Vec critic;
};

/// Clipped surrogate + value_coef * MSE - beta * entropy, averaged over the
/// batch, with its gradient when `grad` is non-null.
inline LossInfo ppo_loss(const Policy& p, const Batch& b, const PpoHyper& h, Gradients* grad = nullptr) {
  const Eigen::Index B = b.size();
  if (B == 0) throw InvalidInput("ppo_loss: empty batch");
  const double inv_b = 1.0 / static_cast<double>(B);
  Mlp::Cache ac, cc;
  const Mat logits = p.actor.forward(b.obs, grad ? &ac : nullptr);
  const Mat values = p.critic.forward(b.obs, grad ? &cc : nullptr);

  // Per-branch log-probabilities, reused for the loss and its gradient.
  std::vector<Mat> logp;
  int off = 0;
  for (int n : p.shape.branches) {
    logp.push_back(log_softmax_rows(logits, off, n));
    off += n;
  }

  LossInfo info;
  Vec dlogp(B);
  for (Eigen::Index j = 0; j < B; ++j) {
    double lp = 0.0;
    for (std::size_t k = 0; k < logp.size(); ++k) lp += logp[k](b.act(static_cast<Eigen::Index>(k), j), j);
    const double ratio = std::exp(lp - b.log_prob_old[j]);
    const double a = b.advantages[j];
    const double unclipped = ratio * a;
    const double clipped = std::clamp(ratio, 1.0 - h.clip, 1.0 + h.clip) * a;
    if (unclipped <= clipped) {
      info.policy -= unclipped * inv_b;
      dlogp[j] = -unclipped * inv_b;
    } else {
      info.policy -= clipped * inv_b;
      dlogp[j] = 0.0;
      info.clip_fraction += inv_b;
    }
    const double e = values(0, j) - b.returns[j];
    info.value += e * e * inv_b;
  }

  Mat dlogits = Mat::Zero(logits.rows(), B);
  off = 0;
  for (std::size_t k = 0; k < logp.size(); ++k) {
    const int n = p.shape.branches[k];
    const Mat& L = logp[k];
    const Mat P = L.array().exp();
    for (Eigen::Index j = 0; j < B; ++j) {
      const double H = -(P.col(j).array() * L.col(j).array()).sum();
      info.entropy += H * inv_b;
      if (!grad) continue;
      // d logp(a)/dz_i = 1[i=a] - p_i ; dH/dz_i = -p_i (log p_i + H)
      for (int i = 0; i < n; ++i) {
        const double pi = P(i, j);
        double g = dlogp[j] * ((i == b.act(static_cast<Eigen::Index>(k), j) ? 1.0 : 0.0) - pi);
        g += h.beta * inv_b * pi * (L(i, j) + H);
        dlogits(off + i, j) = g;
      }
    }
    off += n;
  }
  info.total = info.policy + h.value_coef * info.value - h.beta * info.entropy;

  if (grad) {
    grad->actor = p.actor.backward(ac, dlogits);
    const Mat dv = (2.0 * h.value_coef * inv_b) * (values.row(0).transpose() - b.returns).transpose();
    grad->critic = p.critic.backward(cc, dv);
  }
  return info;
}

class Adam {
 public:
  Adam() = default;
  explicit Adam(Eigen::Index n) : m_(Vec::Zero(n)), v_(Vec::Zero(n)) {}

  void step(Vec& theta, const Vec& g, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t_;
    m_ = b1 * m_ + (1 - b1) * g;
    v_ = b2 * v_ + (1 - b2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(b1, t_), c2 = 1.0 - std::pow(b2, t_);
    theta.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps);
  }

  const Vec& m() const noexcept { return m_; }
  const Vec& v() const noexcept { return v_; }
  long t() const noexcept { return t_; }
  void restore(Vec m, Vec v, long t) {
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = t;
  }

 private:
  Vec m_, v_;
  long t_ = 0;
};

struct Optimizer {
  Adam actor;
  Adam critic;

  explicit Optimizer(const Policy& p) : actor(p.actor.params().size()), critic(p.critic.params().size()) {}
};

/// Epochs of shuffled minibatch Adam steps on one batch. Returns the loss
/// diagnostics averaged over the minibatches.
inline LossInfo ppo_update(Policy& p, Optimizer& opt, const Batch& batch, const PpoHyper& h, std::mt19937_64& rng) {
  const Eigen::Index B = batch.size();
  if (B == 0) throw InvalidInput("ppo_update: empty batch");
  const Eigen::Index mb = h.minibatch > 0 ? std::min<Eigen::Index>(h.minibatch, B) : B;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(B));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  LossInfo mean;
  int count = 0;
  for (int e = 0; e < h.epochs; ++e) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    for (Eigen::Index start = 0; start < B; start += mb) {
      const auto n = std::min(mb, B - start);
      const Batch sub = batch.subset(std::span<const Eigen::Index>(idx).subspan(static_cast<std::size_t>(start),
                                                                                static_cast<std::size_t>(n)));
      Gradients g;
      const auto info = ppo_loss(p, sub, h, &g);
      if (!std::isfinite(info.total) || !g.actor.allFinite() || !g.critic.allFinite())
        throw NumericalError("ppo_update: non-finite loss or gradient (policy " + std::to_string(info.policy) +
                             ", value " + std::to_string(info.value) + ", entropy " + std::to_string(info.entropy) +
                             ")");
      if (h.max_grad_norm > 0.0) {
        for (Vec* v : {&g.actor, &g.critic})
          if (const double norm = v->norm(); norm > h.max_grad_norm) *v *= h.max_grad_norm / norm;
      }
      opt.actor.step(p.actor.params(), g.actor, h.lr);
      opt.critic.step(p.critic.params(), g.critic, h.lr);
      mean.total += info.total;
      mean.policy += info.policy;
      mean.value += info.value;
      mean.entropy += info.entropy;
      mean.clip_fraction += info.clip_fraction;
      ++count;
    }
  }
  mean.total /= count;
  mean.policy /= count;
  mean.value /= count;
  mean.entropy /= count;
  mean.clip_fraction /= count;
  if (!p.actor.params().allFinite() || !p.critic.params().allFinite())
    throw NumericalError("ppo_update: parameters became non-finite");
  return mean;
}

}  // namespace trs::rl
