#pragma once

// Fully connected tanh networks with hand-written reverse mode, and the
// branching actor-critic built from two of them.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "trs/error.hpp"

namespace trs::rl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Parameters live in one flat vector: for each layer the weight matrix
/// (column major, out x in) followed by its bias.
class Mlp {
 public:
  struct Cache {
    std::vector<Mat> inputs;  // input of every layer, post-activation
  };

  Mlp() = default;
  Mlp(int in, std::vector<int> hidden, int out) : sizes_{in} {
    if (in <= 0 || out <= 0) throw InvalidInput("mlp: layer sizes must be positive");
    for (int h : hidden) {
      if (h <= 0) throw InvalidInput("mlp: hidden sizes must be positive");
      sizes_.push_back(h);
    }
    sizes_.push_back(out);
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) n += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
    theta_ = Vec::Zero(static_cast<Eigen::Index>(n));
  }

  const std::vector<int>& sizes() const noexcept { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  std::size_t layers() const noexcept { return sizes_.size() - 1; }
  Vec& params() noexcept { return theta_; }
  const Vec& params() const noexcept { return theta_; }

  /// Gaussian init scaled by 1/sqrt(fan_in); the last layer gets `out_gain`.
  void init(std::mt19937_64& rng, double out_gain) {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers(); ++l) {
      const int in = sizes_[l], out = sizes_[l + 1];
      const double gain = (l + 1 == layers() ? out_gain : 1.0) / std::sqrt(static_cast<double>(in));
      for (int i = 0; i < out * in; ++i) theta_[static_cast<Eigen::Index>(off + i)] = gain * standard_normal(rng);
      off += static_cast<std::size_t>(out) * in;
      for (int i = 0; i < out; ++i) theta_[static_cast<Eigen::Index>(off + i)] = 0.0;
      off += static_cast<std::size_t>(out);
    }
  }

  /// X is in x B; returns out x B.
  Mat forward(const Mat& X, Cache* cache = nullptr) const {
    if (X.rows() != input_dim()) throw InvalidInput("mlp: input has the wrong dimension");
    if (cache) cache->inputs.clear();
    Mat a = X;
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers(); ++l) {
      const int in = sizes_[l], out = sizes_[l + 1];
      Eigen::Map<const Mat> W(theta_.data() + off, out, in);
      Eigen::Map<const Vec> b(theta_.data() + off + static_cast<std::size_t>(out) * in, out);
      off += static_cast<std::size_t>(out) * (in + 1);
      if (cache) cache->inputs.push_back(a);
      Mat z = W * a;
      z.colwise() += b;
      a = l + 1 == layers() ? std::move(z) : Mat(z.array().tanh());
    }
    return a;
  }

  /// Gradient of sum(dOut .* output) with respect to the parameters.
  Vec backward(const Cache& cache, const Mat& dOut) const {
    Vec grad = Vec::Zero(theta_.size());
    std::vector<std::size_t> offs(layers());
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers(); ++l) {
      offs[l] = off;
      off += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
    }
    Mat delta = dOut;
    for (std::size_t l = layers(); l-- > 0;) {
      const int in = sizes_[l], out = sizes_[l + 1];
      const Mat& a = cache.inputs[l];
      Eigen::Map<Mat> gW(grad.data() + offs[l], out, in);
      Eigen::Map<Vec> gb(grad.data() + offs[l] + static_cast<std::size_t>(out) * in, out);
      gW.noalias() = delta * a.transpose();
      gb = delta.rowwise().sum();
      if (l > 0) {
        Eigen::Map<const Mat> W(theta_.data() + offs[l], out, in);
        Mat back = W.transpose() * delta;
        delta = back.array() * (1.0 - a.array().square());
      }
    }
    return grad;
  }

 private:
  std::vector<int> sizes_;
  Vec theta_;
};

/// Observation level map z -> clamp((z - lo) / (hi - lo), 0, 1).
struct LevelNorm {
  double lo = 0.0;
  double hi = 1.0;

  double operator()(double z) const {
    const double v = (z - lo) / (hi - lo);
    return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
};

struct PolicyShape {
  int obs_dim = 18;
  std::vector<int> hidden{128, 128};
  std::vector<int> branches{2, 5, 17};

  int logits() const {
    int n = 0;
    for (int b : branches) n += b;
    return n;
  }
};

/// Actor with one softmax head per action branch, plus a separate critic.
/// Carries the observation and reward scaling it was trained with.
struct Policy {
  PolicyShape shape;
  Mlp actor;
  Mlp critic;
  LevelNorm norm;
  double reward_scale_j = 1.0;

  Policy() = default;
  Policy(PolicyShape s, std::uint64_t seed) : shape(std::move(s)) {
    for (int b : shape.branches)
      if (b < 1) throw InvalidInput("policy: every branch needs at least one option");
    actor = Mlp(shape.obs_dim, shape.hidden, shape.logits());
    critic = Mlp(shape.obs_dim, shape.hidden, 1);
    std::mt19937_64 rng(seed);
    actor.init(rng, 0.01);
    critic.init(rng, 1.0);
  }
};

/// Row-wise log-softmax of the logits slice [off, off + n) for every column.
inline Mat log_softmax_rows(const Mat& logits, int off, int n) {
  Mat out(n, logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const auto seg = logits.col(c).segment(off, n);
    const double m = seg.maxCoeff();
    const double lse = m + std::log((seg.array() - m).exp().sum());
    out.col(c) = seg.array() - lse;
  }
  return out;
}

}  // namespace trs::rl
