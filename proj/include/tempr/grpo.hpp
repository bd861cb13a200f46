#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tempr {

struct GrpoConfig {
  std::size_t group_size = 16;
  double clip_eps = 0.2;
  double kl_beta = 0.04;
  double learning_rate = 0.02;
  double std_floor = 1e-6;
  // Gradient steps taken on each sampled batch. Values above 1 move the
  // policy away from the sampling policy, which exercises the clip.
  std::size_t epochs_per_batch = 1;

  void validate() const {
    if (group_size < 2) throw std::invalid_argument("group_size must be >= 2");
    if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw std::invalid_argument("clip_eps must be in (0, 1)");
    if (!(kl_beta >= 0.0) || !std::isfinite(kl_beta)) throw std::invalid_argument("kl_beta must be >= 0");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw std::invalid_argument("learning_rate must be >= 0");
    }
    if (!(std_floor > 0.0)) throw std::invalid_argument("std_floor must be > 0");
    if (epochs_per_batch < 1) throw std::invalid_argument("epochs_per_batch must be >= 1");
  }
};

// Group-relative advantages: (r - mean) / max(popstd, std_floor).
// A constant group yields exact zeros.
inline std::vector<double> group_advantages(std::span<const double> rewards, double std_floor = 1e-6) {
  if (rewards.size() < 2) throw std::invalid_argument("group_advantages: need at least 2 rewards");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> adv(rewards.size(), 0.0);
  const bool constant = std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; });
  if (constant) return adv;
  const double denom = std::max(sd, std_floor);
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / denom;
  return adv;
}

struct RolloutGroup {
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::vector<double> likelihood_ratios;  // pi_theta(o_i) / pi_old(o_i)

  static RolloutGroup from_rewards(std::vector<double> rewards, double std_floor = 1e-6) {
    RolloutGroup g;
    g.advantages = group_advantages(rewards, std_floor);
    g.likelihood_ratios.assign(rewards.size(), 1.0);
    g.rewards = std::move(rewards);
    return g;
  }
};

inline double clip_ratio(double ratio, double eps) { return std::clamp(ratio, 1.0 - eps, 1.0 + eps); }

// Per-response surrogate min(r A, clip(r) A).
inline double clipped_term(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, clip_ratio(ratio, eps) * advantage);
}

// True when the clipped branch is active, i.e. the term has zero gradient
// with respect to the ratio.
inline bool clip_active(double ratio, double advantage, double eps) {
  if (advantage > 0.0) return ratio > 1.0 + eps;
  if (advantage < 0.0) return ratio < 1.0 - eps;
  return false;
}

// Sum over the group of the clipped surrogate, minus beta * kl. This is the
// quantity ascended during training (summed, not averaged, over the group).
inline double clipped_objective(const RolloutGroup& group, const GrpoConfig& cfg, double kl) {
  if (group.advantages.size() != group.likelihood_ratios.size()) {
    throw std::invalid_argument("clipped_objective: advantages/ratios size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < group.advantages.size(); ++i) {
    sum += clipped_term(group.likelihood_ratios[i], group.advantages[i], cfg.clip_eps);
  }
  return sum - cfg.kl_beta * kl;
}

// Exact KL(p || q) of two categorical distributions given as log-probs.
// Terms with p = 0 contribute 0.
inline double kl_divergence(std::span<const double> logp, std::span<const double> logq) {
  if (logp.size() != logq.size()) throw std::invalid_argument("kl_divergence: support mismatch");
  double kl = 0.0;
  for (std::size_t k = 0; k < logp.size(); ++k) {
    const double p = std::exp(logp[k]);
    if (p == 0.0) continue;
    kl += p * (logp[k] - logq[k]);
  }
  return std::max(kl, 0.0);
}

// Numerically stable log-softmax.
inline std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] - lse;
  return out;
}

}  // namespace tempr
