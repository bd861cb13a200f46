#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tempr/grpo.hpp"
#include "tempr/interval.hpp"
#include "tempr/output_parser.hpp"
#include "tempr/reward.hpp"
#include "tempr/task.hpp"

namespace tempr {

// Every [i*d/n, j*d/n] with 0 <= i < j <= n.
inline std::vector<Interval> candidate_grid(double duration, std::size_t resolution) {
  if (!(duration > 0.0) || resolution < 1) throw std::invalid_argument("candidate_grid: bad duration/resolution");
  const double n = static_cast<double>(resolution);
  std::vector<Interval> out;
  for (std::size_t i = 0; i < resolution; ++i)
    for (std::size_t j = i + 1; j <= resolution; ++j)
      out.push_back(Interval{static_cast<double>(i) * duration / n, static_cast<double>(j) * duration / n});
  return out;
}

// One sampled response in index form.
struct ToyAction {
  std::size_t count = 1;            // number of intervals emitted
  std::vector<std::size_t> slots;   // candidate index per emitted interval
  std::size_t option = 0;           // GVQA answer index

  friend bool operator==(const ToyAction&, const ToyAction&) = default;
};

// Categorical policy for one prompt. Parameters are logits stored flat:
//   [count head: max_count entries, only when max_count > 1]
//   [slot s logits over candidates, for s in 0..max_count)
//   [answer head over options, GVQA only]
// Probability of an action is the product of the count, the used slots and
// the answer head.
class PromptPolicy {
 public:
  PromptPolicy() = default;
  PromptPolicy(TaskKind task, std::vector<Interval> candidates, std::size_t max_count,
               std::vector<std::string> options = {})
      : task_(task), candidates_(std::move(candidates)), options_(std::move(options)) {
    if (candidates_.empty()) throw std::invalid_argument("PromptPolicy: no candidates");
    max_count_ = task == TaskKind::TG ? 1 : max_count;
    if (max_count_ < 1) throw std::invalid_argument("PromptPolicy: max_count must be >= 1");
    if (task == TaskKind::GVQA && options_.empty()) throw std::invalid_argument("PromptPolicy: GVQA needs options");
    if (task != TaskKind::GVQA) options_.clear();
    params_.assign(count_size() + max_count_ * candidates_.size() + options_.size(), 0.0);
  }

  TaskKind task() const { return task_; }
  const std::vector<Interval>& candidates() const { return candidates_; }
  const std::vector<std::string>& options() const { return options_; }
  std::size_t max_count() const { return max_count_; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  std::span<const double> count_logits() const { return {params_.data(), count_size()}; }
  std::span<const double> slot_logits(std::size_t s) const {
    return {params_.data() + slot_offset(s), candidates_.size()};
  }
  std::span<const double> answer_logits() const { return {params_.data() + answer_offset(), options_.size()}; }

  std::size_t count_size() const { return max_count_ > 1 ? max_count_ : 0; }
  std::size_t slot_offset(std::size_t s) const { return count_size() + s * candidates_.size(); }
  std::size_t answer_offset() const { return count_size() + max_count_ * candidates_.size(); }

  double log_prob(const ToyAction& a) const {
    double lp = 0.0;
    if (count_size() > 0) lp += log_softmax(count_logits())[a.count - 1];
    for (std::size_t s = 0; s < a.count; ++s) lp += log_softmax(slot_logits(s))[a.slots[s]];
    if (!options_.empty()) lp += log_softmax(answer_logits())[a.option];
    return lp;
  }

  // grad += weight * d log pi(a) / d params
  void accumulate_log_prob_grad(const ToyAction& a, double weight, std::span<double> grad) const {
    auto head = [&](std::span<const double> logits, std::size_t offset, std::size_t chosen) {
      const auto lp = log_softmax(logits);
      for (std::size_t k = 0; k < lp.size(); ++k) {
        grad[offset + k] += weight * ((k == chosen ? 1.0 : 0.0) - std::exp(lp[k]));
      }
    };
    if (count_size() > 0) head(count_logits(), 0, a.count - 1);
    for (std::size_t s = 0; s < a.count; ++s) head(slot_logits(s), slot_offset(s), a.slots[s]);
    if (!options_.empty()) head(answer_logits(), answer_offset(), a.option);
  }

  // Exact KL(this || ref), summing over all heads with slot s weighted by
  // P(count > s).
  double kl_to(const PromptPolicy& ref) const {
    check_same_shape(ref);
    const auto w = slot_weights();
    double kl = 0.0;
    if (count_size() > 0) kl += head_kl(count_logits(), ref.count_logits());
    for (std::size_t s = 0; s < max_count_; ++s) kl += w[s] * head_kl(slot_logits(s), ref.slot_logits(s));
    if (!options_.empty()) kl += head_kl(answer_logits(), ref.answer_logits());
    return kl;
  }

  // grad += weight * d KL(this || ref) / d params
  void accumulate_kl_grad(const PromptPolicy& ref, double weight, std::span<double> grad) const {
    check_same_shape(ref);
    const auto w = slot_weights();
    std::vector<double> slot_kl(max_count_);
    for (std::size_t s = 0; s < max_count_; ++s) {
      slot_kl[s] = head_kl(slot_logits(s), ref.slot_logits(s));
      head_kl_grad(slot_logits(s), ref.slot_logits(s), weight * w[s], grad.subspan(slot_offset(s)));
    }
    if (count_size() > 0) {
      head_kl_grad(count_logits(), ref.count_logits(), weight, grad);
      // d w_s / d z_j = p_j ([j >= s] - w_s)
      const auto lp = log_softmax(count_logits());
      for (std::size_t j = 0; j < max_count_; ++j) {
        const double pj = std::exp(lp[j]);
        double g = 0.0;
        for (std::size_t s = 0; s < max_count_; ++s) g += slot_kl[s] * ((j >= s ? 1.0 : 0.0) - w[s]);
        grad[j] += weight * pj * g;
      }
    }
    if (!options_.empty()) {
      head_kl_grad(answer_logits(), ref.answer_logits(), weight, grad.subspan(answer_offset()));
    }
  }

  template <class Rng>
  ToyAction sample(Rng& rng) const {
    ToyAction a;
    a.count = count_size() > 0 ? sample_head(count_logits(), rng) + 1 : 1;
    for (std::size_t s = 0; s < a.count; ++s) a.slots.push_back(sample_head(slot_logits(s), rng));
    if (!options_.empty()) a.option = sample_head(answer_logits(), rng);
    return a;
  }

  // Most likely choice of every head.
  ToyAction mode() const {
    ToyAction a;
    a.count = count_size() > 0 ? argmax(count_logits()) + 1 : 1;
    for (std::size_t s = 0; s < a.count; ++s) a.slots.push_back(argmax(slot_logits(s)));
    if (!options_.empty()) a.option = argmax(answer_logits());
    return a;
  }

  ParsedOutput decode(const ToyAction& a) const {
    ParsedOutput out;
    for (std::size_t s = 0; s < a.count; ++s) out.intervals.push_back(candidates_[a.slots[s]]);
    if (!options_.empty()) out.answer_text = options_[a.option];
    return out;
  }

  std::string render(const ToyAction& a) const { return serialize(decode(a), task_); }

 private:
  static std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
      if (v[k] > v[best]) best = k;
    return best;
  }

  // Inverse-CDF draw using 53 random bits, so streams are identical across
  // standard libraries.
  template <class Rng>
  static std::size_t sample_head(std::span<const double> logits, Rng& rng) {
    const auto lp = log_softmax(logits);
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double acc = 0.0;
    for (std::size_t k = 0; k < lp.size(); ++k) {
      acc += std::exp(lp[k]);
      if (u < acc) return k;
    }
    return lp.size() - 1;
  }

  static double head_kl(std::span<const double> z, std::span<const double> zref) {
    const auto lp = log_softmax(z);
    const auto lq = log_softmax(zref);
    return kl_divergence(lp, lq);
  }

  // d KL(softmax(z) || softmax(zref)) / dz_j = p_j (log p_j - log q_j - KL)
  static void head_kl_grad(std::span<const double> z, std::span<const double> zref, double weight,
                           std::span<double> grad) {
    const auto lp = log_softmax(z);
    const auto lq = log_softmax(zref);
    double kl = 0.0;
    for (std::size_t k = 0; k < lp.size(); ++k) kl += std::exp(lp[k]) * (lp[k] - lq[k]);
    for (std::size_t k = 0; k < lp.size(); ++k) grad[k] += weight * std::exp(lp[k]) * (lp[k] - lq[k] - kl);
  }

  // w_s = P(count > s)
  std::vector<double> slot_weights() const {
    std::vector<double> w(max_count_, 1.0);
    if (count_size() == 0) return w;
    const auto lp = log_softmax(count_logits());
    double tail = 0.0;
    for (std::size_t s = max_count_; s-- > 0;) {
      tail += std::exp(lp[s]);
      w[s] = tail;
    }
    return w;
  }

  void check_same_shape(const PromptPolicy& other) const {
    if (other.params_.size() != params_.size() || other.max_count_ != max_count_ ||
        other.candidates_.size() != candidates_.size() || other.options_.size() != options_.size()) {
      throw std::invalid_argument("PromptPolicy: shape mismatch");
    }
  }

  TaskKind task_ = TaskKind::TG;
  std::vector<Interval> candidates_;
  std::size_t max_count_ = 1;
  std::vector<std::string> options_;
  std::vector<double> params_;
};

// A policy for a batch of prompts; one independent PromptPolicy per prompt.
using ToyPolicy = std::vector<PromptPolicy>;

// Samples drawn for one prompt under the frozen old policy.
struct PromptBatch {
  std::vector<ToyAction> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
};

struct SurrogateValue {
  double objective = 0.0;
  std::size_t clipped = 0;
};

// Clipped surrogate minus beta * KL(policy || ref) for one prompt's group.
inline SurrogateValue surrogate_objective(const PromptPolicy& policy, const PromptPolicy& ref,
                                          const PromptBatch& batch, const GrpoConfig& cfg) {
  RolloutGroup group;
  group.advantages = batch.advantages;
  SurrogateValue v;
  for (std::size_t i = 0; i < batch.actions.size(); ++i) {
    const double ratio = std::exp(policy.log_prob(batch.actions[i]) - batch.old_log_probs[i]);
    group.likelihood_ratios.push_back(ratio);
    if (clip_active(ratio, batch.advantages[i], cfg.clip_eps)) ++v.clipped;
  }
  const double kl = cfg.kl_beta != 0.0 ? policy.kl_to(ref) : 0.0;
  v.objective = clipped_objective(group, cfg, kl);
  return v;
}

// Analytic gradient of surrogate_objective with respect to policy params.
// On the unclipped branch d(r A)/dz = A r dlogpi/dz; the clipped branch is flat.
inline std::vector<double> surrogate_gradient(const PromptPolicy& policy, const PromptPolicy& ref,
                                              const PromptBatch& batch, const GrpoConfig& cfg) {
  std::vector<double> grad(policy.params().size(), 0.0);
  for (std::size_t i = 0; i < batch.actions.size(); ++i) {
    const double adv = batch.advantages[i];
    if (adv == 0.0) continue;
    const double ratio = std::exp(policy.log_prob(batch.actions[i]) - batch.old_log_probs[i]);
    if (clip_active(ratio, adv, cfg.clip_eps)) continue;
    policy.accumulate_log_prob_grad(batch.actions[i], adv * ratio, grad);
  }
  if (cfg.kl_beta != 0.0) policy.accumulate_kl_grad(ref, -cfg.kl_beta, grad);
  return grad;
}

struct StepStats {
  double mean_reward = 0.0;
  double kl = 0.0;             // mean over prompts of KL(updated || ref)
  double clip_fraction = 0.0;  // share of samples on the clipped branch in the last epoch
};

struct StepOutcome {
  ToyPolicy policy;
  StepStats stats;
};

// Scores a rendered response for prompt `prompt_index`. Must return a finite
// value; throwing aborts the step.
using RewardFn = std::function<double(std::size_t prompt_index, std::string_view response)>;

// One GRPO update: sample a group per prompt from the current (old) policy,
// score, standardize within each group, then ascend the surrogate for
// cfg.epochs_per_batch gradient steps.
inline StepOutcome grpo_step(const ToyPolicy& policy, const ToyPolicy& reference, const RewardFn& reward_fn,
                             const GrpoConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (reference.size() != policy.size()) throw std::invalid_argument("grpo_step: reference size mismatch");
  std::mt19937_64 rng(seed);

  std::vector<PromptBatch> batches(policy.size());
  double reward_sum = 0.0;
  std::size_t reward_count = 0;
  for (std::size_t p = 0; p < policy.size(); ++p) {
    std::vector<double> rewards;
    for (std::size_t g = 0; g < cfg.group_size; ++g) {
      ToyAction a = policy[p].sample(rng);
      const double r = reward_fn(p, policy[p].render(a));
      if (!std::isfinite(r)) throw std::runtime_error("grpo_step: reward_fn returned a non-finite value");
      batches[p].old_log_probs.push_back(policy[p].log_prob(a));
      batches[p].actions.push_back(std::move(a));
      rewards.push_back(r);
      reward_sum += r;
      ++reward_count;
    }
    batches[p].advantages = group_advantages(rewards, cfg.std_floor);
  }

  StepOutcome out{policy, {}};
  std::size_t clipped = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
    clipped = 0;
    for (std::size_t p = 0; p < out.policy.size(); ++p) {
      clipped += surrogate_objective(out.policy[p], reference[p], batches[p], cfg).clipped;
      const auto grad = surrogate_gradient(out.policy[p], reference[p], batches[p], cfg);
      auto& params = out.policy[p].params();
      for (std::size_t k = 0; k < params.size(); ++k) params[k] += cfg.learning_rate * grad[k];
    }
  }

  out.stats.mean_reward = reward_count ? reward_sum / static_cast<double>(reward_count) : 0.0;
  out.stats.clip_fraction = reward_count ? static_cast<double>(clipped) / static_cast<double>(reward_count) : 0.0;
  double kl = 0.0;
  for (std::size_t p = 0; p < out.policy.size(); ++p) kl += out.policy[p].kl_to(reference[p]);
  out.stats.kl = out.policy.empty() ? 0.0 : kl / static_cast<double>(out.policy.size());
  return out;
}

// A synthetic video with its ground truth for one task.
struct ScenarioPrompt {
  std::string id;
  TaskKind task = TaskKind::TG;
  double duration = 0.0;
  std::vector<Interval> gt_intervals;
  std::optional<std::string> gt_answer;
};

struct Scenario {
  std::vector<ScenarioPrompt> prompts;
  std::size_t grid_resolution = 10;
  std::size_t max_count = 5;
  std::vector<std::string> options = {"A", "B", "C", "D"};
  TalConfig tal;

  void validate() const {
    if (prompts.empty()) throw std::invalid_argument("scenario has no prompts");
    if (grid_resolution < 1) throw std::invalid_argument("grid_resolution must be >= 1");
    if (max_count < 1) throw std::invalid_argument("max_count must be >= 1");
    tal.validate();
    for (const auto& p : prompts) {
      if (!(p.duration > 0.0) || !std::isfinite(p.duration)) {
        throw std::invalid_argument("prompt '" + p.id + "': duration must be > 0");
      }
      if (p.gt_intervals.empty()) throw std::invalid_argument("prompt '" + p.id + "': no gt intervals");
      if (p.task == TaskKind::TG && p.gt_intervals.size() != 1) {
        throw std::invalid_argument("prompt '" + p.id + "': TG needs exactly one gt interval");
      }
      for (const auto& g : p.gt_intervals) {
        if (!g.valid()) throw std::invalid_argument("prompt '" + p.id + "': invalid gt interval");
      }
      if ((p.task == TaskKind::GVQA) != p.gt_answer.has_value()) {
        throw std::invalid_argument("prompt '" + p.id + "': gt_answer required iff task is GVQA");
      }
    }
  }

  ToyPolicy initial_policy() const {
    ToyPolicy policy;
    for (const auto& p : prompts) {
      policy.emplace_back(p.task, candidate_grid(p.duration, grid_resolution), max_count, options);
    }
    return policy;
  }

  // The composite reward used for training.
  RewardFn reward_fn() const {
    return [this](std::size_t i, std::string_view response) {
      const auto& p = prompts.at(i);
      return total_reward(response, p.task, p.gt_intervals, p.gt_answer, tal).total;
    };
  }
};

struct CurveRecord {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
};

struct PromptSummary {
  std::string id;
  TaskKind task = TaskKind::TG;
  std::size_t modal_count = 0;
  std::string modal_response;
  double modal_reward = 0.0;
  double modal_probability = 0.0;
};

struct SimulationResult {
  std::vector<CurveRecord> curve;
  ToyPolicy policy;
  std::vector<PromptSummary> summary;
};

inline std::vector<PromptSummary> summarize(const Scenario& scenario, const ToyPolicy& policy) {
  const auto reward = scenario.reward_fn();
  std::vector<PromptSummary> out;
  for (std::size_t i = 0; i < policy.size(); ++i) {
    const ToyAction mode = policy[i].mode();
    PromptSummary s;
    s.id = scenario.prompts[i].id;
    s.task = scenario.prompts[i].task;
    s.modal_count = mode.count;
    s.modal_response = policy[i].render(mode);
    s.modal_reward = reward(i, s.modal_response);
    s.modal_probability = std::exp(policy[i].log_prob(mode));
    out.push_back(std::move(s));
  }
  return out;
}

// Trains the toy policy on a scenario for `steps` GRPO steps. The reference
// policy is the uniform initial policy. Step seeds come from one generator
// seeded with `seed`, so identical inputs give identical curves.
inline SimulationResult run_simulation(const Scenario& scenario, const GrpoConfig& cfg, std::size_t steps,
                                       std::uint64_t seed) {
  scenario.validate();
  cfg.validate();
  const ToyPolicy reference = scenario.initial_policy();
  const RewardFn reward = scenario.reward_fn();
  SimulationResult result;
  result.policy = reference;
  std::mt19937_64 seeds(seed);
  for (std::size_t step = 0; step < steps; ++step) {
    StepOutcome o = grpo_step(result.policy, reference, reward, cfg, seeds());
    result.policy = std::move(o.policy);
    result.curve.push_back({step, o.stats.mean_reward, o.stats.kl, o.stats.clip_fraction});
  }
  result.summary = summarize(scenario, result.policy);
  return result;
}

}  // namespace tempr
