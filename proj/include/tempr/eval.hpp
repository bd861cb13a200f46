#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tempr/interval.hpp"
#include "tempr/matching.hpp"
#include "tempr/output_parser.hpp"
#include "tempr/reward.hpp"
#include "tempr/task.hpp"

namespace tempr {

inline constexpr std::array<double, 3> kRecallThresholds = {0.3, 0.5, 0.7};
inline constexpr std::array<double, 4> kF1Thresholds = {0.1, 0.3, 0.5, 0.7};
inline constexpr const char* kTalProtocolId = "tal-mf1-dp-sum-iou/v1";

struct Sample {
  std::string id;
  TaskKind task = TaskKind::TG;
  std::optional<double> duration;
  std::vector<Interval> gt_intervals;
  std::optional<std::string> gt_answer;
  std::string prediction_raw;
};

struct EvalOptions {
  // Clamp predicted timestamps to [0, duration] when a duration is known.
  bool clamp_to_duration = false;
  ParseOptions parse;
};

// Metrics for one task. Fields that do not apply to the task stay empty, as
// do all metrics of a block with no samples.
struct TaskReport {
  TaskKind task = TaskKind::TG;
  std::size_t n_samples = 0;
  std::size_t n_parse_failures = 0;
  std::optional<double> miou;
  std::map<double, double> recall_at;            // theta -> ratio
  std::map<double, double> recall_at_per_sample; // DTG: samples whose mean IoU >= theta
  std::optional<double> mf1;                     // TAL
  std::map<double, double> f1_at;                // TAL: theta -> mean F1
  std::optional<double> accuracy;                // GVQA
};

struct EvalReport {
  std::vector<TaskReport> blocks;  // one per task, in kAllTasks order

  const TaskReport& block(TaskKind t) const {
    for (const auto& b : blocks)
      if (b.task == t) return b;
    throw std::out_of_range("no block for task");
  }
};

namespace detail {

inline void require_task(const std::vector<Sample>& samples, TaskKind t) {
  for (const auto& s : samples) {
    if (s.task != t) {
      throw std::invalid_argument("sample '" + s.id + "' has task " + std::string(to_string(s.task)) +
                                  ", expected " + std::string(to_string(t)));
    }
    if (s.gt_intervals.empty()) throw std::invalid_argument("sample '" + s.id + "' has no gt intervals");
  }
}

// Parsed prediction intervals, or nullopt on any parse failure.
inline std::optional<ParsedOutput> read_prediction(const Sample& s, const EvalOptions& opts) {
  ParseResult r = parse(s.prediction_raw, s.task, opts.parse);
  if (!r.ok()) return std::nullopt;
  ParsedOutput out = r.value();
  if (opts.clamp_to_duration && s.duration) {
    const double d = *s.duration;
    for (auto& x : out.intervals) {
      x.start = std::clamp(x.start, 0.0, d);
      x.end = std::clamp(x.end, 0.0, d);
    }
  }
  return out;
}

inline double mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

template <std::size_t N>
std::map<double, double> recall_curve(const std::vector<double>& ious, const std::array<double, N>& thetas) {
  std::map<double, double> out;
  for (double theta : thetas) {
    std::size_t hits = 0;
    for (double v : ious) hits += v >= theta ? 1 : 0;
    out[theta] = static_cast<double>(hits) / static_cast<double>(ious.size());
  }
  return out;
}

// Shared body for tasks scored by one IoU per sample.
template <class ScoreFn>
TaskReport eval_per_sample_iou(const std::vector<Sample>& samples, TaskKind task, const EvalOptions& opts,
                               ScoreFn score) {
  require_task(samples, task);
  TaskReport rep;
  rep.task = task;
  rep.n_samples = samples.size();
  if (samples.empty()) return rep;
  std::vector<double> ious;
  for (const auto& s : samples) {
    auto pred = read_prediction(s, opts);
    if (!pred) ++rep.n_parse_failures;
    ious.push_back(pred ? score(s, *pred) : 0.0);
  }
  rep.miou = mean(ious);
  rep.recall_at = recall_curve(ious, kRecallThresholds);
  return rep;
}

}  // namespace detail

inline TaskReport eval_tg(const std::vector<Sample>& samples, const EvalOptions& opts = {}) {
  return detail::eval_per_sample_iou(samples, TaskKind::TG, opts, [](const Sample& s, const ParsedOutput& p) {
    return iou(p.intervals.front(), s.gt_intervals.front());
  });
}

// mIoU uses the positional mean IoU with the max-count denominator.
// R@theta is per (sample, gt event) pair; unmatched events are misses.
inline TaskReport eval_dtg(const std::vector<Sample>& samples, const EvalOptions& opts = {}) {
  detail::require_task(samples, TaskKind::DTG);
  TaskReport rep;
  rep.task = TaskKind::DTG;
  rep.n_samples = samples.size();
  if (samples.empty()) return rep;
  std::vector<double> per_sample;
  std::vector<double> per_pair;
  for (const auto& s : samples) {
    auto pred = detail::read_prediction(s, opts);
    if (!pred) ++rep.n_parse_failures;
    const std::vector<Interval> none;
    const auto& preds = pred ? pred->intervals : none;
    per_sample.push_back(reward_type1(preds, s.gt_intervals));
    for (std::size_t j = 0; j < s.gt_intervals.size(); ++j) {
      per_pair.push_back(j < preds.size() ? iou(preds[j], s.gt_intervals[j]) : 0.0);
    }
  }
  rep.miou = detail::mean(per_sample);
  rep.recall_at = detail::recall_curve(per_pair, kRecallThresholds);
  rep.recall_at_per_sample = detail::recall_curve(per_sample, kRecallThresholds);
  return rep;
}

// Merged-set IoU; R@theta counts samples whose merged IoU reaches theta.
inline TaskReport eval_vhd(const std::vector<Sample>& samples, const EvalOptions& opts = {}) {
  return detail::eval_per_sample_iou(samples, TaskKind::VHD, opts, [](const Sample& s, const ParsedOutput& p) {
    return reward_type2(p.intervals, s.gt_intervals);
  });
}

// Answer accuracy and merged-evidence IoU, scored independently.
inline TaskReport eval_gvqa(const std::vector<Sample>& samples, const EvalOptions& opts = {}) {
  for (const auto& s : samples) {
    if (s.task == TaskKind::GVQA && !s.gt_answer) {
      throw std::invalid_argument("sample '" + s.id + "' has no gt_answer");
    }
  }
  TaskReport rep = detail::eval_per_sample_iou(samples, TaskKind::GVQA, opts,
                                               [](const Sample& s, const ParsedOutput& p) {
                                                 return reward_type2(p.intervals, s.gt_intervals);
                                               });
  if (samples.empty()) return rep;
  double correct = 0.0;
  for (const auto& s : samples) {
    auto pred = detail::read_prediction(s, opts);
    if (pred && pred->answer_text) correct += classification_reward(*pred->answer_text, *s.gt_answer);
  }
  rep.accuracy = correct / static_cast<double>(samples.size());
  return rep;
}

// F1 of one sample at one threshold: DP alignment, then pairs with
// IoU >= theta are true positives.
inline double tal_f1_at(std::span<const Interval> preds, std::span<const Interval> gts, double theta) {
  if (preds.empty()) return 0.0;
  const MatchTrace t = dp_match_trace(preds, gts);
  std::size_t tp = 0;
  for (const auto& [i, j] : t.result.pairs) tp += t.iou[i][j] >= theta ? 1 : 0;
  if (tp == 0) return 0.0;
  const double p = static_cast<double>(tp) / static_cast<double>(preds.size());
  const double r = static_cast<double>(tp) / static_cast<double>(gts.size());
  return 2.0 * p * r / (p + r);
}

inline TaskReport eval_tal(const std::vector<Sample>& samples, const EvalOptions& opts = {}) {
  detail::require_task(samples, TaskKind::TAL);
  TaskReport rep;
  rep.task = TaskKind::TAL;
  rep.n_samples = samples.size();
  if (samples.empty()) return rep;
  std::map<double, double> f1_sum;
  double mf1_sum = 0.0;
  for (const auto& s : samples) {
    auto pred = detail::read_prediction(s, opts);
    if (!pred) ++rep.n_parse_failures;
    const std::vector<Interval> none;
    const auto& preds = pred ? pred->intervals : none;
    double sample_sum = 0.0;
    for (double theta : kF1Thresholds) {
      const double f1 = tal_f1_at(preds, s.gt_intervals, theta);
      f1_sum[theta] += f1;
      sample_sum += f1;
    }
    mf1_sum += sample_sum / static_cast<double>(kF1Thresholds.size());
  }
  const double n = static_cast<double>(samples.size());
  rep.mf1 = mf1_sum / n;
  for (const auto& [theta, sum] : f1_sum) rep.f1_at[theta] = sum / n;
  return rep;
}

inline TaskReport eval_task(TaskKind t, const std::vector<Sample>& samples, const EvalOptions& opts = {}) {
  switch (t) {
    case TaskKind::TG: return eval_tg(samples, opts);
    case TaskKind::DTG: return eval_dtg(samples, opts);
    case TaskKind::VHD: return eval_vhd(samples, opts);
    case TaskKind::GVQA: return eval_gvqa(samples, opts);
    case TaskKind::TAL: return eval_tal(samples, opts);
  }
  throw std::invalid_argument("unknown task");
}

// Partitions a mixed corpus by task (keeping input order within a task) and
// evaluates each partition. Always emits all five blocks.
inline EvalReport aggregate(const std::vector<Sample>& samples, const EvalOptions& opts = {}) {
  EvalReport report;
  for (TaskKind t : kAllTasks) {
    std::vector<Sample> part;
    for (const auto& s : samples)
      if (s.task == t) part.push_back(s);
    report.blocks.push_back(eval_task(t, part, opts));
  }
  return report;
}

}  // namespace tempr
