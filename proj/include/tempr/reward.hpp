#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "tempr/interval.hpp"
#include "tempr/matching.hpp"
#include "tempr/output_parser.hpp"
#include "tempr/task.hpp"

namespace tempr {

struct TalConfig {
  double sigma = 1.0;  // count-penalty sharpness, > 0
  // Halve the TAL localization reward so it lies in [0, 1] like the other
  // tasks. Off by default.
  bool normalize = false;

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be > 0");
  }
};

// One-to-one: positional IoU averaged over max(|preds|, |gts|), so missing or
// extra segments dilute the score.
inline double reward_type1(std::span<const Interval> preds, std::span<const Interval> gts) {
  if (gts.empty()) throw std::invalid_argument("reward_type1: empty ground truth");
  const std::size_t k = std::min(preds.size(), gts.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += iou(preds[i], gts[i]);
  return sum / static_cast<double>(std::max(preds.size(), gts.size()));
}

// Many-to-one: IoU between the merged prediction and merged ground truth.
inline double reward_type2(std::span<const Interval> preds, std::span<const Interval> gts) {
  if (gts.empty()) throw std::invalid_argument("reward_type2: empty ground truth");
  return set_iou(merge(preds), merge(gts));
}

inline double instance_number_reward(std::size_t n_pred, std::size_t n_gt, double sigma) {
  if (n_gt == 0) throw std::invalid_argument("instance_number_reward: n_gt must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("instance_number_reward: sigma must be > 0");
  const double diff = std::abs(static_cast<double>(n_pred) - static_cast<double>(n_gt));
  const double scale = static_cast<double>(std::min<std::size_t>(n_gt, 3)) * sigma;
  return std::exp(-diff / scale);
}

struct TalReward {
  double num_reward = 0.0;
  MatchResult match;
  double total = 0.0;  // num_reward + match.f1
};

inline TalReward reward_tal_detail(std::span<const Interval> preds, std::span<const Interval> gts,
                                   const TalConfig& cfg) {
  cfg.validate();
  TalReward r;
  r.num_reward = instance_number_reward(preds.size(), gts.size(), cfg.sigma);
  r.match = dp_match(preds, gts);
  r.total = r.num_reward + r.match.f1;
  return r;
}

inline double reward_tal(std::span<const Interval> preds, std::span<const Interval> gts,
                         const TalConfig& cfg = {}) {
  return reward_tal_detail(preds, gts, cfg).total;
}

namespace detail {

inline std::string normalize_answer(std::string_view s) {
  s = trim(s);
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  while (!out.empty() && std::ispunct(static_cast<unsigned char>(out.back()))) out.pop_back();
  while (!out.empty() && is_space(out.back())) out.pop_back();
  return out;
}

// Option letter of an already normalized answer: "b", "(b", "(b)", "b) text",
// "b: text", "b. text", "option b".
inline std::optional<char> option_letter(std::string_view s) {
  if (s.substr(0, 7) == "option ") s.remove_prefix(7);
  if (!s.empty() && (s.front() == '(' || s.front() == '[')) s.remove_prefix(1);
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front()))) return std::nullopt;
  if (s.size() == 1) return s.front();
  const char next = s[1];
  if (next == ')' || next == ']' || next == ':' || next == '.' || is_space(next)) return s.front();
  return std::nullopt;
}

}  // namespace detail

// 1 when the predicted answer matches: compared after trimming, case-folding
// and stripping trailing punctuation; a single-letter ground truth compares
// against the prediction's leading option letter.
inline int classification_reward(std::string_view pred, std::string_view gt) {
  const std::string g = detail::normalize_answer(gt);
  if (g.empty()) throw std::invalid_argument("classification_reward: empty ground-truth answer");
  const std::string p = detail::normalize_answer(pred);
  if (p == g) return 1;
  if (g.size() == 1 && std::isalpha(static_cast<unsigned char>(g[0]))) {
    auto letter = detail::option_letter(p);
    return letter && *letter == g[0] ? 1 : 0;
  }
  return 0;
}

struct RewardBreakdown {
  int format = 0;
  double localization = 0.0;
  std::optional<int> classification;  // GVQA only
  double total = 0.0;
  std::optional<ParseErrorKind> parse_error;
  std::optional<TalReward> tal;  // TAL only, when intervals were scored
};

// Composite reward: format + localization (+ classification for GVQA).
// Localization and classification are computed from whatever the parser
// recovered, so a malformed but partially readable answer can still earn
// them; a hard parse failure earns nothing.
inline RewardBreakdown total_reward(std::string_view raw, TaskKind task, std::span<const Interval> gts,
                                    const std::optional<std::string>& gt_answer, const TalConfig& cfg = {},
                                    ParseOptions opts = {}) {
  if (gts.empty()) throw std::invalid_argument("total_reward: empty ground truth");
  if ((task == TaskKind::GVQA) != gt_answer.has_value()) {
    throw std::invalid_argument("total_reward: gt_answer must be given iff task is GVQA");
  }
  cfg.validate();

  RewardBreakdown r;
  const ParseResult parsed = parse(raw, task, opts);
  r.format = parsed.ok() ? 1 : 0;
  if (!parsed.ok()) r.parse_error = parsed.error().kind;
  const ParsedOutput* out = parsed.best_effort();

  if (out != nullptr) {
    switch (correspondence(task)) {
      case Correspondence::OneToOne:
        r.localization = reward_type1(out->intervals, gts);
        break;
      case Correspondence::ManyToOne:
        r.localization = reward_type2(out->intervals, gts);
        break;
      case Correspondence::ManyToMany:
        r.tal = reward_tal_detail(out->intervals, gts, cfg);
        r.localization = r.tal->total * (cfg.normalize ? 0.5 : 1.0);
        break;
    }
  }
  if (task == TaskKind::GVQA) {
    r.classification = (out != nullptr && out->answer_text && !out->answer_text->empty())
                           ? classification_reward(*out->answer_text, *gt_answer)
                           : 0;
  }
  r.total = r.format + r.localization + r.classification.value_or(0);
  return r;
}

}  // namespace tempr
