#pragma once

#include <algorithm>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tempr/interval.hpp"

namespace tempr {

// Outcome of aligning predictions with ground truth. Pair indices refer to
// the chronologically sorted lists, so both coordinates strictly increase.
struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double siou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Which option produced D[i][j] during the alignment recurrence.
enum class MatchStep : unsigned char { None, Diagonal, SkipGt, SkipPred };

// Full record of an alignment run, for inspection and the CLI table.
struct MatchTrace {
  std::vector<Interval> preds;  // sorted
  std::vector<Interval> gts;    // sorted
  std::vector<std::vector<double>> iou;     // m x n
  std::vector<std::vector<double>> table;   // (m+1) x (n+1)
  std::vector<std::vector<MatchStep>> path; // (m+1) x (n+1)
  MatchResult result;
};

inline std::vector<Interval> sorted_chronologically(std::span<const Interval> xs) {
  std::vector<Interval> out(xs.begin(), xs.end());
  std::stable_sort(out.begin(), out.end(), chronological);
  return out;
}

namespace detail {

inline void require_gts(std::span<const Interval> gts) {
  if (gts.empty()) throw std::invalid_argument("matching requires at least one ground-truth interval");
}

inline void finish_scores(MatchResult& r, std::size_t n_pred, std::size_t n_gt) {
  if (n_pred == 0) {
    r = MatchResult{};
    return;
  }
  r.precision = r.siou / static_cast<double>(n_pred);
  r.recall = r.siou / static_cast<double>(n_gt);
  const double denom = r.precision + r.recall;
  r.f1 = denom > 0.0 ? 2.0 * r.precision * r.recall / denom : 0.0;
}

}  // namespace detail

// Monotone alignment maximizing summed IoU. Ties prefer the diagonal, then
// skipping a ground truth, then skipping a prediction.
inline MatchTrace dp_match_trace(std::span<const Interval> preds_in, std::span<const Interval> gts_in) {
  detail::require_gts(gts_in);
  MatchTrace t;
  t.preds = sorted_chronologically(preds_in);
  t.gts = sorted_chronologically(gts_in);
  const std::size_t m = t.preds.size();
  const std::size_t n = t.gts.size();

  t.iou.assign(m, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t.iou[i][j] = iou(t.preds[i], t.gts[j]);

  t.table.assign(m + 1, std::vector<double>(n + 1, 0.0));
  t.path.assign(m + 1, std::vector<MatchStep>(n + 1, MatchStep::None));
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      const double skip_pred = t.table[i - 1][j];
      const double skip_gt = t.table[i][j - 1];
      const double diag = t.table[i - 1][j - 1] + t.iou[i - 1][j - 1];
      if (diag >= skip_gt && diag >= skip_pred) {
        t.table[i][j] = diag;
        t.path[i][j] = MatchStep::Diagonal;
      } else if (skip_gt >= skip_pred) {
        t.table[i][j] = skip_gt;
        t.path[i][j] = MatchStep::SkipGt;
      } else {
        t.table[i][j] = skip_pred;
        t.path[i][j] = MatchStep::SkipPred;
      }
    }
  }

  std::size_t i = m, j = n;
  while (i > 0 && j > 0) {
    switch (t.path[i][j]) {
      case MatchStep::Diagonal:
        if (t.iou[i - 1][j - 1] > 0.0) t.result.pairs.emplace_back(i - 1, j - 1);
        --i;
        --j;
        break;
      case MatchStep::SkipGt: --j; break;
      case MatchStep::SkipPred:
      case MatchStep::None: --i; break;
    }
  }
  std::reverse(t.result.pairs.begin(), t.result.pairs.end());
  t.result.siou = t.table[m][n];
  detail::finish_scores(t.result, m, n);
  return t;
}

inline MatchResult dp_match(std::span<const Interval> preds, std::span<const Interval> gts) {
  return dp_match_trace(preds, gts).result;
}

// Positional pairing (i, i) of the sorted lists; the ablation baseline.
inline MatchResult sequential_match(std::span<const Interval> preds_in, std::span<const Interval> gts_in) {
  detail::require_gts(gts_in);
  const auto preds = sorted_chronologically(preds_in);
  const auto gts = sorted_chronologically(gts_in);
  MatchResult r;
  const std::size_t k = std::min(preds.size(), gts.size());
  for (std::size_t i = 0; i < k; ++i) {
    const double v = iou(preds[i], gts[i]);
    r.siou += v;
    if (v > 0.0) r.pairs.emplace_back(i, i);
  }
  detail::finish_scores(r, preds.size(), gts.size());
  return r;
}

inline constexpr std::size_t kBruteForceLimit = 8;

// Exhaustive search over every monotone matching. Test oracle for dp_match;
// refuses inputs larger than kBruteForceLimit per side.
inline MatchResult brute_force_match(std::span<const Interval> preds_in, std::span<const Interval> gts_in) {
  detail::require_gts(gts_in);
  if (preds_in.size() > kBruteForceLimit || gts_in.size() > kBruteForceLimit) {
    throw std::invalid_argument("brute_force_match: at most 8 intervals per side");
  }
  const auto preds = sorted_chronologically(preds_in);
  const auto gts = sorted_chronologically(gts_in);

  MatchResult best;
  bool have_best = false;
  std::vector<std::pair<std::size_t, std::size_t>> current;

  // Sums are accumulated in increasing pair order starting from 0.0.
  std::function<void(std::size_t, std::size_t, double)> visit = [&](std::size_t i, std::size_t j, double sum) {
    if (!have_best || sum > best.siou) {
      best.siou = sum;
      best.pairs.clear();
      for (const auto& p : current)
        if (iou(preds[p.first], gts[p.second]) > 0.0) best.pairs.push_back(p);
      have_best = true;
    }
    for (std::size_t a = i; a < preds.size(); ++a) {
      for (std::size_t b = j; b < gts.size(); ++b) {
        current.emplace_back(a, b);
        visit(a + 1, b + 1, sum + iou(preds[a], gts[b]));
        current.pop_back();
      }
    }
  };
  visit(0, 0, 0.0);
  detail::finish_scores(best, preds.size(), gts.size());
  return best;
}

}  // namespace tempr
