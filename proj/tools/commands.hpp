#pragma once

// Command bodies behind the tempr CLI. They write to the given streams and
// throw io::SchemaError for malformed input.

#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tempr/io.hpp"
#include "tempr/tempr.hpp"

namespace tempr::cli {

inline void cmd_eval(const std::vector<Sample>& samples, const io::RunConfig& cfg, std::ostream& out) {
  out << io::format_report(aggregate(samples, cfg.eval_options()));
}

inline void cmd_reward(const std::vector<Sample>& samples, const io::RunConfig& cfg, std::ostream& out) {
  const TalConfig tal = cfg.tal();
  ParseOptions popts;
  popts.strict = cfg.strict_parse;
  for (const Sample& s : samples) {
    out << io::format_reward_record(s, total_reward(s.prediction_raw, s.task, s.gt_intervals, s.gt_answer, tal, popts));
  }
}

// Inline interval list: either "0 to 4, 6 to 10" or JSON "[[0,4],[6,10]]".
inline std::vector<Interval> parse_inline_intervals(const std::string& text, const std::string& name) {
  std::vector<Interval> out;
  const std::string_view trimmed = detail::trim(text);
  if (!trimmed.empty() && trimmed.front() == '[') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(trimmed);
    } catch (const nlohmann::json::parse_error&) {
      throw io::SchemaError("--" + name + ": malformed JSON interval list");
    }
    return io::detail::interval_list(j, name, 0);
  }
  auto raw = detail::parse_interval_list(trimmed);
  if (!raw) throw io::SchemaError("--" + name + ": expected 'T to T, T to T, ...'");
  for (const auto& r : *raw) {
    if (!Interval::valid(r.start, r.end)) throw io::SchemaError("--" + name + ": interval with end < start");
    out.push_back(Interval{r.start, r.end});
  }
  return out;
}

namespace detail_print {

inline std::string span_text(const Interval& x) { return "[" + io::fmt4(x.start) + ", " + io::fmt4(x.end) + "]"; }

inline void scores(std::ostream& out, const MatchResult& r) {
  out << "pairs:";
  if (r.pairs.empty()) out << " (none)";
  for (const auto& [i, j] : r.pairs) out << " (p" << i << ", g" << j << ")";
  out << "\n";
  out << "sIoU " << io::fmt4(r.siou) << "  P " << io::fmt4(r.precision) << "  R " << io::fmt4(r.recall) << "  F1 "
      << io::fmt4(r.f1) << "\n";
}

inline char step_glyph(MatchStep s) {
  switch (s) {
    case MatchStep::Diagonal: return '\\';
    case MatchStep::SkipGt: return '<';
    case MatchStep::SkipPred: return '^';
    case MatchStep::None: return ' ';
  }
  return ' ';
}

}  // namespace detail_print

inline void cmd_match(const std::vector<Interval>& preds, const std::vector<Interval>& gts, bool compare,
                      std::ostream& out) {
  if (gts.empty()) throw io::SchemaError("--gts must contain at least one interval");
  using detail_print::span_text;
  const MatchTrace t = dp_match_trace(preds, gts);
  char cell[32];

  out << "predictions (sorted):\n";
  for (std::size_t i = 0; i < t.preds.size(); ++i) out << "  p" << i << " " << span_text(t.preds[i]) << "\n";
  out << "ground truth (sorted):\n";
  for (std::size_t j = 0; j < t.gts.size(); ++j) out << "  g" << j << " " << span_text(t.gts[j]) << "\n";

  out << "\nIoU matrix:\n     ";
  for (std::size_t j = 0; j < t.gts.size(); ++j) {
    std::snprintf(cell, sizeof(cell), "%9s", ("g" + std::to_string(j)).c_str());
    out << cell;
  }
  out << "\n";
  for (std::size_t i = 0; i < t.preds.size(); ++i) {
    std::snprintf(cell, sizeof(cell), "  %-3s", ("p" + std::to_string(i)).c_str());
    out << cell;
    for (std::size_t j = 0; j < t.gts.size(); ++j) {
      std::snprintf(cell, sizeof(cell), "%9s", io::fmt4(t.iou[i][j]).c_str());
      out << cell;
    }
    out << "\n";
  }

  out << "\nDP table (\\ match, < skip gt, ^ skip prediction):\n     ";
  for (std::size_t j = 0; j <= t.gts.size(); ++j) {
    std::snprintf(cell, sizeof(cell), "%9s", (j ? "g" + std::to_string(j - 1) : std::string("-")).c_str());
    out << cell;
  }
  out << "\n";
  for (std::size_t i = 0; i < t.table.size(); ++i) {
    std::snprintf(cell, sizeof(cell), "  %-3s", (i ? "p" + std::to_string(i - 1) : std::string("-")).c_str());
    out << cell;
    for (std::size_t j = 0; j < t.table[i].size(); ++j) {
      std::snprintf(cell, sizeof(cell), "%8s%c", io::fmt4(t.table[i][j]).c_str(),
                    detail_print::step_glyph(t.path[i][j]));
      out << cell;
    }
    out << "\n";
  }

  out << "\ndp matching:\n";
  detail_print::scores(out, t.result);
  if (compare) {
    const MatchResult seq = sequential_match(preds, gts);
    out << "\nsequential matching:\n";
    detail_print::scores(out, seq);
    out << "\ndp sIoU - sequential sIoU = " << io::fmt4(t.result.siou - seq.siou) << "\n";
  }
}

inline void cmd_simulate(const io::ScenarioFile& file, const io::RunConfig& cfg, std::ostream& out) {
  Scenario scenario = file.scenario;
  scenario.tal = cfg.tal(scenario.tal);
  const GrpoConfig grpo = cfg.grpo(file.grpo);
  const std::size_t steps = cfg.steps.value_or(file.steps);
  const std::uint64_t seed = cfg.seed.value_or(file.seed);
  try {
    scenario.validate();
  } catch (const std::invalid_argument& e) {
    throw io::SchemaError(e.what());
  }
  out << io::format_simulation(run_simulation(scenario, grpo, steps, seed));
}

}  // namespace tempr::cli
