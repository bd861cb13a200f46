#pragma once

// Line-delimited dataset records, report/record emission and scenario files.
// Formats are documented in docs/formats.md.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tempr/eval.hpp"
#include "tempr/grpo.hpp"
#include "tempr/reward.hpp"
#include "tempr/task.hpp"
#include "tempr/toy_policy.hpp"

namespace tempr::io {

inline constexpr const char* kEvalReportSchema = "tempr.eval_report/1";
inline constexpr const char* kRewardRecordSchema = "tempr.reward_record/1";
inline constexpr const char* kCurveSchema = "tempr.training_curve/1";

// Malformed user input. `line` is 1-based, 0 when not tied to a line.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

using json = nlohmann::json;

// Fixed 4-decimal rendering used by every emitted number.
inline std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  std::string s(buf);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

inline std::string quote(const std::string& s) { return json(s).dump(); }

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where,
                                std::size_t line) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw SchemaError("unknown key '" + key + "' in " + where, line);
  }
}

inline double number_field(const json& v, const std::string& name, std::size_t line) {
  if (!v.is_number()) throw SchemaError("'" + name + "' must be a number", line);
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError("'" + name + "' must be finite", line);
  return d;
}

inline std::vector<Interval> interval_list(const json& v, const std::string& name, std::size_t line) {
  if (!v.is_array()) throw SchemaError("'" + name + "' must be an array of [start, end] pairs", line);
  std::vector<Interval> out;
  for (const auto& pair : v) {
    if (!pair.is_array() || pair.size() != 2) {
      throw SchemaError("'" + name + "' entries must be [start, end] pairs", line);
    }
    const double s = number_field(pair[0], name, line);
    const double e = number_field(pair[1], name, line);
    if (!Interval::valid(s, e)) {
      throw SchemaError("'" + name + "' has invalid interval [" + fmt4(s) + ", " + fmt4(e) + "]", line);
    }
    out.push_back(Interval{s, e});
  }
  return out;
}

inline TaskKind task_field(const json& v, std::size_t line) {
  if (!v.is_string()) throw SchemaError("'task' must be a string", line);
  auto t = task_from_string(v.get<std::string>());
  if (!t) throw SchemaError("unknown task tag '" + v.get<std::string>() + "'", line);
  return *t;
}

inline json parse_json(const std::string& text, std::size_t line) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what(), line);
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

// One dataset line -> Sample. Required: id, task, gt_intervals,
// prediction_raw. Optional: duration, gt_answer (required iff GVQA).
inline Sample parse_sample_line(const std::string& text, std::size_t line) {
  const json j = detail::parse_json(text, line);
  if (!j.is_object()) throw SchemaError("record must be a JSON object", line);
  detail::reject_unknown_keys(j, {"id", "task", "duration", "gt_intervals", "gt_answer", "prediction_raw"},
                              "dataset record", line);
  for (const char* key : {"id", "task", "gt_intervals", "prediction_raw"}) {
    if (!j.contains(key)) throw SchemaError(std::string("missing required key '") + key + "'", line);
  }
  Sample s;
  if (!j["id"].is_string()) throw SchemaError("'id' must be a string", line);
  s.id = j["id"].get<std::string>();
  s.task = detail::task_field(j["task"], line);
  if (j.contains("duration") && !j["duration"].is_null()) {
    s.duration = detail::number_field(j["duration"], "duration", line);
    if (*s.duration < 0.0) throw SchemaError("'duration' must be >= 0", line);
  }
  s.gt_intervals = detail::interval_list(j["gt_intervals"], "gt_intervals", line);
  if (s.gt_intervals.empty()) throw SchemaError("'gt_intervals' must not be empty", line);
  if (s.task == TaskKind::TG && s.gt_intervals.size() != 1) {
    throw SchemaError("TG records need exactly one gt interval", line);
  }
  if (j.contains("gt_answer") && !j["gt_answer"].is_null()) {
    if (!j["gt_answer"].is_string() || j["gt_answer"].get<std::string>().empty()) {
      throw SchemaError("'gt_answer' must be a non-empty string", line);
    }
    s.gt_answer = j["gt_answer"].get<std::string>();
  }
  if ((s.task == TaskKind::GVQA) != s.gt_answer.has_value()) {
    throw SchemaError("'gt_answer' is required for GVQA records and not allowed otherwise", line);
  }
  if (!j["prediction_raw"].is_string()) throw SchemaError("'prediction_raw' must be a string", line);
  s.prediction_raw = j["prediction_raw"].get<std::string>();
  return s;
}

inline std::vector<Sample> read_dataset(std::istream& in) {
  std::vector<Sample> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_sample_line(text, line));
  }
  return out;
}

inline std::vector<Sample> read_dataset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  return read_dataset(in);
}

inline std::string sample_to_line(const Sample& s) {
  json j;
  j["id"] = s.id;
  j["task"] = std::string(to_string(s.task));
  if (s.duration) j["duration"] = *s.duration;
  json gts = json::array();
  for (const auto& g : s.gt_intervals) gts.push_back({g.start, g.end});
  j["gt_intervals"] = gts;
  if (s.gt_answer) j["gt_answer"] = *s.gt_answer;
  j["prediction_raw"] = s.prediction_raw;
  return j.dump();
}

namespace detail {

inline std::string threshold_map(const std::map<double, double>& m) {
  std::string out = "{";
  bool first = true;
  for (const auto& [theta, v] : m) {
    if (!first) out += ", ";
    first = false;
    char key[16];
    std::snprintf(key, sizeof(key), "%.1f", theta);
    out += "\"" + std::string(key) + "\": " + fmt4(v);
  }
  return out + "}";
}

}  // namespace detail

// Pretty, byte-stable rendering of an EvalReport. Metrics that do not apply
// (or blocks with no samples) are omitted.
inline std::string format_report(const EvalReport& report) {
  std::ostringstream o;
  o << "{\n";
  o << "  \"schema\": \"" << kEvalReportSchema << "\",\n";
  o << "  \"tal_protocol\": \"" << kTalProtocolId << "\",\n";
  o << "  \"tasks\": [";
  for (std::size_t b = 0; b < report.blocks.size(); ++b) {
    const TaskReport& t = report.blocks[b];
    o << (b ? ",\n" : "\n") << "    {\n";
    o << "      \"task\": \"" << to_string(t.task) << "\",\n";
    o << "      \"n_samples\": " << t.n_samples << ",\n";
    o << "      \"n_parse_failures\": " << t.n_parse_failures;
    if (t.miou) o << ",\n      \"miou\": " << fmt4(*t.miou);
    if (!t.recall_at.empty()) o << ",\n      \"recall_at\": " << detail::threshold_map(t.recall_at);
    if (!t.recall_at_per_sample.empty()) {
      o << ",\n      \"recall_at_per_sample\": " << detail::threshold_map(t.recall_at_per_sample);
    }
    if (t.mf1) o << ",\n      \"mf1\": " << fmt4(*t.mf1);
    if (!t.f1_at.empty()) o << ",\n      \"f1_at\": " << detail::threshold_map(t.f1_at);
    if (t.accuracy) o << ",\n      \"accuracy\": " << fmt4(*t.accuracy);
    o << "\n    }";
  }
  o << "\n  ]\n}\n";
  return o.str();
}

// One JSON line per sample with every reward component.
inline std::string format_reward_record(const Sample& s, const RewardBreakdown& r) {
  std::ostringstream o;
  o << "{\"id\": " << quote(s.id) << ", \"task\": \"" << to_string(s.task) << "\"";
  o << ", \"format\": " << r.format;
  o << ", \"localization\": " << fmt4(r.localization);
  if (r.classification) o << ", \"classification\": " << *r.classification;
  o << ", \"total\": " << fmt4(r.total);
  o << ", \"parse_error\": ";
  if (r.parse_error) {
    o << "\"" << to_string(*r.parse_error) << "\"";
  } else {
    o << "null";
  }
  if (r.tal) {
    const auto& m = r.tal->match;
    o << ", \"tal\": {\"num_reward\": " << fmt4(r.tal->num_reward) << ", \"siou\": " << fmt4(m.siou)
      << ", \"precision\": " << fmt4(m.precision) << ", \"recall\": " << fmt4(m.recall)
      << ", \"f1\": " << fmt4(m.f1) << ", \"pairs\": [";
    for (std::size_t k = 0; k < m.pairs.size(); ++k) {
      o << (k ? ", " : "") << "[" << m.pairs[k].first << ", " << m.pairs[k].second << "]";
    }
    o << "]}";
  }
  o << "}\n";
  return o.str();
}

// User-facing knobs. Unset fields keep whatever the command's defaults or
// scenario file specify.
struct RunConfig {
  std::optional<double> sigma;
  std::optional<double> clip_eps;
  std::optional<double> kl_beta;
  std::optional<std::size_t> group_size;
  std::optional<double> learning_rate;
  std::optional<std::size_t> steps;
  std::optional<std::uint64_t> seed;
  bool clamp_to_duration = false;
  bool strict_parse = false;
  bool tal_normalize = false;

  // Fields set in `other` win.
  void overlay(const RunConfig& other) {
    if (other.sigma) sigma = other.sigma;
    if (other.clip_eps) clip_eps = other.clip_eps;
    if (other.kl_beta) kl_beta = other.kl_beta;
    if (other.group_size) group_size = other.group_size;
    if (other.learning_rate) learning_rate = other.learning_rate;
    if (other.steps) steps = other.steps;
    if (other.seed) seed = other.seed;
    clamp_to_duration = clamp_to_duration || other.clamp_to_duration;
    strict_parse = strict_parse || other.strict_parse;
    tal_normalize = tal_normalize || other.tal_normalize;
  }

  TalConfig tal(TalConfig base = {}) const {
    if (sigma) base.sigma = *sigma;
    if (tal_normalize) base.normalize = true;
    base.validate();
    return base;
  }

  GrpoConfig grpo(GrpoConfig base = {}) const {
    if (clip_eps) base.clip_eps = *clip_eps;
    if (kl_beta) base.kl_beta = *kl_beta;
    if (group_size) base.group_size = *group_size;
    if (learning_rate) base.learning_rate = *learning_rate;
    base.validate();
    return base;
  }

  EvalOptions eval_options() const {
    EvalOptions e;
    e.clamp_to_duration = clamp_to_duration;
    e.parse.strict = strict_parse;
    return e;
  }
};

namespace detail {

inline std::size_t count_field(const json& v, const std::string& name, std::size_t line = 0) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) throw SchemaError("'" + name + "' must be an integer", line);
  if (v.is_number_integer() && v.get<long long>() < 0) throw SchemaError("'" + name + "' must be >= 0", line);
  return v.get<std::size_t>();
}

inline bool bool_field(const json& v, const std::string& name) {
  if (!v.is_boolean()) throw SchemaError("'" + name + "' must be true or false");
  return v.get<bool>();
}

}  // namespace detail

// Config file: a JSON object with any of sigma, clip_eps, kl_beta,
// group_size, learning_rate, steps, seed, clamp, strict_parse, tal_normalize.
inline RunConfig parse_run_config(const std::string& text) {
  const json j = detail::parse_json(text, 0);
  if (!j.is_object()) throw SchemaError("config must be a JSON object");
  detail::reject_unknown_keys(j,
                              {"sigma", "clip_eps", "kl_beta", "group_size", "learning_rate", "steps", "seed",
                               "clamp", "strict_parse", "tal_normalize"},
                              "config", 0);
  RunConfig c;
  if (j.contains("sigma")) c.sigma = detail::number_field(j["sigma"], "sigma", 0);
  if (j.contains("clip_eps")) c.clip_eps = detail::number_field(j["clip_eps"], "clip_eps", 0);
  if (j.contains("kl_beta")) c.kl_beta = detail::number_field(j["kl_beta"], "kl_beta", 0);
  if (j.contains("group_size")) c.group_size = detail::count_field(j["group_size"], "group_size");
  if (j.contains("learning_rate")) c.learning_rate = detail::number_field(j["learning_rate"], "learning_rate", 0);
  if (j.contains("steps")) c.steps = detail::count_field(j["steps"], "steps");
  if (j.contains("seed")) c.seed = detail::count_field(j["seed"], "seed");
  if (j.contains("clamp")) c.clamp_to_duration = detail::bool_field(j["clamp"], "clamp");
  if (j.contains("strict_parse")) c.strict_parse = detail::bool_field(j["strict_parse"], "strict_parse");
  if (j.contains("tal_normalize")) c.tal_normalize = detail::bool_field(j["tal_normalize"], "tal_normalize");
  return c;
}

inline RunConfig read_run_config_file(const std::string& path) { return parse_run_config(detail::read_file(path)); }

struct ScenarioFile {
  Scenario scenario;
  GrpoConfig grpo;
  std::size_t steps = 500;
  std::uint64_t seed = 7;
};

// Scenario file: see docs/formats.md. Unknown keys are rejected by name.
inline ScenarioFile parse_scenario(const std::string& text) {
  const json j = detail::parse_json(text, 0);
  if (!j.is_object()) throw SchemaError("scenario must be a JSON object");
  detail::reject_unknown_keys(j, {"grid_resolution", "max_count", "options", "sigma", "steps", "seed", "grpo", "prompts"},
                              "scenario", 0);
  ScenarioFile f;
  Scenario& sc = f.scenario;
  if (j.contains("grid_resolution")) sc.grid_resolution = detail::count_field(j["grid_resolution"], "grid_resolution");
  if (j.contains("max_count")) sc.max_count = detail::count_field(j["max_count"], "max_count");
  if (j.contains("options")) {
    if (!j["options"].is_array()) throw SchemaError("'options' must be an array of strings");
    sc.options.clear();
    for (const auto& o : j["options"]) {
      if (!o.is_string() || !answer_text_serializable(o.get<std::string>())) {
        throw SchemaError("'options' entries must be non-empty trimmed strings");
      }
      sc.options.push_back(o.get<std::string>());
    }
  }
  if (j.contains("sigma")) sc.tal.sigma = detail::number_field(j["sigma"], "sigma", 0);
  if (j.contains("steps")) f.steps = detail::count_field(j["steps"], "steps");
  if (j.contains("seed")) f.seed = detail::count_field(j["seed"], "seed");
  if (j.contains("grpo")) {
    const json& g = j["grpo"];
    if (!g.is_object()) throw SchemaError("'grpo' must be an object");
    detail::reject_unknown_keys(
        g, {"group_size", "clip_eps", "kl_beta", "learning_rate", "std_floor", "epochs_per_batch"}, "grpo", 0);
    if (g.contains("group_size")) f.grpo.group_size = detail::count_field(g["group_size"], "group_size");
    if (g.contains("clip_eps")) f.grpo.clip_eps = detail::number_field(g["clip_eps"], "clip_eps", 0);
    if (g.contains("kl_beta")) f.grpo.kl_beta = detail::number_field(g["kl_beta"], "kl_beta", 0);
    if (g.contains("learning_rate")) f.grpo.learning_rate = detail::number_field(g["learning_rate"], "learning_rate", 0);
    if (g.contains("std_floor")) f.grpo.std_floor = detail::number_field(g["std_floor"], "std_floor", 0);
    if (g.contains("epochs_per_batch")) {
      f.grpo.epochs_per_batch = detail::count_field(g["epochs_per_batch"], "epochs_per_batch");
    }
  }
  if (!j.contains("prompts") || !j["prompts"].is_array()) throw SchemaError("'prompts' must be an array");
  std::size_t k = 0;
  for (const auto& p : j["prompts"]) {
    const std::string where = "prompts[" + std::to_string(k++) + "]";
    if (!p.is_object()) throw SchemaError(where + " must be an object");
    detail::reject_unknown_keys(p, {"id", "task", "duration", "gt_intervals", "gt_answer"}, where, 0);
    for (const char* key : {"task", "duration", "gt_intervals"}) {
      if (!p.contains(key)) throw SchemaError(where + " is missing '" + key + "'");
    }
    ScenarioPrompt sp;
    sp.id = p.contains("id") ? p["id"].get<std::string>() : where;
    sp.task = detail::task_field(p["task"], 0);
    sp.duration = detail::number_field(p["duration"], "duration", 0);
    sp.gt_intervals = detail::interval_list(p["gt_intervals"], "gt_intervals", 0);
    if (p.contains("gt_answer") && !p["gt_answer"].is_null()) {
      if (!p["gt_answer"].is_string()) throw SchemaError(where + ": 'gt_answer' must be a string");
      sp.gt_answer = p["gt_answer"].get<std::string>();
    }
    sc.prompts.push_back(std::move(sp));
  }
  try {
    sc.validate();
    f.grpo.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
  return f;
}

inline ScenarioFile read_scenario_file(const std::string& path) { return parse_scenario(detail::read_file(path)); }

inline std::string format_curve_record(const CurveRecord& r) {
  std::ostringstream o;
  o << "{\"step\": " << r.step << ", \"mean_reward\": " << fmt4(r.mean_reward) << ", \"kl\": " << fmt4(r.kl)
    << ", \"clip_fraction\": " << fmt4(r.clip_fraction) << "}\n";
  return o.str();
}

inline std::string format_simulation(const SimulationResult& sim) {
  std::ostringstream o;
  for (const auto& r : sim.curve) o << format_curve_record(r);
  o << "{\"summary\": {\"schema\": \"" << kCurveSchema << "\", \"steps\": " << sim.curve.size();
  if (!sim.curve.empty()) {
    o << ", \"initial_mean_reward\": " << fmt4(sim.curve.front().mean_reward)
      << ", \"final_mean_reward\": " << fmt4(sim.curve.back().mean_reward);
  }
  o << ", \"prompts\": [";
  for (std::size_t i = 0; i < sim.summary.size(); ++i) {
    const auto& p = sim.summary[i];
    o << (i ? ", " : "") << "{\"id\": " << quote(p.id) << ", \"task\": \"" << to_string(p.task)
      << "\", \"modal_count\": " << p.modal_count << ", \"modal_probability\": " << fmt4(p.modal_probability)
      << ", \"modal_reward\": " << fmt4(p.modal_reward) << ", \"modal_response\": " << quote(p.modal_response)
      << "}";
  }
  o << "]}}\n";
  return o.str();
}

}  // namespace tempr::io
