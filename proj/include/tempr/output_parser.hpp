#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <variant>
#include <vector>

#include "tempr/interval.hpp"
#include "tempr/task.hpp"

namespace tempr {

// Structured prediction extracted from a model response.
//   TG:            exactly one interval from the answer block
//   DTG, VHD, TAL: one or more intervals from the answer block
//   GVQA:          non-empty answer text plus zero or more glue intervals
struct ParsedOutput {
  std::optional<std::string> answer_text;
  std::vector<Interval> intervals;

  friend bool operator==(const ParsedOutput&, const ParsedOutput&) = default;
};

enum class ParseErrorKind { MissingTags, BadTimestamp, WrongArity, InvalidInterval, ExtraText };

constexpr std::string_view to_string(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::MissingTags: return "MissingTags";
    case ParseErrorKind::BadTimestamp: return "BadTimestamp";
    case ParseErrorKind::WrongArity: return "WrongArity";
    case ParseErrorKind::InvalidInterval: return "InvalidInterval";
    case ParseErrorKind::ExtraText: return "ExtraText";
  }
  return "?";
}

struct ParseError {
  ParseErrorKind kind;
  std::string message;
  // Whatever could still be extracted (well-formed intervals, answer text)
  // when the tags themselves were found. Empty for hard failures.
  std::optional<ParsedOutput> recovered;
};

class ParseResult {
 public:
  ParseResult(ParsedOutput v) : v_(std::move(v)) {}
  ParseResult(ParseError e) : v_(std::move(e)) {}

  bool ok() const { return std::holds_alternative<ParsedOutput>(v_); }
  explicit operator bool() const { return ok(); }

  const ParsedOutput& value() const {
    if (!ok()) throw std::logic_error("ParseResult::value() on error: " + error().message);
    return std::get<ParsedOutput>(v_);
  }
  const ParseError& error() const { return std::get<ParseError>(v_); }

  // The successfully parsed output, or the partial recovery, or nothing.
  const ParsedOutput* best_effort() const {
    if (ok()) return &std::get<ParsedOutput>(v_);
    const auto& r = error().recovered;
    return r ? &*r : nullptr;
  }

 private:
  std::variant<ParsedOutput, ParseError> v_;
};

struct ParseOptions {
  // Reject any non-whitespace text outside the expected tag blocks.
  bool strict = false;
};

namespace detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline bool blank(std::string_view s) { return trim(s).empty(); }

// Decimal seconds: 12, 12.5, 12., .5 (no sign, no exponent).
inline std::optional<double> take_seconds(std::string_view& s) {
  std::size_t n = 0;
  while (n < s.size() && is_digit(s[n])) ++n;
  std::size_t int_digits = n;
  std::size_t frac_digits = 0;
  if (n < s.size() && s[n] == '.') {
    ++n;
    while (n < s.size() && is_digit(s[n])) {
      ++n;
      ++frac_digits;
    }
  }
  if (int_digits + frac_digits == 0) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + n, value, std::chars_format::fixed);
  if (ec != std::errc() || ptr != s.data() + n || !std::isfinite(value)) return std::nullopt;
  s.remove_prefix(n);
  return value;
}

struct RawInterval {
  double start;
  double end;
};

// "T to T (, T to T)*" or blank. Returns nullopt on any malformed item.
inline std::optional<std::vector<RawInterval>> parse_interval_list(std::string_view body) {
  std::vector<RawInterval> out;
  body = trim(body);
  if (body.empty()) return out;
  while (true) {
    std::size_t comma = body.find(',');
    std::string_view item = trim(body.substr(0, comma));
    auto start = take_seconds(item);
    if (!start) return std::nullopt;
    item = trim(item);
    if (item.substr(0, 2) != "to") return std::nullopt;
    item.remove_prefix(2);
    item = trim(item);
    auto end = take_seconds(item);
    if (!end || !item.empty()) return std::nullopt;
    out.push_back({*start, *end});
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return out;
}

struct Block {
  std::size_t open = 0;   // position of the opening tag
  std::size_t close = 0;  // one past the closing tag
  std::string_view body;
};

inline std::optional<Block> find_block(std::string_view raw, std::string_view tag,
                                       std::size_t from) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  std::size_t o = raw.find(open, from);
  if (o == std::string_view::npos) return std::nullopt;
  std::size_t body_begin = o + open.size();
  std::size_t c = raw.find(close, body_begin);
  if (c == std::string_view::npos) return std::nullopt;
  return Block{o, c + close.size(), raw.substr(body_begin, c - body_begin)};
}

inline std::string format_seconds(double v) {
  if (v == 0.0) return "0.0";  // also catches -0.0
  char buf[512];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
  if (ec != std::errc()) throw std::invalid_argument("timestamp not representable");
  std::string s(buf, ptr);
  if (s.find('.') == std::string::npos) s += ".0";
  return s;
}

inline std::string format_interval_list(const std::vector<Interval>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += format_seconds(xs[i].start);
    out += " to ";
    out += format_seconds(xs[i].end);
  }
  return out;
}

}  // namespace detail

inline bool answer_text_serializable(std::string_view text) {
  return !text.empty() && detail::trim(text) == text &&
         text.find("</answer>") == std::string_view::npos;
}

inline ParseResult parse(std::string_view raw, TaskKind task, ParseOptions opts = {}) {
  using detail::blank;
  auto answer = detail::find_block(raw, "answer", 0);
  if (!answer) return ParseError{ParseErrorKind::MissingTags, "no <answer>...</answer> block", {}};

  std::optional<detail::Block> glue;
  if (task == TaskKind::GVQA) {
    glue = detail::find_block(raw, "glue", answer->close);
    if (!glue) {
      std::optional<ParsedOutput> partial;
      std::string_view text = detail::trim(answer->body);
      if (!text.empty()) partial = ParsedOutput{std::string(text), {}};
      return ParseError{ParseErrorKind::MissingTags, "no <glue>...</glue> block after answer",
                        std::move(partial)};
    }
  }

  if (opts.strict) {
    std::size_t tail = glue ? glue->close : answer->close;
    bool extra = !blank(raw.substr(0, answer->open)) || !blank(raw.substr(tail));
    if (glue) extra = extra || !blank(raw.substr(answer->close, glue->open - answer->close));
    if (extra) return ParseError{ParseErrorKind::ExtraText, "text outside tag blocks", {}};
  }

  ParsedOutput out;
  std::string_view list_body = answer->body;
  if (task == TaskKind::GVQA) {
    out.answer_text = std::string(detail::trim(answer->body));
    list_body = glue->body;
  }

  auto raw_list = detail::parse_interval_list(list_body);
  if (!raw_list) {
    std::optional<ParsedOutput> partial;
    if (task == TaskKind::GVQA && !out.answer_text->empty()) partial = ParsedOutput{out.answer_text, {}};
    return ParseError{ParseErrorKind::BadTimestamp, "malformed interval list", std::move(partial)};
  }

  bool inverted = false;
  for (const auto& r : *raw_list) {
    if (Interval::valid(r.start, r.end)) {
      out.intervals.push_back(Interval{r.start, r.end});
    } else {
      inverted = true;
    }
  }
  if (inverted) {
    return ParseError{ParseErrorKind::InvalidInterval, "interval with end < start", std::move(out)};
  }

  const std::size_t n = out.intervals.size();
  switch (task) {
    case TaskKind::TG:
      if (n != 1) {
        return ParseError{ParseErrorKind::WrongArity,
                          "TG expects exactly one interval, got " + std::to_string(n),
                          std::move(out)};
      }
      break;
    case TaskKind::DTG:
    case TaskKind::VHD:
    case TaskKind::TAL:
      if (n == 0) return ParseError{ParseErrorKind::WrongArity, "expected at least one interval", std::move(out)};
      break;
    case TaskKind::GVQA:
      if (out.answer_text->empty()) {
        return ParseError{ParseErrorKind::WrongArity, "empty answer", std::move(out)};
      }
      break;
  }
  return out;
}

inline int format_reward(std::string_view raw, TaskKind task, ParseOptions opts = {}) {
  return parse(raw, task, opts).ok() ? 1 : 0;
}

// Canonical template text; parse(serialize(p, t), t) == p for every valid p.
inline std::string serialize(const ParsedOutput& p, TaskKind task) {
  for (const Interval& x : p.intervals) {
    if (!x.valid()) throw std::invalid_argument("serialize: invalid interval");
  }
  const std::size_t n = p.intervals.size();
  if (task == TaskKind::GVQA) {
    if (!p.answer_text || !answer_text_serializable(*p.answer_text)) {
      throw std::invalid_argument("serialize: GVQA needs a trimmed, non-empty answer");
    }
    return "<answer>" + *p.answer_text + "</answer><glue>" + detail::format_interval_list(p.intervals) +
           "</glue>";
  }
  if (p.answer_text) throw std::invalid_argument("serialize: answer text only allowed for GVQA");
  if (task == TaskKind::TG ? n != 1 : n == 0) {
    throw std::invalid_argument("serialize: wrong interval count for " + std::string(to_string(task)));
  }
  return "<answer>" + detail::format_interval_list(p.intervals) + "</answer>";
}

}  // namespace tempr
