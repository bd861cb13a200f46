#pragma once

#include <random>
#include <vector>

#include <string>

#include "tempr/interval.hpp"
#include "tempr/output_parser.hpp"
#include "tempr/task.hpp"

namespace tempr::testing {

// Random interval with endpoints uniform on [0, horizon].
inline Interval random_interval(std::mt19937_64& rng, double horizon = 100.0) {
  std::uniform_real_distribution<double> u(0.0, horizon);
  double a = u(rng), b = u(rng);
  if (a > b) std::swap(a, b);
  return Interval{a, b};
}

inline std::vector<Interval> random_intervals(std::mt19937_64& rng, std::size_t n, double horizon = 100.0) {
  std::vector<Interval> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_interval(rng, horizon));
  return out;
}

// Integer-endpoint interval on [0, horizon] with positive length.
inline Interval random_grid_interval(std::mt19937_64& rng, int horizon = 40) {
  std::uniform_int_distribution<int> u(0, horizon);
  int a = u(rng), b = u(rng);
  while (a == b) b = u(rng);
  if (a > b) std::swap(a, b);
  return Interval{static_cast<double>(a), static_cast<double>(b)};
}

// Random valid ParsedOutput for `task`. Timestamps mix integers, short
// decimals and full-precision doubles.
inline ParsedOutput random_parsed_output(std::mt19937_64& rng, TaskKind task) {
  auto stamp = [&]() -> double {
    switch (rng() % 3) {
      case 0: return static_cast<double>(rng() % 500);
      case 1: return static_cast<double>(rng() % 50000) / 100.0;
      default: return std::uniform_real_distribution<double>(0.0, 3600.0)(rng);
    }
  };
  ParsedOutput p;
  std::size_t n = 1;
  if (task == TaskKind::GVQA) {
    n = rng() % 5;
  } else if (task != TaskKind::TG) {
    n = 1 + rng() % 6;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double a = stamp(), b = stamp();
    if (a > b) std::swap(a, b);
    p.intervals.push_back(Interval{a, b});
  }
  if (task == TaskKind::GVQA) {
    static const char* kAnswers[] = {"A", "B", "C", "D", "yes", "no", "the red car", "(C) a dog", "42"};
    p.answer_text = kAnswers[rng() % (sizeof(kAnswers) / sizeof(kAnswers[0]))];
  }
  return p;
}

}  // namespace tempr::testing
