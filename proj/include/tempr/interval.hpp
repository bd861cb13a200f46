#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tempr {

// A closed time segment [start, end] in seconds. Zero-length segments are
// allowed; construction through make() enforces 0 <= start <= end, finite.
struct Interval {
  double start = 0.0;
  double end = 0.0;

  static Interval make(double start, double end) {
    if (!valid(start, end)) {
      throw std::invalid_argument("invalid interval [" + std::to_string(start) + ", " +
                                  std::to_string(end) + "]");
    }
    return Interval{start, end};
  }

  static bool valid(double start, double end) {
    return std::isfinite(start) && std::isfinite(end) && start >= 0.0 && start <= end;
  }

  bool valid() const { return valid(start, end); }
  double length() const { return end - start; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

inline bool chronological(const Interval& a, const Interval& b) {
  return a.start < b.start || (a.start == b.start && a.end < b.end);
}

inline double intersection_length(const Interval& a, const Interval& b) {
  const double lo = std::max(a.start, b.start);
  const double hi = std::min(a.end, b.end);
  return hi > lo ? hi - lo : 0.0;
}

// Temporal IoU. Two identical zero-length intervals have IoU 1; any other
// pair with an empty union has IoU 0.
inline double iou(const Interval& a, const Interval& b) {
  const double inter = intersection_length(a, b);
  const double uni = a.length() + b.length() - inter;
  if (uni <= 0.0) {
    return a == b ? 1.0 : 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

// Canonical union of intervals: sorted by start, pairwise disjoint, and
// intervals that touch at an endpoint are fused.
class IntervalSet {
 public:
  IntervalSet() = default;

  static IntervalSet merge(std::span<const Interval> xs) {
    std::vector<Interval> sorted(xs.begin(), xs.end());
    std::stable_sort(sorted.begin(), sorted.end(), chronological);
    IntervalSet out;
    for (const Interval& x : sorted) {
      if (!out.intervals_.empty() && x.start <= out.intervals_.back().end) {
        out.intervals_.back().end = std::max(out.intervals_.back().end, x.end);
      } else {
        out.intervals_.push_back(x);
      }
    }
    return out;
  }

  const std::vector<Interval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  std::size_t size() const { return intervals_.size(); }

  double measure() const {
    double total = 0.0;
    for (const Interval& x : intervals_) total += x.length();
    return total;
  }

  // Measure of the intersection with another canonical set (linear sweep).
  double intersection_measure(const IntervalSet& other) const {
    const auto& a = intervals_;
    const auto& b = other.intervals_;
    double total = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      total += intersection_length(a[i], b[j]);
      if (a[i].end < b[j].end) {
        ++i;
      } else {
        ++j;
      }
    }
    return total;
  }

  friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

 private:
  std::vector<Interval> intervals_;
};

inline IntervalSet merge(std::span<const Interval> xs) { return IntervalSet::merge(xs); }

// IoU of two canonical sets. Empty vs anything (including empty) is 0.
// A set made only of zero-length points compares like iou() on points.
inline double set_iou(const IntervalSet& a, const IntervalSet& b) {
  if (a.empty() || b.empty()) return 0.0;
  const double inter = a.intersection_measure(b);
  const double uni = a.measure() + b.measure() - inter;
  if (uni <= 0.0) {
    return a == b ? 1.0 : 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace tempr
