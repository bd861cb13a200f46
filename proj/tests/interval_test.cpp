#include "tempr/interval.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "test_util.hpp"

namespace tempr {
namespace {

TEST(IouTest, Examples) {
  EXPECT_DOUBLE_EQ(iou({0, 10}, {0, 10}), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 10}, {20, 30}), 0.0);
  EXPECT_NEAR(iou({0, 10}, {5, 15}), 1.0 / 3.0, 1e-12);
}

TEST(IouTest, DegenerateIntervals) {
  EXPECT_EQ(iou({3, 3}, {3, 3}), 1.0);
  EXPECT_EQ(iou({3, 3}, {4, 4}), 0.0);
  EXPECT_EQ(iou({3, 3}, {0, 10}), 0.0);
  // touching intervals share no measure
  EXPECT_EQ(iou({0, 5}, {5, 10}), 0.0);
}

TEST(IouTest, SymmetricAndReflexive) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 2000; ++k) {
    const Interval a = testing::random_interval(rng);
    const Interval b = testing::random_interval(rng);
    EXPECT_EQ(iou(a, b), iou(b, a));
    const double v = iou(a, b);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    if (a.length() > 0) {
      EXPECT_EQ(iou(a, a), 1.0);
    }
  }
}

TEST(IntervalTest, MakeRejectsInvalid) {
  EXPECT_THROW(Interval::make(5, 4), std::invalid_argument);
  EXPECT_THROW(Interval::make(-1, 4), std::invalid_argument);
  EXPECT_THROW(Interval::make(0, std::numeric_limits<double>::infinity()), std::invalid_argument);
  EXPECT_NO_THROW(Interval::make(2, 2));
}

TEST(MergeTest, Examples) {
  const std::vector<Interval> xs = {{0, 2}, {1, 5}, {7, 8}};
  EXPECT_EQ(merge(xs).intervals(), (std::vector<Interval>{{0, 5}, {7, 8}}));
  EXPECT_TRUE(merge(std::vector<Interval>{}).empty());
  EXPECT_EQ(merge(std::vector<Interval>{{3, 4}}).intervals(), (std::vector<Interval>{{3, 4}}));
}

TEST(MergeTest, AdjacentIntervalsFuse) {
  EXPECT_EQ(merge(std::vector<Interval>{{4, 6}, {0, 2}, {2, 4}}).intervals(), (std::vector<Interval>{{0, 6}}));
}

TEST(MergeTest, IdempotentAndMeasureBound) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 500; ++k) {
    const auto xs = testing::random_intervals(rng, 1 + rng() % 8);
    const IntervalSet m = merge(xs);
    EXPECT_EQ(merge(m.intervals()), m);
    double total = 0.0;
    for (const auto& x : xs) total += x.length();
    EXPECT_LE(m.measure(), total + 1e-9);
    for (std::size_t i = 1; i < m.size(); ++i) EXPECT_LT(m.intervals()[i - 1].end, m.intervals()[i].start);
  }
}

TEST(MergeTest, MeasureEqualsSumForDisjoint) {
  const std::vector<Interval> xs = {{10, 12}, {0, 3}, {5, 6}};
  EXPECT_DOUBLE_EQ(merge(xs).measure(), 6.0);
}

TEST(SetIouTest, Examples) {
  const auto a = merge(std::vector<Interval>{{0, 2}, {4, 6}});
  const auto b = merge(std::vector<Interval>{{1, 5}});
  EXPECT_NEAR(set_iou(a, b), 1.0 / 3.0, 1e-12);
  const auto c = merge(std::vector<Interval>{{0, 3}});
  EXPECT_EQ(set_iou(c, c), 1.0);
  EXPECT_EQ(set_iou(IntervalSet{}, c), 0.0);
  EXPECT_EQ(set_iou(IntervalSet{}, IntervalSet{}), 0.0);
}

// Unit-cell coverage count on the integer grid.
double grid_set_iou(const std::vector<Interval>& a, const std::vector<Interval>& b, int horizon) {
  int inter = 0, uni = 0;
  for (int c = 0; c < horizon; ++c) {
    const double mid = c + 0.5;
    auto covers = [&](const std::vector<Interval>& xs) {
      for (const auto& x : xs)
        if (x.start <= mid && mid <= x.end) return true;
      return false;
    };
    const bool in_a = covers(a), in_b = covers(b);
    inter += in_a && in_b;
    uni += in_a || in_b;
  }
  return uni ? static_cast<double>(inter) / uni : 0.0;
}

TEST(SetIouTest, MatchesGridOracle) {
  std::mt19937_64 rng(3);
  constexpr int kHorizon = 40;
  for (int k = 0; k < 1000; ++k) {
    std::vector<Interval> a, b;
    for (std::size_t i = 0, n = 1 + rng() % 5; i < n; ++i) a.push_back(testing::random_grid_interval(rng, kHorizon));
    for (std::size_t i = 0, n = 1 + rng() % 5; i < n; ++i) b.push_back(testing::random_grid_interval(rng, kHorizon));
    EXPECT_NEAR(set_iou(merge(a), merge(b)), grid_set_iou(a, b, kHorizon), 1e-6);
  }
}

TEST(SetIouTest, OneIffSamePointSet) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 500; ++k) {
    std::vector<Interval> a;
    for (std::size_t i = 0, n = 1 + rng() % 4; i < n; ++i) a.push_back(testing::random_grid_interval(rng));
    // Same point set written differently: split every interval at its midpoint.
    std::vector<Interval> split;
    for (const auto& x : a) {
      const double mid = (x.start + x.end) / 2;
      split.push_back({mid, x.end});
      split.push_back({x.start, mid});
    }
    EXPECT_EQ(set_iou(merge(a), merge(split)), 1.0);
    std::vector<Interval> grown = a;
    grown.push_back({41, 42});
    EXPECT_LT(set_iou(merge(a), merge(grown)), 1.0);
  }
}

}  // namespace
}  // namespace tempr
