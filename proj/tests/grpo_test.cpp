#include "tempr/grpo.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace tempr {
namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double popstd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / v.size());
}

TEST(GroupAdvantagesTest, Examples) {
  const auto a = group_advantages(std::vector<double>{2, 1, 0});
  EXPECT_NEAR(a[0], 1.224744871391589, 1e-12);
  EXPECT_EQ(a[1], 0.0);
  EXPECT_NEAR(a[2], -1.224744871391589, 1e-12);
  EXPECT_EQ(group_advantages(std::vector<double>{5, 5, 5, 5}), (std::vector<double>{0, 0, 0, 0}));
  const auto b = group_advantages(std::vector<double>{1, 0});
  EXPECT_DOUBLE_EQ(b[0], 1.0);
  EXPECT_DOUBLE_EQ(b[1], -1.0);
  EXPECT_THROW(group_advantages(std::vector<double>{1}), std::invalid_argument);
}

TEST(GroupAdvantagesTest, StdFloorBoundsTinySpread) {
  const auto a = group_advantages(std::vector<double>{0, 1e-9}, 1e-6);
  EXPECT_NEAR(a[1], 0.5e-9 / 1e-6, 1e-15);
}

TEST(GroupAdvantagesTest, NormalizedAndAffineInvariant) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> r(2 + rng() % 31);
    for (auto& x : r) x = u(rng);
    const auto a = group_advantages(r);
    EXPECT_LE(std::abs(mean_of(a)), 1e-9);
    EXPECT_LE(std::abs(popstd_of(a) - 1.0), 1e-9);
    const double scale = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
    const double shift = u(rng);
    std::vector<double> r2 = r;
    for (auto& x : r2) x = scale * x + shift;
    const auto a2 = group_advantages(r2);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], a2[i], 1e-9);
  }
}

TEST(ClippedObjectiveTest, Examples) {
  GrpoConfig cfg;
  cfg.kl_beta = 0.0;
  RolloutGroup on_policy = RolloutGroup::from_rewards({3, 1, 0, 2});
  EXPECT_NEAR(clipped_objective(on_policy, cfg, 0.0), 0.0, 1e-12);

  RolloutGroup g;
  g.advantages = {1.0};
  g.likelihood_ratios = {1.5};
  EXPECT_DOUBLE_EQ(clipped_objective(g, cfg, 0.0), 1.2);
  g.advantages = {-1.0};
  g.likelihood_ratios = {0.5};
  EXPECT_DOUBLE_EQ(clipped_objective(g, cfg, 0.0), -0.8);

  cfg.kl_beta = 0.5;
  EXPECT_DOUBLE_EQ(clipped_objective(g, cfg, 0.2), -0.9);
}

TEST(ClippedObjectiveTest, TermBoundedByClipRange) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> ratio(0.0, 3.0), adv(-3.0, 3.0);
  for (int k = 0; k < 1000; ++k) {
    const double r = ratio(rng), a = adv(rng);
    EXPECT_LE(clipped_term(r, a, 0.2), 1.2 * std::abs(a) + 1e-12);
  }
}

TEST(KlDivergenceTest, Examples) {
  const std::vector<double> p = {std::log(0.5), std::log(0.5)};
  EXPECT_EQ(kl_divergence(p, p), 0.0);
  EXPECT_NEAR(kl_divergence(p, std::vector<double>{std::log(0.75), std::log(0.25)}), 0.14384103622589042, 1e-12);
  const std::vector<double> point = {0.0, -std::numeric_limits<double>::infinity()};
  EXPECT_NEAR(kl_divergence(point, p), std::log(2.0), 1e-12);
  EXPECT_THROW(kl_divergence(p, std::vector<double>{0.0}), std::invalid_argument);
}

TEST(GrpoConfigTest, Validation) {
  GrpoConfig c;
  EXPECT_NO_THROW(c.validate());
  c.clip_eps = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.group_size = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.kl_beta = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace tempr
