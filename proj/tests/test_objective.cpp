#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "bluth/objective.hpp"
#include "support.hpp"

using namespace bluth;

namespace {

Scene scene_from(const std::vector<Vec>& pixels) {
  Scene s;
  s.rows = 1;
  s.cols = pixels.size();
  s.data.resize(pixels.front().size(), static_cast<Eigen::Index>(pixels.size()));
  for (std::size_t i = 0; i < pixels.size(); ++i) s.data.col(static_cast<Eigen::Index>(i)) = pixels[i];
  return s;
}

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST(ObjectiveConfig, GeometricLevelWeights) {
  ObjectiveConfig c;
  EXPECT_EQ(c.mu(1), 1.0);
  EXPECT_EQ(c.mu(2), 4.0);
  EXPECT_EQ(c.mu(3), 16.0);
  EXPECT_EQ(c.gamma(2), 0.0);
  const auto low = ObjectiveConfig::lowest_level_only(3);
  EXPECT_EQ(low.mu(1), 0.0);
  EXPECT_EQ(low.mu(2), 0.0);
  EXPECT_EQ(low.mu(3), 1.0);
}

TEST(BatchObjective, ExactModelHasZeroTotal) {
  const Vec s1 = v3(1, 0.2, 0.1), s2 = v3(0.1, 0.3, 1);
  BluthModel m(0.5 * (s1 + s2));
  m.split_node(0, init_split_from_spectra(s1, s2, 0.0), s1, s2);
  const Scene s = scene_from({s1, s2, s1, s2});
  const auto v = scene_objective(m, s, {});
  EXPECT_NEAR(v.total, 0.0, 1e-24);
  EXPECT_NEAR(v.lowest_level_data, 0.0, 1e-24);
}

TEST(BatchObjective, SinglePixelReducesToBinaryObjective) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const Vec sp = fixtures::random_positive(3, rng), sn = fixtures::random_positive(3, rng);
    BluthModel m(fixtures::random_positive(3, rng));
    SplitParams split{fixtures::random_positive(3, rng) - Vec::Constant(3, 0.5), 0.1};
    m.split_node(0, split, sp, sn);
    const Vec y = fixtures::random_positive(3, rng);
    const double gamma = 0.07;
    ObjectiveConfig cfg;
    cfg.sparsity_gains = {0.0, gamma};
    const auto v = batch_objective(m, scene_from({y}), std::vector<PixelIndex>{0}, cfg);
    EXPECT_NEAR(v.total, binary_objective(sp, sn, y, gamma, evaluate_split(split, y)), 1e-13);
  }
}

TEST(BatchObjective, MatchesDirectSummationOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 25; ++t) {
    const auto m = fixtures::random_model(5, 2 + t % 5, 4, rng);
    Scene s = fixtures::random_scene(5, 40, rng);
    s.weights = fixtures::random_positive(40, rng, 0.0, 2.0);
    ObjectiveConfig cfg;
    cfg.sparsity_gains = {0.0, 0.3, -0.2, 0.1, 0.05};
    std::vector<PixelIndex> px;
    for (PixelIndex n = 0; n < 40; n += 1 + t % 3) px.push_back(n);
    const double got = batch_objective(m, s, px, cfg).total;
    const double want = fixtures::naive_objective(m, s, px, cfg);
    EXPECT_LE(std::abs(got - want), 1e-10 * std::abs(want));
  }
}

TEST(BatchObjective, TotalIsSumOfTerms) {
  std::mt19937_64 rng(3);
  const auto m = fixtures::random_model(4, 5, 3, rng);
  const Scene s = fixtures::random_scene(4, 30, rng);
  ObjectiveConfig cfg;
  cfg.sparsity_gains = {0.0, 0.2, 0.2, 0.2};
  const auto v = scene_objective(m, s, cfg);
  double sum = 0.0;
  for (std::size_t i = 0; i < v.data_terms.size(); ++i) {
    EXPECT_GE(v.data_terms[i], 0.0);
    EXPECT_LE(v.penalty_terms[i], 0.0);
    sum += v.data_terms[i] + v.penalty_terms[i];
  }
  EXPECT_NEAR(v.total, sum, 1e-12 * std::abs(sum));
}

TEST(BatchObjective, WeightScalingScalesEveryField) {
  std::mt19937_64 rng(4);
  const auto m = fixtures::random_model(4, 4, 3, rng);
  Scene s = fixtures::random_scene(4, 25, rng);
  ObjectiveConfig cfg;
  cfg.sparsity_gains = {0.0, 0.1, 0.3, 0.2};
  const auto a = scene_objective(m, s, cfg);
  s.weights = Vec::Constant(25, 2.5);
  const auto b = scene_objective(m, s, cfg);
  EXPECT_NEAR(b.total, 2.5 * a.total, 1e-12 * std::abs(a.total));
  EXPECT_NEAR(b.lowest_level_data, 2.5 * a.lowest_level_data, 1e-12 * a.lowest_level_data);
  for (std::size_t i = 0; i < a.data_terms.size(); ++i) {
    EXPECT_NEAR(b.data_terms[i], 2.5 * a.data_terms[i], 1e-12 * std::max(1.0, a.data_terms[i]));
    EXPECT_NEAR(b.penalty_terms[i], 2.5 * a.penalty_terms[i], 1e-12 * std::max(1.0, -a.penalty_terms[i]));
  }
}

TEST(Ppp, AllSaturatedIsOne) {
  const Vec s1 = v3(1, 0, 0), s2 = v3(0, 1, 0);
  BluthModel m(v3(0.5, 0.5, 0));
  m.split_node(0, init_split_from_spectra(s1, s2, 0.0), s1, s2);
  EXPECT_EQ(ppp(m, scene_from({s1, s2, v3(2, 0, 0)}), 1), 1.0);
}

TEST(Ppp, AllHalfIsZero) {
  BluthModel m(v3(1, 1, 1));
  m.split_node(0, {Vec::Zero(3), 0.0}, v3(1, 0, 0), v3(0, 1, 0));
  std::mt19937_64 rng(5);
  EXPECT_EQ(ppp(m, fixtures::random_scene(3, 12, rng), 1), 0.0);
}

TEST(Ppp, HalfOneHotIsHalf) {
  const Vec s1 = v3(1, 0, 0), s2 = v3(0, 1, 0);
  BluthModel m(v3(0.5, 0.5, 0));
  m.split_node(0, init_split_from_spectra(s1, s2, 0.0), s1, s2);
  const Vec mid = 0.5 * (s1 + s2);
  EXPECT_EQ(ppp(m, scene_from({s1, mid, s2, mid}), 1), 0.5);
}

TEST(Ppp, InvariantUnderPixelOrder) {
  std::mt19937_64 rng(6);
  const auto m = fixtures::random_model(3, 4, 3, rng, 4.0);
  Scene s = fixtures::random_scene(3, 50, rng);
  const double a = ppp(m, s, 2);
  std::vector<Eigen::Index> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Scene t = s;
  for (Eigen::Index i = 0; i < 50; ++i) t.data.col(i) = s.data.col(perm[static_cast<std::size_t>(i)]);
  EXPECT_EQ(ppp(m, t, 2), a);
}

TEST(Ppp, LevelZeroRejected) {
  BluthModel m(v3(1, 1, 1));
  std::mt19937_64 rng(7);
  EXPECT_THROW(ppp(m, fixtures::random_scene(3, 4, rng), 0), ArgumentError);
}
