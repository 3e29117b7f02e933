#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bluth/eval.hpp"
#include "bluth/hierarchy.hpp"
#include "support.hpp"

using namespace bluth;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

double total_angle(const Mat& est, const Mat& lab, const Assignment& a) {
  double s = 0.0;
  for (const auto& [e, l] : a) s += spectral_angle(est.col(e), lab.col(l));
  return s;
}

// Minimum total angle over all injections of labels into estimates.
double brute_force(const Mat& est, const Mat& lab) {
  std::vector<int> perm(static_cast<std::size_t>(est.cols()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (Eigen::Index k = 0; k < lab.cols(); ++k) s += spectral_angle(est.col(perm[static_cast<std::size_t>(k)]), lab.col(k));
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST(SpectralAngle, WorkedValues) {
  EXPECT_EQ(spectral_angle(v2(1, 2), v2(1, 2)), 0.0);
  EXPECT_NEAR(spectral_angle(v2(1, 0), v2(0, 1)), 90.0, 1e-12);
  EXPECT_NEAR(spectral_angle(v2(1, 0), v2(1, 1)), 45.0, 1e-12);
}

TEST(SpectralAngle, SymmetricAndScaleInvariant) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const Vec a = fixtures::random_positive(6, rng), b = fixtures::random_positive(6, rng);
    const double ab = spectral_angle(a, b);
    EXPECT_EQ(ab, spectral_angle(b, a));
    EXPECT_NEAR(spectral_angle(3.7 * a, 0.2 * b), ab, 1e-9);
  }
}

TEST(SpectralAngle, ClampsRoundingAndRejectsZero) {
  const Vec a = v2(0.1, 0.7);
  EXPECT_FALSE(std::isnan(spectral_angle(a, a * (1.0 + 1e-16))));
  EXPECT_THROW(spectral_angle(Vec::Zero(2), a), ArgumentError);
}

TEST(Iou, WorkedValues) {
  EXPECT_EQ(iou(v2(0.3, 0.9), v2(0.3, 0.9)), 1.0);
  EXPECT_EQ(iou(v2(1, 0), v2(0, 1)), 0.0);
  EXPECT_NEAR(iou(v2(0.5, 0.5), v2(1.0, 0.0)), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(iou(Vec::Zero(3), Vec::Zero(3)), 1.0);
}

TEST(Iou, SymmetricAndPermutationInvariant) {
  std::mt19937_64 rng(2);
  const Vec a = fixtures::random_positive(30, rng, 0.0, 1.0), b = fixtures::random_positive(30, rng, 0.0, 1.0);
  EXPECT_EQ(iou(a, b), iou(b, a));
  std::vector<int> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Vec pa(30), pb(30);
  for (int i = 0; i < 30; ++i) {
    pa(i) = a(perm[static_cast<std::size_t>(i)]);
    pb(i) = b(perm[static_cast<std::size_t>(i)]);
  }
  EXPECT_NEAR(iou(pa, pb), iou(a, b), 1e-14);
}

TEST(Match, SinglePair) {
  Mat e(2, 1), l(2, 1);
  e << 1, 0;
  l << 0, 1;
  const auto a = match_endmembers(e, l);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0], std::make_pair(0, 0));
}

TEST(Match, RecoversPermutation) {
  std::mt19937_64 rng(3);
  Mat est(5, 6);
  for (Eigen::Index k = 0; k < 6; ++k) est.col(k) = fixtures::random_positive(5, rng);
  const std::vector<int> perm{3, 0, 5, 1, 4, 2};
  Mat lab(5, 6);
  for (int k = 0; k < 6; ++k) lab.col(k) = est.col(perm[static_cast<std::size_t>(k)]);
  const auto a = match_endmembers(est, lab);
  ASSERT_EQ(a.size(), 6u);
  for (const auto& [e, l] : a) EXPECT_EQ(e, perm[static_cast<std::size_t>(l)]);
  EXPECT_NEAR(total_angle(est, lab, a), 0.0, 1e-6);
}

TEST(Match, EqualsBruteForceOnRandomSquares) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 30; ++t) {
    Mat est(4, 4), lab(4, 4);
    for (Eigen::Index k = 0; k < 4; ++k) {
      est.col(k) = fixtures::random_positive(4, rng);
      lab.col(k) = fixtures::random_positive(4, rng);
    }
    EXPECT_NEAR(total_angle(est, lab, match_endmembers(est, lab)), brute_force(est, lab), 1e-9);
  }
}

TEST(Match, AugmentingPathMatchesExhaustiveOnLargeSets) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    Mat cost(9, 9);
    for (Eigen::Index i = 0; i < 9; ++i)
      for (Eigen::Index j = 0; j < 9; ++j) cost(i, j) = std::uniform_real_distribution<double>(0, 90)(rng);
    const auto h = detail::hungarian(cost);
    const auto x = detail::exhaustive_assignment(cost);
    double ch = 0, cx = 0;
    for (int i = 0; i < 9; ++i) {
      ch += cost(i, h[static_cast<std::size_t>(i)]);
      cx += cost(i, x[static_cast<std::size_t>(i)]);
    }
    EXPECT_NEAR(ch, cx, 1e-9);
  }
}

TEST(Match, RectangularAndOrderInvariant) {
  std::mt19937_64 rng(6);
  Mat est(4, 6), lab(4, 3);
  for (Eigen::Index k = 0; k < 6; ++k) est.col(k) = fixtures::random_positive(4, rng);
  for (Eigen::Index k = 0; k < 3; ++k) lab.col(k) = fixtures::random_positive(4, rng);
  const auto a = match_endmembers(est, lab);
  EXPECT_EQ(a.size(), 3u);
  const auto b = match_endmembers(lab, est);
  EXPECT_EQ(b.size(), 3u);
  EXPECT_NEAR(total_angle(est, lab, a), total_angle(lab, est, b), 1e-9);
  const Mat rev = est.rowwise().reverse();  // reverses the column order
  EXPECT_NEAR(total_angle(rev, lab, match_endmembers(rev, lab)), total_angle(est, lab, a), 1e-9);
}

TEST(MissedCount, Examples) {
  EXPECT_EQ(missed_count({{3.0, 40.0, 7.0}}), std::vector<int>{0});
  EXPECT_EQ(missed_count({{3.0}, {20.0}}), (std::vector<int>{0, 1}));
  EXPECT_EQ(missed_count({{3.0}, {12.9}}), (std::vector<int>{0, 0}));
  EXPECT_THROW(missed_count({}), ArgumentError);
}

TEST(Evaluate, SelfEvaluationIsPerfect) {
  std::mt19937_64 rng(7);
  const auto m = fixtures::random_model(5, 4, 3, rng, 2.0);
  const Scene s = fixtures::random_scene(5, 40, rng);
  const int level = m.max_depth();
  LabelSet labels;
  labels.abundances = abundance_maps(m, s.data, level);
  labels.spectra = frontier_spectra(m, level);
  const auto r = evaluate(*labels.spectra, labels.abundances, labels, "self");
  ASSERT_EQ(r.pairs.size(), 4u);
  for (const auto& p : r.pairs) {
    EXPECT_EQ(p.estimate, p.label);
    EXPECT_EQ(p.angle_deg, 0.0);
    EXPECT_EQ(p.iou, 1.0);
  }
}

TEST(Evaluate, TallyAndCsv) {
  Mat lab(2, 2);
  lab << 1, 0, 0, 1;
  LabelSet labels;
  labels.spectra = lab;
  labels.abundances = Mat::Identity(2, 2);
  labels.names = {"a", "b"};
  Mat good = lab, bad(2, 2);
  bad << 1, 1, 0, 0.2;
  std::vector<EvalReport> reps{evaluate(good, Mat::Identity(2, 2), labels, "good"),
                               evaluate(bad, Mat::Identity(2, 2), labels, "bad")};
  tally_misses(reps, 2);
  EXPECT_EQ(reps[0].missed, 0);
  EXPECT_EQ(reps[1].missed, 1);
  const auto csv = report_csv(reps);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "technique,estimate,label,name,angle_deg,iou");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}
