#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bluth/annealing.hpp"
#include "bluth/eval.hpp"
#include "support.hpp"

using namespace bluth;

namespace {

Scene small_synth(int p, std::size_t side, double snr, std::uint64_t seed, LabelSet* labels = nullptr) {
  SynthOptions opt;
  opt.bands = 16;
  auto [s, l] = synth_scene(p, side, side, snr, seed, opt);
  if (labels) *labels = std::move(l);
  return s;
}

void expect_simplex(const FlatModel& m) {
  for (Eigen::Index n = 0; n < m.abundances.cols(); ++n) {
    EXPECT_NEAR(m.abundances.col(n).sum(), 1.0, 1e-9);
    EXPECT_GE(m.abundances.col(n).minCoeff(), 0.0);
  }
}

}  // namespace

TEST(Metropolis, DecreaseAlwaysAccepted) {
  std::mt19937_64 rng(1);
  for (const double T : {0.0, 1e-6, 1.0, 1e6}) {
    EXPECT_TRUE(metropolis_accept(-1.0, T, rng));
    EXPECT_TRUE(metropolis_accept(0.0, T, rng));
  }
}

TEST(Metropolis, ZeroTemperatureRejectsEveryIncrease) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(metropolis_accept(1e-300 * (i + 1), 0.0, rng));
}

TEST(Metropolis, LogTwoGapAcceptsHalf) {
  std::mt19937_64 rng(3);
  const double T = 0.37;
  int accepted = 0;
  for (int i = 0; i < 10000; ++i) accepted += metropolis_accept(T * std::log(2.0), T, rng);
  EXPECT_NEAR(accepted / 10000.0, 0.5, 0.02);
}

TEST(Proposal, NormalizedRowAndUniformFallback) {
  Vec row(3);
  row << 1.0, 0.0, 3.0;
  const Vec p = proposal_probabilities(row);
  EXPECT_DOUBLE_EQ(p(0), 0.25);
  EXPECT_DOUBLE_EQ(p(1), 0.0);
  EXPECT_DOUBLE_EQ(p(2), 0.75);
  const Vec u = proposal_probabilities(Vec::Zero(4));
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(u(i), 0.25);
}

TEST(AnnealSchedule, GeometricDecayAndValidation) {
  AnnealSchedule s{2.0, 0.5, 10};
  EXPECT_DOUBLE_EQ(s.temperature(0), 2.0);
  EXPECT_DOUBLE_EQ(s.temperature(3), 0.25);
  EXPECT_NO_THROW(s.validate());
  EXPECT_THROW((AnnealSchedule{0.0, 0.5, 1}.validate()), ArgumentError);
  EXPECT_THROW((AnnealSchedule{1.0, 1.0, 1}.validate()), ArgumentError);
  EXPECT_THROW((AnnealSchedule{1.0, 0.0, 1}.validate()), ArgumentError);
}

TEST(Daaa, HighTemperatureGivesUniformAbundances) {
  std::mt19937_64 rng(4);
  const Scene s = fixtures::random_scene(3, 20, rng);
  const auto r = daaa(s, 2, AnnealSchedule{1e8, 0.99, 5}, 4);
  for (Eigen::Index n = 0; n < s.pixels(); ++n) {
    EXPECT_NEAR(r.model.abundances(0, n), 0.5, 1e-6);
    EXPECT_NEAR(r.model.abundances(1, n), 0.5, 1e-6);
  }
}

TEST(Daaa, IsSweepThenEndmemberUpdatesPerTemperature) {
  std::mt19937_64 rng(5);
  const Scene s = fixtures::random_scene(4, 25, rng);
  const AnnealSchedule sched{0.3, 0.5, 6};
  const auto r = daaa(s, 3, sched, 9);
  std::mt19937_64 start_rng(9);
  FlatModel m = detail::random_flat_start(s, 3, start_rng);
  for (int k = 0; k < 6; ++k) {
    quasibinary_sweep(s, m, -sched.temperature(k));
    for (Eigen::Index z = 0; z < 3; ++z) flat_aa_update(s, m, z);
  }
  EXPECT_EQ(r.model.spectra, m.spectra);
  EXPECT_EQ(r.model.abundances, m.abundances);
}

TEST(Daaa, SweepNeverIncreasesObjectiveAtFixedTemperature) {
  std::mt19937_64 rng(6);
  const Scene s = small_synth(3, 8, 30.0, 6);
  std::mt19937_64 start_rng(6);
  FlatModel m = detail::random_flat_start(s, 3, start_rng);
  const double T = 0.05;
  for (int k = 0; k < 200; ++k) {
    const double before = flat_objective(s, m, -T);
    quasibinary_sweep(s, m, -T);
    const double mid = flat_objective(s, m, -T);
    for (Eigen::Index z = 0; z < 3; ++z) flat_aa_update(s, m, z);
    const double after = flat_objective(s, m, -T);
    EXPECT_LE(mid, before + 1e-10 * std::abs(before));
    EXPECT_LE(after, mid + 1e-10 * std::abs(mid));
  }
  expect_simplex(m);
}

TEST(Daaa, RecoversNoiselessEndmembers) {
  LabelSet labels;
  const Scene s = small_synth(3, 12, std::numeric_limits<double>::infinity(), 7, &labels);
  const auto r = daaa(s, 3, AnnealSchedule{}, 7);
  expect_simplex(r.model);
  const auto rep = evaluate(r.model.spectra, r.model.abundances, labels);
  EXPECT_LT(rep.mean_angle(), 2.0);
  EXPECT_EQ(r.log.size(), 500u);
}

TEST(Daaa, RejectsSingleEndmember) {
  std::mt19937_64 rng(8);
  EXPECT_THROW(daaa(fixtures::random_scene(3, 10, rng), 1, {}, 0), ArgumentError);
}

TEST(Sappa, NegligibleTemperatureNeverAcceptsIncrease) {
  const Scene s = small_synth(3, 8, 30.0, 9);
  const auto r = sappa(s, 3, AnnealSchedule{1e-300, 0.9, 40}, 9);
  for (std::size_t k = 1; k < r.log.size(); ++k) EXPECT_LE(r.log[k].value.total, r.log[k - 1].value.total);
  expect_simplex(r.model);
  for (Eigen::Index z = 0; z < 3; ++z) {
    bool found = false;
    for (Eigen::Index n = 0; n < s.pixels() && !found; ++n) found = r.model.spectra.col(z) == s.pixel(n);
    EXPECT_TRUE(found);
  }
}

TEST(Sappa, SeededRunsAreIdentical) {
  const Scene s = small_synth(3, 8, 30.0, 10);
  const auto a = sappa(s, 3, AnnealSchedule{0.0, 0.9, 30}, 11);
  const auto b = sappa(s, 3, AnnealSchedule{0.0, 0.9, 30}, 11);
  EXPECT_EQ(a.model.spectra, b.model.spectra);
  EXPECT_EQ(a.model.abundances, b.model.abundances);
  EXPECT_EQ(a.accepted, b.accepted);
  expect_simplex(a.model);
}

TEST(Sappa, RequiresMorePixelsThanEndmembers) {
  std::mt19937_64 rng(12);
  EXPECT_THROW(sappa(fixtures::random_scene(3, 3, rng), 3, {}, 0), ArgumentError);
}
