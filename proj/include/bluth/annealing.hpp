#pragma once

// Flat (non-hierarchical) annealing baselines: deterministic annealing
// archetypal analysis (DAAA) and simulated annealing pure pixel analysis
// (SAPPA).

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bluth/errors.hpp"
#include "bluth/objective.hpp"
#include "bluth/scene.hpp"
#include "bluth/spectra_update.hpp"
#include "bluth/training.hpp"

namespace bluth {

struct AnnealSchedule {
  double t_initial = 0.0;  // 0: data term of the uniform-abundance start divided by N
  double decay = 0.95;
  int iterations = 500;

  double temperature(int k) const { return t_initial * std::pow(decay, k); }

  void validate() const {
    if (!(t_initial > 0.0) || !std::isfinite(t_initial)) throw ArgumentError("t_initial must be positive");
    if (!(decay > 0.0 && decay < 1.0)) throw ArgumentError("decay must lie in (0, 1)");
    if (iterations < 0) throw ArgumentError("iterations must be nonnegative");
  }
};

/// Endmember spectra (B x P) and simplex abundances (P x N).
struct FlatModel {
  Mat spectra;
  Mat abundances;
};

struct AnnealResult {
  FlatModel model;
  std::vector<ProgressEntry> log;
  int accepted = 0;
  int proposed = 0;
};

/// sum_n w_n (|y_n - S a_n|^2 - gamma |a_n|^2).
inline double flat_objective(const Scene& scene, const FlatModel& m, double gamma) {
  double f = 0.0;
  for (Eigen::Index n = 0; n < scene.pixels(); ++n) {
    const auto a = m.abundances.col(n);
    f += scene.weight(n) * ((scene.pixel(n) - m.spectra * a).squaredNorm() - gamma * a.squaredNorm());
  }
  return f;
}

/// Proposal distribution a_zn / sum_j a_zj, uniform when the row is all zero.
inline Vec proposal_probabilities(const Eigen::Ref<const Vec>& row) {
  const double s = row.sum();
  if (!(s > 0.0)) return Vec::Constant(row.size(), 1.0 / static_cast<double>(row.size()));
  return row / s;
}

/// Metropolis rule: always accept a decrease; otherwise accept with
/// probability exp(-delta / T), never when T = 0.
inline bool metropolis_accept(double delta, double temperature, std::mt19937_64& rng) {
  if (delta <= 0.0) return true;
  if (!(temperature > 0.0)) return false;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < std::exp(-delta / temperature);
}

/// One cyclic quasibinary sweep over the endmembers of every pixel.
inline void quasibinary_sweep(const Scene& scene, FlatModel& m, double gamma) {
  const Eigen::Index P = m.spectra.cols();
  for (Eigen::Index n = 0; n < scene.pixels(); ++n) {
    Vec a = m.abundances.col(n);
    for (Eigen::Index z = 0; z < P; ++z) a = quasibinary_abundance(scene.pixel(n), m.spectra, a, z, gamma);
    m.abundances.col(n) = a;
  }
}

/// Archetypal-analysis update of endmember `z` over all pixels.
inline void flat_aa_update(const Scene& scene, FlatModel& m, Eigen::Index z) {
  const auto N = scene.pixels();
  SpectrumStats st;
  st.G = Vec::Zero(scene.bands());
  st.g = Mat::Zero(scene.bands(), N);
  st.a2.assign(static_cast<std::size_t>(N), 0.0);
  for (Eigen::Index n = 0; n < N; ++n) {
    const double a = m.abundances(z, n);
    const double wn = scene.weight(n);
    if (a == 0.0 || wn == 0.0) continue;
    st.g.col(n) = wn * a * (scene.pixel(n) - m.spectra * m.abundances.col(n));
    st.a2[static_cast<std::size_t>(n)] = wn * a * a;
    st.G += st.g.col(n);
    st.A2 += st.a2[static_cast<std::size_t>(n)];
  }
  if (!(st.A2 > 0.0)) return;
  const auto px = all_pixels(scene);
  const Vec s = m.spectra.col(z);
  const auto best = detail::best_aa(s, scene, px, st);
  if (!best || !(best->delta < 0.0)) return;
  m.spectra.col(z) = (1.0 - best->b) * s + best->b * scene.pixel(px[best->batch_pos]);
}

namespace detail {

// p distinct pixels drawn uniformly, uniform abundances.
inline FlatModel random_flat_start(const Scene& scene, int p, std::mt19937_64& rng) {
  std::vector<PixelIndex> idx = all_pixels(scene);
  std::shuffle(idx.begin(), idx.end(), rng);
  FlatModel m;
  m.spectra.resize(scene.bands(), p);
  int filled = 0;
  for (const PixelIndex n : idx) {
    bool dup = false;
    for (int k = 0; k < filled && !dup; ++k) dup = m.spectra.col(k) == scene.pixel(n);
    if (dup) continue;
    m.spectra.col(filled++) = scene.pixel(n);
    if (filled == p) break;
  }
  if (filled < p) throw ArgumentError("scene has fewer distinct pixels than endmembers");
  m.abundances = Mat::Constant(p, scene.pixels(), 1.0 / p);
  return m;
}

inline AnnealSchedule resolve_schedule(AnnealSchedule s, const Scene& scene, const FlatModel& start) {
  if (s.t_initial == 0.0) s.t_initial = flat_objective(scene, start, 0.0) / static_cast<double>(scene.pixels());
  if (!(s.t_initial > 0.0)) s.t_initial = 1e-12;
  s.validate();
  return s;
}

inline ProgressEntry anneal_entry(const char* stage, int k, double gamma, double data, double penalty,
                                  std::chrono::steady_clock::time_point start, double weight_sum) {
  ProgressEntry e;
  e.stage = stage;
  e.modality = "anneal";
  e.step = k;
  e.gamma = gamma;
  e.value.data_terms = {data};
  e.value.penalty_terms = {penalty};
  e.value.total = data + penalty;
  e.value.lowest_level_data = data;
  e.value.weight_sum = weight_sum;
  e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return e;
}

inline double weight_sum(const Scene& s) {
  double w = 0.0;
  for (Eigen::Index n = 0; n < s.pixels(); ++n) w += s.weight(n);
  return w;
}

}  // namespace detail

/// Deterministic annealing: at each temperature T a quasibinary abundance
/// sweep with gamma = -T followed by an AA sweep over the endmembers.
inline AnnealResult daaa(const Scene& scene, int p, AnnealSchedule schedule, std::uint64_t seed) {
  if (p < 2) throw ArgumentError("daaa requires p >= 2");
  scene.validate();
  std::mt19937_64 rng(seed);
  const auto start = std::chrono::steady_clock::now();
  AnnealResult r;
  r.model = detail::random_flat_start(scene, p, rng);
  schedule = detail::resolve_schedule(schedule, scene, r.model);
  const double ws = detail::weight_sum(scene);
  for (int k = 0; k < schedule.iterations; ++k) {
    const double T = schedule.temperature(k);
    quasibinary_sweep(scene, r.model, -T);
    for (Eigen::Index z = 0; z < p; ++z) flat_aa_update(scene, r.model, z);
    const double data = flat_objective(scene, r.model, 0.0);
    r.log.push_back(detail::anneal_entry("daaa", k, -T, data, flat_objective(scene, r.model, -T) - data, start, ws));
  }
  return r;
}

/// Simulated annealing over pure-pixel endmember choices.
inline AnnealResult sappa(const Scene& scene, int p, AnnealSchedule schedule, std::uint64_t seed) {
  if (p < 2) throw ArgumentError("sappa requires p >= 2");
  scene.validate();
  if (scene.pixels() <= p) throw ArgumentError("sappa requires more pixels than endmembers");
  std::mt19937_64 rng(seed);
  const auto start = std::chrono::steady_clock::now();
  AnnealResult r;
  r.model = detail::random_flat_start(scene, p, rng);
  schedule = detail::resolve_schedule(schedule, scene, r.model);
  quasibinary_sweep(scene, r.model, 0.0);
  double current = flat_objective(scene, r.model, 0.0);
  const double ws = detail::weight_sum(scene);
  for (int k = 0; k < schedule.iterations; ++k) {
    const double T = schedule.temperature(k);
    for (Eigen::Index z = 0; z < p; ++z) {
      const Vec prob = proposal_probabilities(r.model.abundances.row(z).transpose());
      std::discrete_distribution<Eigen::Index> pick(prob.data(), prob.data() + prob.size());
      const Eigen::Index n = pick(rng);
      bool clash = false;
      for (Eigen::Index j = 0; j < p && !clash; ++j) clash = j != z && r.model.spectra.col(j) == scene.pixel(n);
      ++r.proposed;
      if (clash) continue;
      FlatModel trial = r.model;
      trial.spectra.col(z) = scene.pixel(n);
      quasibinary_sweep(scene, trial, 0.0);
      const double f = flat_objective(scene, trial, 0.0);
      if (metropolis_accept(f - current, T, rng)) {
        r.model = std::move(trial);
        current = f;
        ++r.accepted;
      }
    }
    r.log.push_back(detail::anneal_entry("sappa", k, 0.0, current, 0.0, start, ws));
  }
  return r;
}

}  // namespace bluth
