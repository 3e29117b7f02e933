#pragma once

// Sparsity-modulation modalities (equilibrate, sparsify, shake,
// de-sparsify), greedy tree growth and fine-tuning.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bluth/descent.hpp"
#include "bluth/errors.hpp"
#include "bluth/hierarchy.hpp"
#include "bluth/max_margin.hpp"
#include "bluth/objective.hpp"
#include "bluth/scene.hpp"
#include "bluth/spectra_update.hpp"

namespace bluth {

struct TrainerConfig {
  int n_runs = 10;
  double ppp_setpoint = 0.5;
  std::size_t batch_standard = 0;  // 0: min(N, 1024)
  std::size_t batch_large = 0;     // 0: min(N, 8 * batch_standard)
  int target_endmembers = 4;
  std::uint64_t seed = 0;
  int max_sparsify_sets = 100;
  int max_shake_cycles = 20;
  int desparsify_steps = 0;  // 0: n_runs
  int pure_pixel_rounds = 50;
  int cluster_iterations = 20;
  ObjectiveConfig objective;

  std::size_t standard_batch(Eigen::Index pixels) const {
    const auto n = static_cast<std::size_t>(pixels);
    return std::min(n, batch_standard ? batch_standard : std::size_t{1024});
  }

  std::size_t large_batch(Eigen::Index pixels) const {
    const auto n = static_cast<std::size_t>(pixels);
    return std::min(n, batch_large ? batch_large : 8 * standard_batch(pixels));
  }

  int desparsify_count() const { return desparsify_steps > 0 ? desparsify_steps : n_runs; }

  void validate(Eigen::Index pixels) const {
    if (n_runs < 0) throw ArgumentError("n_runs must be nonnegative");
    if (!(ppp_setpoint > 0.0 && ppp_setpoint <= 1.0)) throw ArgumentError("ppp_setpoint must lie in (0, 1]");
    if (target_endmembers < 1) throw ArgumentError("target_endmembers must be >= 1");
    if (standard_batch(pixels) <= static_cast<std::size_t>(target_endmembers))
      throw ArgumentError("batch_standard must exceed target_endmembers");
    if (max_sparsify_sets < 1 || max_shake_cycles < 1 || pure_pixel_rounds < 1 || cluster_iterations < 1)
      throw ArgumentError("iteration caps must be positive");
  }
};

/// Uniform sampling without replacement from a pixel pool, reshuffled each
/// epoch. A pool no larger than the batch is returned whole.
class BatchSampler {
 public:
  BatchSampler() = default;
  BatchSampler(PixelSet pool, std::size_t size, std::uint64_t seed)
      : pool_(std::move(pool)), size_(size), rng_(seed), cursor_(pool_.size()) {}

  std::size_t batch_size() const { return std::min(size_, pool_.size()); }

  PixelSet next() {
    if (pool_.size() <= size_) return pool_;
    if (cursor_ + size_ > pool_.size()) {
      std::shuffle(pool_.begin(), pool_.end(), rng_);
      cursor_ = 0;
    }
    PixelSet out(pool_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                 pool_.begin() + static_cast<std::ptrdiff_t>(cursor_ + size_));
    cursor_ += size_;
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  PixelSet pool_;
  std::size_t size_ = 0;
  std::mt19937_64 rng_;
  std::size_t cursor_ = 0;
};

struct ProgressEntry {
  std::string stage;
  std::string modality;
  int step = 0;
  double gamma = 0.0;
  ObjectiveValue value;
  std::vector<double> ppp;  // levels 1..M on the batch
  double seconds = 0.0;
};

struct SparsifyState {
  double gamma_max = 0.0;
  double step = 0.0;
  double multiplier = 2.0;
  std::vector<int> active_levels;
  int sets = 0;
};

/// Initial SpM gain: G_ll / (mean sum a^2 - 1/P), capped at 1e6 G_ll.
inline double sparsify_gamma_max(double g_ll, double mean_abundance_sq, int p) {
  const double cap = 1e6 * g_ll;
  const double den = mean_abundance_sq - 1.0 / static_cast<double>(p);
  if (!(den > 0.0)) return cap;
  return std::min(g_ll / den, cap);
}

/// Gain multiplier after a SpM set: 2 with no PPP change, 1.1 when the
/// change closes the gap to the setpoint, linear in between.
inline double ppp_multiplier(double delta_ppp, double gap) {
  if (!(gap > 0.0)) return 1.1;
  return std::clamp(2.0 - 0.9 * delta_ppp / gap, 1.1, 2.0);
}

/// Fraction of pixels with a unit abundance at each of `levels`, in one pass.
inline std::vector<double> level_ppp(const BluthModel& model, const Scene& scene, std::span<const PixelIndex> subset,
                                     const std::vector<int>& levels) {
  std::vector<std::vector<int>> fronts;
  for (const int l : levels) fronts.push_back(model.frontier(l));
  std::vector<std::size_t> pure(levels.size(), 0);
  PixelEval ev;
  for (const PixelIndex n : subset) {
    model.evaluate(scene.pixel(n), ev);
    for (std::size_t k = 0; k < levels.size(); ++k)
      for (const int id : fronts[k])
        if (ev.a[static_cast<std::size_t>(id)] == 1.0) {
          ++pure[k];
          break;
        }
  }
  std::vector<double> out(levels.size(), 0.0);
  if (!subset.empty())
    for (std::size_t k = 0; k < levels.size(); ++k)
      out[k] = static_cast<double>(pure[k]) / static_cast<double>(subset.size());
  return out;
}

struct TwoMeans {
  Vec mean_pos;
  Vec mean_neg;
  std::vector<int> label;  // +1 / -1 per input pixel
};

/// Two-centroid Lloyd iteration, seeded with the pair of pixels farthest
/// apart in spectral angle (exact up to 4096 pixels, two sweeps beyond).
inline TwoMeans two_means(const Scene& scene, std::span<const PixelIndex> pixels, int iterations) {
  if (pixels.size() < 2) throw ArgumentError("two_means needs at least two pixels");
  const auto n = pixels.size();
  Mat unit(scene.bands(), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = scene.pixel(pixels[i]);
    const double nn = y.norm();
    unit.col(static_cast<Eigen::Index>(i)) = nn > 0.0 ? Vec(y / nn) : Vec(y);
  }
  std::size_t ia = 0, ib = 1;
  if (n <= 4096) {
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec c = unit.rightCols(static_cast<Eigen::Index>(n - i - 1)).transpose() * unit.col(static_cast<Eigen::Index>(i));
      for (Eigen::Index k = 0; k < c.size(); ++k)
        if (c(k) < lowest) {
          lowest = c(k);
          ia = i;
          ib = i + 1 + static_cast<std::size_t>(k);
        }
    }
  } else {
    Eigen::Index k;
    (unit.transpose() * unit.col(0)).minCoeff(&k);
    ia = static_cast<std::size_t>(k);
    (unit.transpose() * unit.col(k)).minCoeff(&k);
    ib = static_cast<std::size_t>(k);
  }

  TwoMeans out;
  out.mean_pos = scene.pixel(pixels[ia]);
  out.mean_neg = scene.pixel(pixels[ib]);
  out.label.assign(n, 0);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = scene.pixel(pixels[i]);
      const int l = (y - out.mean_pos).squaredNorm() <= (y - out.mean_neg).squaredNorm() ? 1 : -1;
      changed |= l != out.label[i];
      out.label[i] = l;
    }
    if (!changed) break;
    Vec sp = Vec::Zero(scene.bands()), sn = Vec::Zero(scene.bands());
    std::size_t cp = 0, cn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (out.label[i] > 0) {
        sp += scene.pixel(pixels[i]);
        ++cp;
      } else {
        sn += scene.pixel(pixels[i]);
        ++cn;
      }
    }
    if (cp) out.mean_pos = sp / static_cast<double>(cp);
    if (cn) out.mean_neg = sn / static_cast<double>(cn);
  }
  return out;
}

/// One candidate copy of a growth round.
struct GrowthCandidate {
  int leaf = -1;
  bool skipped = false;
  std::string reason;
  BluthModel model;
  double score = std::numeric_limits<double>::infinity();  // lowest-level data term on the scene
};

struct GrowthRound {
  std::vector<GrowthCandidate> candidates;
  int selected = -1;  // index into candidates
};

struct FineTuneResult {
  BluthModel model_ppa;
  BluthModel model_aa;
};

/// Options for one equilibrate call.
struct EquilibrateOptions {
  bool update_spectra = true;
  std::function<bool(int)> split_filter;
  std::function<bool(int)> spectrum_filter;
  BatchSampler* sampler = nullptr;        // default: the standard sampler
  const ObjectiveConfig* base = nullptr;  // default: the trainer objective
  std::vector<int> gamma_levels;          // empty: all objective levels
  std::string modality = "EqM";
};

/// Runs the sparsity-modulation schedules on a fixed, already normalized
/// scene. All randomness comes from the seeded batch samplers.
class Trainer {
 public:
  Trainer(const Scene& scene, TrainerConfig config)
      : scene_(scene), cfg_(std::move(config)), rng_(cfg_.seed), start_(std::chrono::steady_clock::now()) {
    scene_.validate();
    cfg_.validate(scene_.pixels());
    standard_ = BatchSampler(all_pixels(scene_), cfg_.standard_batch(scene_.pixels()), rng_());
    large_ = BatchSampler(all_pixels(scene_), cfg_.large_batch(scene_.pixels()), rng_());
  }

  const TrainerConfig& config() const { return cfg_; }
  const std::vector<ProgressEntry>& log() const { return log_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  SpectralMode mode() const { return mode_; }
  void set_mode(SpectralMode m) { mode_ = m; }
  void set_stage(std::string s) { stage_ = std::move(s); }

  /// Per-level sparsity gains gamma * mu_m on `levels` (all objective levels if empty).
  std::vector<double> gains(const BluthModel& model, const ObjectiveConfig& base, double gamma,
                            const std::vector<int>& levels) const {
    std::vector<double> g(static_cast<std::size_t>(model.max_depth()) + 1, 0.0);
    const auto use = levels.empty() ? objective_levels(model) : levels;
    for (const int m : use)
      if (m >= 0 && m < static_cast<int>(g.size())) g[static_cast<std::size_t>(m)] = gamma * base.mu(m);
    return g;
  }

  /// One alternating step at fixed gamma: a block pass over the splits,
  /// then one spectral update per node.
  ObjectiveValue step(BluthModel& model, double gamma, const EquilibrateOptions& opt, int index) {
    BatchSampler& sampler = opt.sampler ? *opt.sampler : standard_;
    const ObjectiveConfig& base = opt.base ? *opt.base : cfg_.objective;
    const ObjectiveConfig cfg = base.with_gains(gains(model, base, gamma, opt.gamma_levels));
    const PixelSet batch = sampler.next();
    ObjectiveValue v = block_update_pass(model, scene_, batch, cfg, opt.split_filter);
    if (opt.update_spectra && static_cast<int>(batch.size()) > model.leaf_count()) {
      for (const int id : model.nodes_by_depth()) {
        if (opt.spectrum_filter && !opt.spectrum_filter(id)) continue;
        spectral_update(model, scene_, batch, id, cfg, mode_);
      }
    }
    record(model, batch, opt.modality, index, gamma, v);
    return v;
  }

  /// n_runs alternating steps at constant gamma. Returns the per-step objectives.
  std::vector<ObjectiveValue> equilibrate(BluthModel& model, double gamma, int n_runs,
                                          const EquilibrateOptions& opt = {}) {
    std::vector<ObjectiveValue> out;
    for (int i = 0; i < n_runs; ++i) out.push_back(step(model, gamma, opt, i));
    return out;
  }

  /// Scene-wide G_ll (per-pixel lowest-level data term) and mean sum of
  /// squared lowest-level abundances.
  std::pair<double, double> lowest_level_stats(const BluthModel& model) const {
    const auto v = scene_objective(model, scene_, cfg_.objective);
    const double ws = v.weight_sum > 0.0 ? v.weight_sum : 1.0;
    return {v.lowest_level_data / ws, v.lowest_level_abundance_sq / ws};
  }

  double gamma_max(const BluthModel& model) const {
    const auto [g, asq] = lowest_level_stats(model);
    return sparsify_gamma_max(g, asq, model.leaf_count());
  }

  /// Ramps gamma on progressively more levels (top-down) until each active
  /// level reaches the PPP setpoint on the scene.
  SparsifyState sparsify(BluthModel& model, const std::vector<int>& levels) {
    if (levels.empty()) throw ArgumentError("sparsify needs at least one level");
    for (const int l : levels)
      if (l < 1 || l > model.max_depth()) throw ArgumentError("sparsify level outside the model");
    const auto px = all_pixels(scene_);
    SparsifyState st;
    for (std::size_t k = 1; k <= levels.size(); ++k) {
      st.active_levels.assign(levels.begin(), levels.begin() + static_cast<std::ptrdiff_t>(k));
      auto min_ppp = [&] {
        const auto p = level_ppp(model, scene_, px, st.active_levels);
        return *std::min_element(p.begin(), p.end());
      };
      double now = min_ppp();
      int sets = 0;
      bool first = true;
      while (now < cfg_.ppp_setpoint) {
        if (sets >= cfg_.max_sparsify_sets)
          throw NonConvergenceError("PPP setpoint not reached after " + std::to_string(sets) + " sparsify sets");
        if (first) {
          st.gamma_max = gamma_max(model);
          first = false;
        }
        st.step = cfg_.n_runs > 0 ? st.gamma_max / cfg_.n_runs : st.gamma_max;
        EquilibrateOptions opt;
        opt.gamma_levels = st.active_levels;
        opt.modality = "SpM";
        for (int i = 1; i <= std::max(1, cfg_.n_runs); ++i) step(model, st.step * i, opt, i - 1);
        ++sets;
        ++st.sets;
        const double next = min_ppp();
        st.multiplier = ppp_multiplier(next - now, cfg_.ppp_setpoint - now);
        if (next < cfg_.ppp_setpoint) st.gamma_max *= st.multiplier;
        now = next;
      }
    }
    return st;
  }

  /// Alternates relaxation at gamma = 0 with a periodic penalty while the
  /// relaxed data term stays below the first estimate. A cycle that ends
  /// above the estimate is rolled back.
  int shake(BluthModel& model) {
    EquilibrateOptions relax;
    relax.modality = "ShM-relax";
    auto data_of = [](const ObjectiveValue& v) {
      double d = 0.0;
      for (const double t : v.data_terms) d += t;
      return v.weight_sum > 0.0 ? d / v.weight_sum : 0.0;
    };
    const int runs = std::max(1, cfg_.n_runs);
    double mean = 0.0;
    for (const auto& v : equilibrate(model, 0.0, runs, relax)) mean += data_of(v);
    mean /= runs;

    const double g0 = gamma_max(model);
    EquilibrateOptions pulse;
    pulse.modality = "ShM-pulse";
    int cycles = 0;
    for (int c = 1; c <= cfg_.max_shake_cycles; ++c) {
      const BluthModel checkpoint = model;
      for (int i = 1; i <= runs; ++i) step(model, (i % 2 == 1) ? c * g0 : 0.0, pulse, i - 1);
      double lowest = std::numeric_limits<double>::infinity();
      for (const auto& v : equilibrate(model, 0.0, runs, relax)) lowest = std::min(lowest, data_of(v));
      ++cycles;
      if (!(lowest < mean)) {
        model = checkpoint;
        break;
      }
    }
    return cycles;
  }

  /// For i = 1..i_max: equilibrate at gamma = -G_ll / i, then shake.
  void desparsify(BluthModel& model, int i_max) {
    if (i_max < 1) throw ArgumentError("desparsify requires i_max >= 1");
    const double g = lowest_level_stats(model).first;
    EquilibrateOptions opt;
    opt.modality = "DeSM";
    for (int i = 1; i <= i_max; ++i) {
      equilibrate(model, -g / i, cfg_.n_runs, opt);
      shake(model);
    }
  }

  /// Replaces every internal split with the maximum-margin hyperplane
  /// between the leaf spectra of its two branches.
  void desparsify_growth(BluthModel& model) {
    const auto leaves = model.leaves();
    for (const int id : model.internal_nodes()) {
      const Node& nd = model.node(id);
      std::vector<Vec> pts;
      std::vector<int> labels;
      for (const int l : leaves) {
        if (model.is_descendant(l, nd.children[0])) {
          pts.push_back(model.node(l).spectrum);
          labels.push_back(1);
        } else if (model.is_descendant(l, nd.children[1])) {
          pts.push_back(model.node(l).spectrum);
          labels.push_back(-1);
        }
      }
      try {
        model.set_split(id, max_margin_hyperplane(pts, labels));
      } catch (const InfeasibleError& e) {
        warnings_.push_back("node " + std::to_string(id) + ": " + e.what());
      }
    }
  }

  /// Splits leaf `zeta` of `model` (stage ii). Returns false, with the
  /// model untouched, when the leaf cannot produce two pure children.
  bool split_leaf(BluthModel& model, int zeta, std::string& reason) {
    const PixelSet pure = pure_pixels(model, scene_, zeta);
    if (pure.size() < 2) {
      reason = "fewer than 2 pure pixels";
      return false;
    }
    const TwoMeans tm = two_means(scene_, pure, cfg_.cluster_iterations);

    // Children share the lineage of zeta only.
    auto nearest = [&](const Vec& mean, const Vec* also) -> std::optional<Vec> {
      std::optional<Vec> best;
      double bd = std::numeric_limits<double>::infinity();
      for (const PixelIndex n : pure) {
        const auto y = scene_.pixel(n);
        bool clash = also && *also == y;
        for (const auto& nd : model.nodes())
          if (!clash && !model.is_descendant(zeta, nd.id) && nd.spectrum == y) clash = true;
        if (clash) continue;
        const double d = (y - mean).squaredNorm();
        if (d < bd) {
          bd = d;
          best = Vec(y);
        }
      }
      return best;
    };
    const auto s_pos = nearest(tm.mean_pos, nullptr);
    if (!s_pos) {
      reason = "no distinct pure pixel for the positive child";
      return false;
    }
    const auto s_neg = nearest(tm.mean_neg, &*s_pos);
    if (!s_neg) {
      reason = "no distinct pure pixel for the negative child";
      return false;
    }
    SplitParams split;
    try {
      split = init_split_from_spectra(tm.mean_pos, tm.mean_neg, 0.0);
    } catch (const DegenerateError& e) {
      reason = e.what();
      return false;
    }

    BluthModel trial = model;
    trial.split_node(zeta, split, *s_pos, *s_neg);
    const int cp = trial.node(zeta).children[0], cn = trial.node(zeta).children[1];
    BatchSampler local(pure, cfg_.standard_batch(scene_.pixels()), rng_());
    EquilibrateOptions opt;
    opt.sampler = &local;
    opt.split_filter = [zeta](int id) { return id == zeta; };
    opt.spectrum_filter = [cp, cn](int id) { return id == cp || id == cn; };
    opt.modality = "EqM-split";
    bool ok = false;
    for (int round = 0; round < cfg_.pure_pixel_rounds && !ok; ++round) {
      equilibrate(trial, 0.0, std::max(1, cfg_.n_runs), opt);
      ok = !pure_pixels(trial, scene_, cp).empty() && !pure_pixels(trial, scene_, cn).empty();
    }
    if (!ok) {
      reason = "children did not acquire pure pixels";
      return false;
    }
    model = std::move(trial);
    return true;
  }

  /// One greedy growth round; every candidate copy is retained.
  GrowthRound smug_grow(BluthModel& model) {
    GrowthRound round;
    if (model.leaf_count() >= cfg_.target_endmembers) return round;
    const SpectralMode saved = mode_;
    mode_ = SpectralMode::PPA;
    set_stage("grow-" + std::to_string(model.leaf_count() + 1));

    if (model.max_depth() > 0) sparsify(model, objective_levels(model));
    EquilibrateOptions abund_only;
    abund_only.update_spectra = false;
    for (const int zeta : model.leaves()) {
      GrowthCandidate cand;
      cand.leaf = zeta;
      cand.model = model;
      if (!split_leaf(cand.model, zeta, cand.reason)) {
        cand.skipped = true;
        round.candidates.push_back(std::move(cand));
        continue;
      }
      try {
        equilibrate(cand.model, 0.0, cfg_.n_runs);
        sparsify(cand.model, objective_levels(cand.model));
        desparsify_growth(cand.model);
        equilibrate(cand.model, 0.0, cfg_.n_runs, abund_only);
        equilibrate(cand.model, 0.0, cfg_.n_runs);
        shake(cand.model);
        equilibrate(cand.model, 0.0, cfg_.n_runs);
        equilibrate(cand.model, 0.0, cfg_.n_runs);
      } catch (const NonConvergenceError& e) {
        cand.skipped = true;
        cand.reason = e.what();
        round.candidates.push_back(std::move(cand));
        continue;
      }
      cand.score = scene_objective(cand.model, scene_, cfg_.objective).lowest_level_data;
      round.candidates.push_back(std::move(cand));
    }
    for (std::size_t i = 0; i < round.candidates.size(); ++i) {
      const auto& c = round.candidates[i];
      if (c.skipped) continue;
      if (round.selected < 0 || c.score < round.candidates[static_cast<std::size_t>(round.selected)].score)
        round.selected = static_cast<int>(i);
    }
    mode_ = saved;
    if (round.selected < 0) throw GrowthStalledError("no leaf could be split");
    model = round.candidates[static_cast<std::size_t>(round.selected)].model;
    return round;
  }

  /// Sparsify, de-sparsify, then a final lowest-level relaxation on large
  /// batches, run once with PPA and once with AA from the same checkpoint.
  FineTuneResult fine_tune(const BluthModel& model) {
    if (model.leaf_count() != cfg_.target_endmembers)
      throw ArgumentError("fine_tune requires target_endmembers leaves");
    set_stage("fine-tune");
    const SpectralMode saved = mode_;
    mode_ = SpectralMode::PPA;
    BluthModel m = model;
    if (m.max_depth() > 0) {
      sparsify(m, objective_levels(m));
      desparsify(m, cfg_.desparsify_count());
    }
    const ObjectiveConfig low = ObjectiveConfig::lowest_level_only(m.max_depth());
    EquilibrateOptions fin;
    fin.sampler = &large_;
    fin.base = &low;
    fin.modality = "final";
    FineTuneResult out{m, m};
    set_stage("final-ppa");
    mode_ = SpectralMode::PPA;
    equilibrate(out.model_ppa, 0.0, cfg_.n_runs, fin);
    set_stage("final-aa");
    mode_ = SpectralMode::AA;
    equilibrate(out.model_aa, 0.0, cfg_.n_runs, fin);
    mode_ = saved;
    return out;
  }

  /// Root set to the best pure pixel, grown to the target, then fine-tuned.
  FineTuneResult train() {
    mode_ = SpectralMode::PPA;
    BluthModel model(Vec(scene_.data.rowwise().mean()));
    const PixelSet batch = standard_.next();
    if (static_cast<int>(batch.size()) > 1) ppa_update(model, scene_, batch, 0, cfg_.objective);
    while (model.leaf_count() < cfg_.target_endmembers) smug_grow(model);
    return fine_tune(model);
  }

 private:
  void record(const BluthModel& model, std::span<const PixelIndex> batch, const std::string& modality, int index,
              double gamma, const ObjectiveValue& v) {
    ProgressEntry e;
    e.stage = stage_;
    e.modality = modality;
    e.step = index;
    e.gamma = gamma;
    e.value = v;
    std::vector<int> levels;
    for (int l = 1; l <= model.max_depth(); ++l) levels.push_back(l);
    e.ppp = level_ppp(model, scene_, batch, levels);
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    log_.push_back(std::move(e));
  }

  const Scene& scene_;
  TrainerConfig cfg_;
  std::mt19937_64 rng_;
  BatchSampler standard_;
  BatchSampler large_;
  SpectralMode mode_ = SpectralMode::PPA;
  std::string stage_ = "init";
  std::vector<ProgressEntry> log_;
  std::vector<std::string> warnings_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace bluth
