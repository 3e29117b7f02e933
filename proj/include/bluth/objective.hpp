#pragma once

// Multi-level regularized objective:
//   sum_m sum_n w_n [ mu_m |y_n - S_m a_mn|^2 - gamma_m |a_mn|^2 ]
// and the pure-pixel proportion.

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "bluth/hierarchy.hpp"
#include "bluth/scene.hpp"

namespace bluth {

using PixelIndex = Eigen::Index;
using PixelSet = std::vector<PixelIndex>;

inline PixelSet all_pixels(const Scene& s) {
  PixelSet out(static_cast<std::size_t>(s.pixels()));
  std::iota(out.begin(), out.end(), PixelIndex{0});
  return out;
}

/// Per-level weights mu_m and sparsity gains gamma_m.
///
/// With no explicit weights, mu_m = ratio^(m-1) so that the first split
/// level has weight 1. Explicit weights cover levels [0, size); deeper
/// levels get 0. Missing gains are 0.
struct ObjectiveConfig {
  std::vector<double> level_weights;
  std::vector<double> sparsity_gains;
  double level_weight_ratio = 4.0;

  double mu(int m) const {
    if (!level_weights.empty())
      return m < static_cast<int>(level_weights.size()) ? level_weights[static_cast<std::size_t>(m)] : 0.0;
    if (m == 0) return 1.0;
    return std::pow(level_weight_ratio, m - 1);
  }

  double gamma(int m) const {
    return m < static_cast<int>(sparsity_gains.size()) ? sparsity_gains[static_cast<std::size_t>(m)] : 0.0;
  }

  ObjectiveConfig with_gains(std::vector<double> gains) const {
    ObjectiveConfig c = *this;
    c.sparsity_gains = std::move(gains);
    return c;
  }

  /// Only the deepest level carries weight.
  static ObjectiveConfig lowest_level_only(int depth) {
    ObjectiveConfig c;
    c.level_weights.assign(static_cast<std::size_t>(depth) + 1, 0.0);
    c.level_weights.back() = 1.0;
    return c;
  }
};

/// Levels entering the objective: 1..M for a split model, {0} for a lone root.
inline std::vector<int> objective_levels(const BluthModel& m) {
  const int depth = m.max_depth();
  std::vector<int> out;
  if (depth == 0) {
    out.push_back(0);
  } else {
    for (int l = 1; l <= depth; ++l) out.push_back(l);
  }
  return out;
}

struct ObjectiveValue {
  std::vector<double> data_terms;     // mu_m sum_n w_n |u_mn|^2, indexed by level
  std::vector<double> penalty_terms;  // -gamma_m sum_n w_n |a_mn|^2, indexed by level
  double total = 0.0;
  double lowest_level_data = 0.0;     // sum_n w_n |u_Mn|^2 without mu
  double lowest_level_abundance_sq = 0.0;  // sum_n w_n |a_Mn|^2
  double weight_sum = 0.0;

  /// Weight-normalized lowest-level data term (per-pixel scale).
  double mean_lowest_level_data() const { return weight_sum > 0.0 ? lowest_level_data / weight_sum : 0.0; }
};

/// Frontier node ids for every level 0..M.
inline std::vector<std::vector<int>> frontiers_by_level(const BluthModel& m) {
  std::vector<std::vector<int>> f;
  for (int l = 0; l <= m.max_depth(); ++l) f.push_back(m.frontier(l));
  return f;
}

inline ObjectiveValue batch_objective(const BluthModel& model, const Scene& scene, std::span<const PixelIndex> subset,
                                      const ObjectiveConfig& cfg) {
  const int depth = model.max_depth();
  const auto fronts = frontiers_by_level(model);
  const auto levels = objective_levels(model);
  ObjectiveValue v;
  v.data_terms.assign(static_cast<std::size_t>(depth) + 1, 0.0);
  v.penalty_terms.assign(static_cast<std::size_t>(depth) + 1, 0.0);

  PixelEval ev;
  Vec recon(model.bands());
  for (const PixelIndex n : subset) {
    const auto y = scene.pixel(n);
    const double wn = scene.weight(n);
    model.evaluate(y, ev);
    v.weight_sum += wn;
    for (int m = 0; m <= depth; ++m) {
      const bool in_objective = std::find(levels.begin(), levels.end(), m) != levels.end();
      if (!in_objective && m != depth) continue;
      recon.setZero();
      double asq = 0.0;
      for (const int id : fronts[static_cast<std::size_t>(m)]) {
        const double a = ev.a[static_cast<std::size_t>(id)];
        if (a != 0.0) recon.noalias() += a * model.node(id).spectrum;
        asq += a * a;
      }
      const double err = (y - recon).squaredNorm();
      if (in_objective) {
        v.data_terms[static_cast<std::size_t>(m)] += wn * cfg.mu(m) * err;
        v.penalty_terms[static_cast<std::size_t>(m)] -= wn * cfg.gamma(m) * asq;
      }
      if (m == depth) {
        v.lowest_level_data += wn * err;
        v.lowest_level_abundance_sq += wn * asq;
      }
    }
  }
  for (std::size_t m = 0; m < v.data_terms.size(); ++m) v.total += v.data_terms[m] + v.penalty_terms[m];
  return v;
}

inline ObjectiveValue scene_objective(const BluthModel& model, const Scene& scene, const ObjectiveConfig& cfg) {
  const auto px = all_pixels(scene);
  return batch_objective(model, scene, px, cfg);
}

/// Fraction of pixels in `subset` whose level frontier contains an
/// abundance of exactly 1.
inline double ppp(const BluthModel& model, const Scene& scene, int level, std::span<const PixelIndex> subset) {
  if (level < 1) throw ArgumentError("ppp requires level >= 1");
  if (subset.empty()) return 0.0;
  const auto ids = model.frontier(level);
  PixelEval ev;
  std::size_t pure = 0;
  for (const PixelIndex n : subset) {
    model.evaluate(scene.pixel(n), ev);
    for (const int id : ids)
      if (ev.a[static_cast<std::size_t>(id)] == 1.0) {
        ++pure;
        break;
      }
  }
  return static_cast<double>(pure) / static_cast<double>(subset.size());
}

inline double ppp(const BluthModel& model, const Scene& scene, int level) {
  const auto px = all_pixels(scene);
  return ppp(model, scene, level, px);
}

/// Pixels whose abundance for `node` is exactly 1.
inline PixelSet pure_pixels(const BluthModel& model, const Scene& scene, int node) {
  PixelSet out;
  PixelEval ev;
  for (PixelIndex n = 0; n < scene.pixels(); ++n) {
    model.evaluate(scene.pixel(n), ev);
    if (ev.a[static_cast<std::size_t>(node)] == 1.0) out.push_back(n);
  }
  return out;
}

}  // namespace bluth
