#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "bluth/hierarchy.hpp"
#include "bluth/objective.hpp"
#include "bluth/scene.hpp"

namespace bluth::fixtures {

inline Vec random_positive(Eigen::Index n, std::mt19937_64& rng, double lo = 0.05, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline Scene random_scene(Eigen::Index bands, Eigen::Index pixels, std::mt19937_64& rng) {
  Scene s;
  s.data.resize(bands, pixels);
  for (Eigen::Index n = 0; n < pixels; ++n) s.data.col(n) = random_positive(bands, rng, 0.0, 1.0);
  s.rows = 1;
  s.cols = static_cast<std::size_t>(pixels);
  return s;
}

inline Scene scene_of(const std::vector<Vec>& pixels) {
  Scene s;
  s.rows = 1;
  s.cols = pixels.size();
  s.data.resize(pixels.front().size(), static_cast<Eigen::Index>(pixels.size()));
  for (std::size_t i = 0; i < pixels.size(); ++i) s.data.col(static_cast<Eigen::Index>(i)) = pixels[i];
  return s;
}

/// Random tree with `leaves` leaves and depth at most `max_depth`, built by
/// splitting random eligible leaves. Splits have small random weights so
/// that many pixels fall strictly inside (0, 1).
inline BluthModel random_model(Eigen::Index bands, int leaves, int max_depth, std::mt19937_64& rng,
                               double w_scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  BluthModel m(random_positive(bands, rng));
  while (m.leaf_count() < leaves) {
    std::vector<int> eligible;
    for (const int id : m.leaves())
      if (m.node(id).depth < max_depth) eligible.push_back(id);
    if (eligible.empty()) break;
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    const int id = eligible[pick(rng)];
    SplitParams s;
    s.w.resize(bands);
    for (Eigen::Index b = 0; b < bands; ++b) s.w(b) = w_scale * g(rng);
    s.d = w_scale * g(rng);
    m.split_node(id, s, random_positive(bands, rng), random_positive(bands, rng));
  }
  return m;
}

/// Abundance of `id` by walking its root path; independent of evaluate().
inline double path_abundance(const BluthModel& m, int id, const Eigen::Ref<const Vec>& y) {
  double a = 1.0;
  for (int cur = id; m.node(cur).parent;) {
    const Node& n = m.node(cur);
    const Node& p = m.node(*n.parent);
    const double arg = 0.5 * (p.split->w.dot(y) - p.split->d + 1.0);
    const double x = std::min(1.0, std::max(0.0, arg));
    a *= n.polarity == Polarity::positive ? x : 1.0 - x;
    cur = *n.parent;
  }
  return a;
}

/// Frontier membership from depth alone.
inline bool in_frontier(const BluthModel& m, int id, int level) {
  const Node& n = m.node(id);
  return n.depth == level || (n.is_leaf() && n.depth < level);
}

/// Direct double-loop evaluation of the multi-level objective.
inline double naive_objective(const BluthModel& m, const Scene& s, const std::vector<PixelIndex>& px,
                              const ObjectiveConfig& cfg) {
  const int depth = m.max_depth();
  double total = 0.0;
  for (const PixelIndex n : px) {
    const Vec y = s.pixel(n);
    for (int level = (depth == 0 ? 0 : 1); level <= depth; ++level) {
      Vec r = Vec::Zero(y.size());
      double asq = 0.0;
      for (int id = 0; id < m.size(); ++id) {
        if (!in_frontier(m, id, level)) continue;
        const double a = path_abundance(m, id, y);
        r += a * m.node(id).spectrum;
        asq += a * a;
      }
      total += s.weight(n) * (cfg.mu(level) * (y - r).squaredNorm() - cfg.gamma(level) * asq);
    }
  }
  return total;
}

}  // namespace bluth::fixtures
