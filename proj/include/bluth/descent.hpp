#pragma once

// Split-weight gradients and the exact line search.
//
// With every other parameter fixed, the objective restricted to one node's
// splitting coefficient x_n is, pixel by pixel, a quadratic alpha_n x^2 +
// beta_n x. Along a ray in (w, d) the pre-clip argument moves linearly, so
// the objective is piecewise quadratic with breakpoints where an argument
// crosses 0 or 1.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "bluth/errors.hpp"
#include "bluth/hierarchy.hpp"
#include "bluth/objective.hpp"

namespace bluth {

/// Per-pixel restriction of the objective to one node's coefficient.
struct NodeQuadratic {
  std::vector<PixelIndex> pixels;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> arg;  // pre-clip argument at the current parameters
};

namespace detail {

struct LevelPlan {
  int level = 0;
  double mu = 0.0;
  double gamma = 0.0;
  std::vector<int> frontier;
  std::vector<int> pos;  // descendants through the positive child
  std::vector<int> neg;
};

inline std::vector<LevelPlan> plan_levels(const BluthModel& model, int node, const ObjectiveConfig& cfg) {
  const Node& z = model.node(node);
  std::vector<LevelPlan> plans;
  for (const int m : objective_levels(model)) {
    if (m <= z.depth) continue;
    LevelPlan p;
    p.level = m;
    p.mu = cfg.mu(m);
    p.gamma = cfg.gamma(m);
    if (p.mu == 0.0 && p.gamma == 0.0) continue;
    p.frontier = model.frontier(m);
    for (const int id : p.frontier) {
      if (model.is_descendant(id, z.children[0])) p.pos.push_back(id);
      else if (model.is_descendant(id, z.children[1])) p.neg.push_back(id);
    }
    plans.push_back(std::move(p));
  }
  return plans;
}

// Product of splitting coefficients from `top` (exclusive of its own
// abundance) down to `id`.
inline double branch_product(const BluthModel& model, const PixelEval& ev, int id, int top) {
  double prod = 1.0;
  for (int cur = id; cur != top;) {
    const Node& n = model.node(cur);
    const auto par = static_cast<std::size_t>(*n.parent);
    prod *= n.polarity == Polarity::positive ? ev.x[par] : 1.0 - ev.x[par];
    cur = *n.parent;
  }
  return prod;
}

}  // namespace detail

inline NodeQuadratic node_quadratics(const BluthModel& model, const Scene& scene, std::span<const PixelIndex> batch,
                                     int node, const ObjectiveConfig& cfg) {
  const Node& z = model.node(node);
  if (z.is_leaf()) throw ArgumentError("node " + std::to_string(node) + " is a leaf");
  const auto plans = detail::plan_levels(model, node, cfg);
  const auto zi = static_cast<std::size_t>(node);

  NodeQuadratic q;
  q.pixels.assign(batch.begin(), batch.end());
  q.alpha.assign(batch.size(), 0.0);
  q.beta.assign(batch.size(), 0.0);
  q.arg.assign(batch.size(), 0.0);

  PixelEval ev;
  Vec recon(model.bands()), sp(model.bands()), sn(model.bands()), qv(model.bands());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto y = scene.pixel(batch[i]);
    const double wn = scene.weight(batch[i]);
    model.evaluate(y, ev);
    q.arg[i] = ev.arg[zi];
    const double az = ev.a[zi];
    if (az == 0.0 || wn == 0.0) continue;
    const double x = ev.x[zi];
    double alpha = 0.0, beta = 0.0;
    for (const auto& p : plans) {
      recon.setZero();
      for (const int id : p.frontier) {
        const double a = ev.a[static_cast<std::size_t>(id)];
        if (a != 0.0) recon.noalias() += a * model.node(id).spectrum;
      }
      sp.setZero();
      sn.setZero();
      double pp = 0.0, pn = 0.0;
      for (const int id : p.pos) {
        const double pi = detail::branch_product(model, ev, id, z.children[0]);
        sp.noalias() += pi * model.node(id).spectrum;
        pp += pi * pi;
      }
      for (const int id : p.neg) {
        const double pi = detail::branch_product(model, ev, id, z.children[1]);
        sn.noalias() += pi * model.node(id).spectrum;
        pn += pi * pi;
      }
      qv = az * (sp - sn);
      const double qq = qv.squaredNorm();
      // c0 = u + x q is the residual with this node's split contribution removed.
      const double c0q = (y - recon).dot(qv) + x * qq;
      alpha += p.mu * qq - p.gamma * az * az * (pp + pn);
      beta += -2.0 * p.mu * c0q + 2.0 * p.gamma * az * az * pn;
    }
    q.alpha[i] = wn * alpha;
    q.beta[i] = wn * beta;
  }
  return q;
}

/// Gradient of the batch objective with respect to (w, d) of `node`.
/// Pixels whose argument sits on or outside a clip boundary contribute 0.
inline Vec grad_split(const BluthModel& model, const Scene& scene, std::span<const PixelIndex> batch, int node,
                      const ObjectiveConfig& cfg) {
  const auto q = node_quadratics(model, scene, batch, node, cfg);
  const Eigen::Index B = model.bands();
  Vec g = Vec::Zero(B + 1);
  for (std::size_t i = 0; i < q.pixels.size(); ++i) {
    const double z = q.arg[i];
    if (!(z > 0.0 && z < 1.0)) continue;
    const double df = 2.0 * q.alpha[i] * z + q.beta[i];
    if (df == 0.0) continue;
    g.head(B).noalias() += (0.5 * df) * scene.pixel(q.pixels[i]);
    g(B) -= 0.5 * df;
  }
  return g;
}

enum class LineSearchTerminal { interior_zero, pre_discontinuity, at_origin };

struct LineSearchResult {
  double step = 0.0;
  std::size_t crossings_visited = 0;
  LineSearchTerminal terminal = LineSearchTerminal::at_origin;
  double predicted_change = 0.0;  // objective(step) - objective(0) per the piecewise model
};

/// Relative offset used to stop just below a derivative discontinuity.
inline constexpr double kDiscontinuityOffset = 1e-9;
/// Upper bound on the objective given up by that offset.
inline constexpr double kMaxOffsetLoss = 1e-10;

/// Exact minimization of the batch objective along (w, d) + b * direction, b >= 0.
///
/// If the directional derivative at b = 0+ is nonnegative the result is
/// b = 0. Otherwise every segment between crossings is integrated and the
/// lowest stationary point or derivative sign flip along the whole ray is
/// returned.
inline LineSearchResult exact_line_search(const BluthModel& model, const Scene& scene,
                                          std::span<const PixelIndex> batch, int node, const Vec& direction,
                                          const ObjectiveConfig& cfg) {
  const Eigen::Index B = model.bands();
  if (direction.size() != B + 1) throw ArgumentError("direction must have length bands + 1");
  if (!direction.allFinite()) throw ArgumentError("direction is not finite");

  const auto q = node_quadratics(model, scene, batch, node, cfg);
  const auto vw = direction.head(B);
  const double vd = direction(B);

  // Active interval of each pixel along the ray and its linear-derivative pieces.
  struct Event {
    double t;
    std::size_t i;
    bool enter;
  };
  std::vector<Event> events;
  std::vector<double> c(q.pixels.size(), 0.0);
  double s0 = 0.0, k = 0.0;  // derivative on the current segment is s0 + k b
  auto contrib_s = [&](std::size_t i) { return (2.0 * q.alpha[i] * q.arg[i] + q.beta[i]) * c[i]; };
  auto contrib_k = [&](std::size_t i) { return 2.0 * q.alpha[i] * c[i] * c[i]; };

  for (std::size_t i = 0; i < q.pixels.size(); ++i) {
    if (q.alpha[i] == 0.0 && q.beta[i] == 0.0) continue;
    c[i] = 0.5 * (vw.dot(scene.pixel(q.pixels[i])) - vd);
    if (c[i] == 0.0) continue;
    const double t0 = -q.arg[i] / c[i];
    const double t1 = (1.0 - q.arg[i]) / c[i];
    const double lo = std::min(t0, t1), hi = std::max(t0, t1);
    if (!(hi > 0.0)) continue;
    if (lo <= 0.0) {
      s0 += contrib_s(i);
      k += contrib_k(i);
    } else {
      events.push_back({lo, i, true});
    }
    events.push_back({hi, i, false});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });

  LineSearchResult best;
  if (!(s0 < 0.0)) return best;

  double b_prev = 0.0, f_prev = 0.0;
  auto consider = [&](double b, double f, LineSearchTerminal term, std::size_t visited) {
    if (f < best.predicted_change) {
      best.step = b;
      best.predicted_change = f;
      best.terminal = term;
      best.crossings_visited = visited;
    }
  };

  std::size_t visited = 0;
  for (std::size_t e = 0; e < events.size();) {
    const double t = events[e].t;
    const double d_start = s0 + k * b_prev;
    if (d_start < 0.0 && k > 0.0) {
      const double bstar = -s0 / k;
      if (bstar < t) {
        const double h = bstar - b_prev;
        consider(bstar, f_prev + d_start * h + 0.5 * k * h * h, LineSearchTerminal::interior_zero, visited);
      }
    }
    const double h = t - b_prev;
    const double f_t = f_prev + d_start * h + 0.5 * k * h * h;
    const double d_before = s0 + k * t;
    for (; e < events.size() && events[e].t == t; ++e) {
      const double sign = events[e].enter ? 1.0 : -1.0;
      s0 += sign * contrib_s(events[e].i);
      k += sign * contrib_k(events[e].i);
    }
    ++visited;
    // After the last crossing every pixel is saturated; the running sums
    // only differ from 0 by rounding.
    const double d_after = e == events.size() ? 0.0 : s0 + k * t;
    if (d_before < 0.0 && d_after >= 0.0) {
      // Stop just short of the crossing, but never give back more than
      // kMaxOffsetLoss of objective to the offset.
      const double back = std::min(kDiscontinuityOffset * t, kMaxOffsetLoss / -d_before);
      consider(t - back, f_t - d_before * back, LineSearchTerminal::pre_discontinuity, visited);
    }
    b_prev = t;
    f_prev = f_t;
  }
  return best;
}

/// Applies `step` along `direction` to the split of `node`.
inline void apply_step(BluthModel& model, int node, const Vec& direction, double step) {
  const Eigen::Index B = model.bands();
  SplitParams s = *model.node(node).split;
  s.w.noalias() += step * direction.head(B);
  s.d += step * direction(B);
  model.set_split(node, std::move(s));
}

/// One block-coordinate sweep over internal nodes (depth, then id). `filter`
/// restricts the sweep to nodes for which it returns true.
inline ObjectiveValue block_update_pass(BluthModel& model, const Scene& scene, std::span<const PixelIndex> batch,
                                        const ObjectiveConfig& cfg,
                                        const std::function<bool(int)>& filter = {}) {
  double current = batch_objective(model, scene, batch, cfg).total;
  for (const int id : model.internal_nodes()) {
    if (filter && !filter(id)) continue;
    const Vec g = grad_split(model, scene, batch, id, cfg);
    const double gn = g.norm();
    if (!(gn > 0.0) || !std::isfinite(gn)) continue;
    const Vec dir = -g / gn;
    const auto ls = exact_line_search(model, scene, batch, id, dir, cfg);
    if (ls.step > 0.0) {
      BluthModel trial = model;
      apply_step(trial, id, dir, ls.step);
      // Guard against rounding: keep the step only if the batch objective does not rise.
      const double f = batch_objective(trial, scene, batch, cfg).total;
      if (f <= current) {
        model = std::move(trial);
        current = f;
      }
    }
  }
  return batch_objective(model, scene, batch, cfg);
}

}  // namespace bluth
