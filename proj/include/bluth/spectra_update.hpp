#pragma once

// Batchable endmember-spectrum updates (archetypal analysis and pure pixel
// analysis) and the one-versus-rest quasibinary abundance update.
//
// For a node with abundances a_n and residuals e_mn at each level it spans,
// replacing its spectrum s by s + b u changes the objective by
//   dF = -2 b u.G + b^2 |u|^2 A2,
// with G = sum_m mu_m sum_n w_n a_n e_mn and A2 = sum_m mu_m sum_n w_n a_n^2.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "bluth/errors.hpp"
#include "bluth/hierarchy.hpp"
#include "bluth/objective.hpp"

namespace bluth {

enum class SpectralMode { AA, PPA };

/// First-order statistics of one spectrum over a batch. `g` holds the
/// per-pixel contributions to G (one column per batch pixel), `a2` those of A2.
struct SpectrumStats {
  Vec G;
  double A2 = 0.0;
  Mat g;
  std::vector<double> a2;
};

struct SpectrumCandidate {
  std::size_t batch_pos = 0;
  double b = 0.0;
  double delta = 0.0;
};

namespace detail {

// Levels at which `node` is part of the frontier and carries weight.
inline std::vector<int> spanned_levels(const BluthModel& model, int node, const ObjectiveConfig& cfg) {
  const Node& n = model.node(node);
  std::vector<int> out;
  for (const int m : objective_levels(model)) {
    if (m < n.depth) continue;
    if (!n.is_leaf() && m > n.depth) continue;
    if (cfg.mu(m) == 0.0) continue;
    out.push_back(m);
  }
  return out;
}

// Best AA candidate: b from the leave-one-out stationarity condition, 0 when
// outside (0,1). Ties resolve to the lowest pixel index.
inline std::optional<SpectrumCandidate> best_aa(const Vec& s, const Scene& scene, std::span<const PixelIndex> batch,
                                                const SpectrumStats& st) {
  std::optional<SpectrumCandidate> best;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const Vec u = scene.pixel(batch[j]) - s;
    const double uu = u.squaredNorm();
    const double den = uu * (st.A2 - st.a2[j]);
    double b = u.dot(st.G - st.g.col(static_cast<Eigen::Index>(j))) / den;
    if (!(b > 0.0 && b < 1.0)) b = 0.0;
    const double delta = b == 0.0 ? 0.0 : -2.0 * b * u.dot(st.G) + b * b * uu * st.A2;
    if (!best || delta < best->delta || (delta == best->delta && batch[j] < batch[best->batch_pos]))
      best = SpectrumCandidate{j, b, delta};
  }
  return best;
}

// Best PPA candidate among batch pixels not bit-identical to any spectrum in `taken`.
inline std::optional<SpectrumCandidate> best_ppa(const Vec& s, const Scene& scene, std::span<const PixelIndex> batch,
                                                 const SpectrumStats& st, const std::vector<const Vec*>& taken) {
  std::optional<SpectrumCandidate> best;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto z = scene.pixel(batch[j]);
    bool clash = false;
    for (const Vec* t : taken)
      if (*t == z) {
        clash = true;
        break;
      }
    if (clash) continue;
    const Vec u = z - s;
    const double delta = -2.0 * u.dot(st.G) + u.squaredNorm() * st.A2;
    if (!best || delta < best->delta || (delta == best->delta && batch[j] < batch[best->batch_pos]))
      best = SpectrumCandidate{j, 1.0, delta};
  }
  return best;
}

}  // namespace detail

inline SpectrumStats spectrum_stats(const BluthModel& model, const Scene& scene, std::span<const PixelIndex> batch,
                                    int node, const ObjectiveConfig& cfg) {
  const auto levels = detail::spanned_levels(model, node, cfg);
  std::vector<std::vector<int>> fronts;
  for (const int m : levels) fronts.push_back(model.frontier(m));
  const auto zi = static_cast<std::size_t>(node);

  SpectrumStats st;
  st.G = Vec::Zero(model.bands());
  st.g = Mat::Zero(model.bands(), static_cast<Eigen::Index>(batch.size()));
  st.a2.assign(batch.size(), 0.0);
  PixelEval ev;
  Vec recon(model.bands());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto y = scene.pixel(batch[j]);
    const double wn = scene.weight(batch[j]);
    model.evaluate(y, ev);
    const double a = ev.a[zi];
    if (a == 0.0 || wn == 0.0) continue;
    auto gj = st.g.col(static_cast<Eigen::Index>(j));
    for (std::size_t l = 0; l < levels.size(); ++l) {
      recon.setZero();
      for (const int id : fronts[l]) {
        const double ai = ev.a[static_cast<std::size_t>(id)];
        if (ai != 0.0) recon.noalias() += ai * model.node(id).spectrum;
      }
      const double c = cfg.mu(levels[l]) * wn * a;
      gj.noalias() += c * (y - recon);
      st.a2[j] += c * a;
    }
    st.G += gj;
    st.A2 += st.a2[j];
  }
  return st;
}

/// Archetypal-analysis update of one node spectrum: the best convex step
/// toward a batch pixel, or no change. Never increases the batch objective.
inline void aa_update(BluthModel& model, const Scene& scene, std::span<const PixelIndex> batch, int node,
                      const ObjectiveConfig& cfg) {
  const auto st = spectrum_stats(model, scene, batch, node, cfg);
  if (!(st.A2 > 0.0)) return;
  const Vec& s = model.node(node).spectrum;
  const auto best = detail::best_aa(s, scene, batch, st);
  if (!best || !(best->delta < 0.0)) return;
  const Vec z = scene.pixel(batch[best->batch_pos]);
  model.set_spectrum(node, (1.0 - best->b) * s + best->b * z);
}

/// Pure-pixel update: the node spectrum becomes the batch pixel with the
/// lowest batch objective, excluding pixels equal to the spectrum of any node
/// outside its lineage (ancestors and descendants may share a spectrum).
inline void ppa_update(BluthModel& model, const Scene& scene, std::span<const PixelIndex> batch, int node,
                       const ObjectiveConfig& cfg) {
  if (static_cast<int>(batch.size()) <= model.leaf_count())
    throw ArgumentError("PPA batch must be larger than the number of endmembers");
  const auto st = spectrum_stats(model, scene, batch, node, cfg);
  if (!(st.A2 > 0.0)) return;
  std::vector<const Vec*> taken;
  for (const auto& n : model.nodes())
    if (!model.same_lineage(n.id, node)) taken.push_back(&n.spectrum);
  const auto best = detail::best_ppa(model.node(node).spectrum, scene, batch, st, taken);
  if (!best) return;
  model.set_spectrum(node, scene.pixel(batch[best->batch_pos]));
}

inline void spectral_update(BluthModel& model, const Scene& scene, std::span<const PixelIndex> batch, int node,
                            const ObjectiveConfig& cfg, SpectralMode mode) {
  if (mode == SpectralMode::AA) aa_update(model, scene, batch, node, cfg);
  else ppa_update(model, scene, batch, node, cfg);
}

/// One-versus-rest abundance update for endmember `zeta`. The other
/// abundances keep their proportions (uniform if they were all zero) and are
/// rescaled so the vector stays on the simplex. Returns the full vector.
inline Vec quasibinary_abundance(const Eigen::Ref<const Vec>& y, const Mat& spectra, const Vec& a, Eigen::Index zeta,
                                 double gamma) {
  const Eigen::Index P = spectra.cols();
  if (P < 2) throw ArgumentError("quasibinary update needs at least 2 endmembers");
  if (a.size() != P || zeta < 0 || zeta >= P) throw ArgumentError("abundance vector does not match spectra");

  Vec rest = a;
  rest(zeta) = 0.0;
  const double l1 = rest.sum();
  double r;
  if (l1 > 0.0) {
    rest /= l1;
    r = rest.squaredNorm();
  } else {
    rest.setConstant(1.0 / static_cast<double>(P - 1));
    rest(zeta) = 0.0;
    r = 1.0 / static_cast<double>(P - 1);
  }
  const Vec s_rest = spectra * rest;
  const Vec p = spectra.col(zeta) - s_rest;
  const Vec e = y - s_rest;
  auto h = [&](double x) { return (e - x * p).squaredNorm() - gamma * (x * x + r * (1.0 - x) * (1.0 - x)); };

  const double den = p.squaredNorm() - gamma * (1.0 + r);
  double x;
  if (den > 0.0) x = clip01((e.dot(p) - gamma * r) / den);
  else x = h(1.0) < h(0.0) ? 1.0 : 0.0;

  Vec out = (1.0 - x) * rest;
  out(zeta) = x;
  return out;
}

}  // namespace bluth
