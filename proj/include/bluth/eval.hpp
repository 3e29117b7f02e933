#pragma once

// Spectral angle, abundance IoU, endmember-to-label assignment and
// missed-endmember tallies.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "bluth/errors.hpp"
#include "bluth/scene.hpp"

namespace bluth {

/// Angle between two spectra in degrees.
inline double spectral_angle(const Eigen::Ref<const Vec>& s1, const Eigen::Ref<const Vec>& s2) {
  if (s1.size() != s2.size()) throw ArgumentError("spectra differ in length");
  const double n1 = s1.norm(), n2 = s2.norm();
  if (!(n1 > 0.0) || !(n2 > 0.0)) throw ArgumentError("spectral angle of a zero vector");
  const Vec a = s1 / n1, b = s2 / n2;
  return 2.0 * std::atan2((a - b).norm(), (a + b).norm()) * 180.0 / std::numbers::pi;
}

/// Generalized intersection over union: sum min / sum max, with 0/0 = 1.
inline double iou(const Eigen::Ref<const Vec>& a_est, const Eigen::Ref<const Vec>& a_label) {
  if (a_est.size() != a_label.size()) throw ArgumentError("abundance maps differ in length");
  const double num = a_est.cwiseMin(a_label).sum();
  const double den = a_est.cwiseMax(a_label).sum();
  if (den == 0.0) return 1.0;
  return num / den;
}

/// Pairs (estimate column, label column).
using Assignment = std::vector<std::pair<int, int>>;

namespace detail {

// Minimum-cost assignment of every row of a rows <= cols cost matrix
// (shortest augmenting paths with potentials).
inline std::vector<int> hungarian(const Mat& cost) {
  const auto n = static_cast<int>(cost.rows()), m = static_cast<int>(cost.cols());
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(m) + 1, 0), way(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j)
    if (p[static_cast<std::size_t>(j)] > 0) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

// Exhaustive search over injections of the rows into the columns. Ties keep
// the lexicographically first injection.
inline std::vector<int> exhaustive_assignment(const Mat& cost) {
  const auto n = static_cast<int>(cost.rows()), m = static_cast<int>(cost.cols());
  std::vector<int> cur(static_cast<std::size_t>(n)), best;
  std::vector<char> used(static_cast<std::size_t>(m), 0);
  double best_cost = std::numeric_limits<double>::infinity();
  auto rec = [&](auto&& self, int i, double acc) -> void {
    if (acc >= best_cost) return;
    if (i == n) {
      best_cost = acc;
      best = cur;
      return;
    }
    for (int j = 0; j < m; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      used[static_cast<std::size_t>(j)] = 1;
      cur[static_cast<std::size_t>(i)] = j;
      self(self, i + 1, acc + cost(i, j));
      used[static_cast<std::size_t>(j)] = 0;
    }
  };
  rec(rec, 0, 0.0);
  return best;
}

}  // namespace detail

/// One-to-one matching of estimated to label spectra (columns) minimizing the
/// total spectral angle; min(P_est, P_true) pairs, sorted by label index.
inline Assignment match_endmembers(const Mat& est_spectra, const Mat& label_spectra) {
  if (est_spectra.cols() < 1 || label_spectra.cols() < 1) throw ArgumentError("both spectra sets must be nonempty");
  if (est_spectra.rows() != label_spectra.rows()) throw ArgumentError("band-count mismatch between estimates and labels");
  const bool labels_are_rows = label_spectra.cols() <= est_spectra.cols();
  const Mat& rows = labels_are_rows ? label_spectra : est_spectra;
  const Mat& cols = labels_are_rows ? est_spectra : label_spectra;
  Mat cost(rows.cols(), cols.cols());
  for (Eigen::Index i = 0; i < rows.cols(); ++i)
    for (Eigen::Index j = 0; j < cols.cols(); ++j) cost(i, j) = spectral_angle(rows.col(i), cols.col(j));

  double injections = 1.0;
  for (Eigen::Index k = 0; k < rows.cols(); ++k) injections *= static_cast<double>(cols.cols() - k);
  const auto r2c = (rows.cols() <= 8 && injections <= 1e6) ? detail::exhaustive_assignment(cost) : detail::hungarian(cost);

  Assignment out;
  for (std::size_t i = 0; i < r2c.size(); ++i) {
    const int r = static_cast<int>(i), c = r2c[i];
    out.emplace_back(labels_are_rows ? c : r, labels_are_rows ? r : c);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  return out;
}

/// angles[t][k]: angle of technique t on labeled endmember k (NaN if
/// unmatched). A technique misses k when its angle exceeds the smallest
/// angle on k by more than `threshold_deg`; unmatched counts as a miss.
inline std::vector<int> missed_count(const std::vector<std::vector<double>>& angles, double threshold_deg = 10.0) {
  if (angles.empty()) throw ArgumentError("missed_count needs at least one technique");
  const std::size_t k_count = angles.front().size();
  for (const auto& row : angles)
    if (row.size() != k_count) throw ArgumentError("every technique must report every labeled endmember");
  std::vector<int> out(angles.size(), 0);
  for (std::size_t k = 0; k < k_count; ++k) {
    double ref = std::numeric_limits<double>::infinity();
    for (const auto& row : angles)
      if (!std::isnan(row[k])) ref = std::min(ref, row[k]);
    for (std::size_t t = 0; t < angles.size(); ++t)
      if (std::isnan(angles[t][k]) || angles[t][k] > ref + threshold_deg) ++out[t];
  }
  return out;
}

struct EvalPair {
  int estimate = -1;
  int label = -1;
  std::string label_name;
  double angle_deg = 0.0;
  double iou = 0.0;
};

struct EvalReport {
  std::string technique;
  std::vector<EvalPair> pairs;
  int missed = 0;

  double mean_angle() const {
    if (pairs.empty()) return 0.0;
    double s = 0.0;
    for (const auto& p : pairs) s += p.angle_deg;
    return s / static_cast<double>(pairs.size());
  }

  double mean_iou() const {
    if (pairs.empty()) return 0.0;
    double s = 0.0;
    for (const auto& p : pairs) s += p.iou;
    return s / static_cast<double>(pairs.size());
  }
};

/// Scores estimated spectra (B x P_est) and abundances (P_est x N) against
/// labels. Requires label spectra.
inline EvalReport evaluate(const Mat& est_spectra, const Mat& est_abundances, const LabelSet& labels,
                           std::string technique = {}) {
  if (!labels.spectra) throw ArgumentError("labels carry no spectra");
  if (est_abundances.cols() != labels.abundances.cols()) throw ArgumentError("pixel-count mismatch with labels");
  if (est_abundances.rows() != est_spectra.cols()) throw ArgumentError("abundance rows do not match spectra");
  EvalReport r;
  r.technique = std::move(technique);
  for (const auto& [e, l] : match_endmembers(est_spectra, *labels.spectra)) {
    EvalPair p;
    p.estimate = e;
    p.label = l;
    if (static_cast<std::size_t>(l) < labels.names.size()) p.label_name = labels.names[static_cast<std::size_t>(l)];
    p.angle_deg = spectral_angle(est_spectra.col(e), labels.spectra->col(l));
    p.iou = iou(est_abundances.row(e).transpose(), labels.abundances.row(l).transpose());
    r.pairs.push_back(std::move(p));
  }
  return r;
}

/// Fills `missed` on each report, aligning by label index.
inline void tally_misses(std::vector<EvalReport>& reports, int label_count, double threshold_deg = 10.0) {
  if (reports.empty()) return;
  std::vector<std::vector<double>> angles(reports.size(),
                                          std::vector<double>(static_cast<std::size_t>(label_count),
                                                              std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t t = 0; t < reports.size(); ++t)
    for (const auto& p : reports[t].pairs) angles[t][static_cast<std::size_t>(p.label)] = p.angle_deg;
  const auto miss = missed_count(angles, threshold_deg);
  for (std::size_t t = 0; t < reports.size(); ++t) reports[t].missed = miss[t];
}

/// Per-pair CSV rows: technique,estimate,label,name,angle_deg,iou.
inline std::string report_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "technique,estimate,label,name,angle_deg,iou\n";
  for (const auto& r : reports)
    for (const auto& p : r.pairs)
      os << r.technique << ',' << p.estimate << ',' << p.label << ',' << p.label_name << ',' << p.angle_deg << ','
         << p.iou << '\n';
  return os.str();
}

}  // namespace bluth
