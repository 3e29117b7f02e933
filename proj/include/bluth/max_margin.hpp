#pragma once

// Hard-margin linear SVM for small point sets, returned as a split
// hyperplane whose support vectors saturate the clipped response.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "bluth/errors.hpp"
#include "bluth/hierarchy.hpp"

namespace bluth {

/// Point sets up to this size are solved by exact support-set enumeration.
inline constexpr Eigen::Index kExactSvmLimit = 16;

namespace detail {

struct SvmSolution {
  Vec w;
  double c = 0.0;  // boundary w.y + c = 0
  Vec alpha;
};

// SMO with second-order working-set selection on the dual
//   min 1/2 a'Qa - sum a,  y'a = 0,  0 <= a <= C.
inline SvmSolution smo(const Mat& K, const Vec& y, double C, int max_iter) {
  const Eigen::Index n = y.size();
  Vec alpha = Vec::Zero(n);
  Vec G = -Vec::Ones(n);
  auto Q = [&](Eigen::Index i, Eigen::Index j) { return y(i) * y(j) * K(i, j); };
  constexpr double tau = 1e-12;
  constexpr double eps = 1e-12;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const bool up = (y(t) > 0 && alpha(t) < C) || (y(t) < 0 && alpha(t) > 0);
      if (up && -y(t) * G(t) >= gmax) {
        gmax = -y(t) * G(t);
        i = t;
      }
    }
    double gmin = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const bool low = (y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < C);
      if (!low) continue;
      gmin = std::min(gmin, -y(t) * G(t));
      const double b = gmax + y(t) * G(t);
      if (i >= 0 && b > 0) {
        double a = K(i, i) + K(t, t) - 2.0 * K(i, t);
        if (a <= 0) a = tau;
        if (-(b * b) / a <= best) {
          best = -(b * b) / a;
          j = t;
        }
      }
    }
    if (i < 0 || j < 0 || gmax - gmin < eps * std::max(1.0, std::abs(gmax))) break;

    const double oi = alpha(i), oj = alpha(j);
    double a = K(i, i) + K(j, j) - 2.0 * K(i, j);
    if (a <= 0) a = tau;
    if (y(i) != y(j)) {
      const double delta = (-G(i) - G(j)) / a;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0 && alpha(j) < 0) {
        alpha(j) = 0;
        alpha(i) = diff;
      } else if (diff <= 0 && alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = -diff;
      }
      if (diff > 0 && alpha(i) > C) {
        alpha(i) = C;
        alpha(j) = C - diff;
      } else if (diff <= 0 && alpha(j) > C) {
        alpha(j) = C;
        alpha(i) = C + diff;
      }
    } else {
      const double delta = (G(i) - G(j)) / a;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > C && alpha(i) > C) {
        alpha(i) = C;
        alpha(j) = sum - C;
      } else if (sum <= C && alpha(j) < 0) {
        alpha(j) = 0;
        alpha(i) = sum;
      }
      if (sum > C && alpha(j) > C) {
        alpha(j) = C;
        alpha(i) = sum - C;
      } else if (sum <= C && alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = sum;
      }
    }
    const double di = alpha(i) - oi, dj = alpha(j) - oj;
    for (Eigen::Index t = 0; t < n; ++t) G(t) += Q(t, i) * di + Q(t, j) * dj;
  }
  if (iter >= max_iter) throw NonConvergenceError("SVM dual did not converge");
  SvmSolution s;
  s.alpha = alpha;
  return s;
}

// Exact solve for small sets: try support sets in order of size and accept
// the first whose KKT system has nonnegative multipliers and leaves every
// point outside the margin. Returns nothing when no such set exists.
inline std::optional<SvmSolution> kkt_enumerate(const Mat& X, const Vec& y) {
  const Eigen::Index n = y.size();
  const Mat K = X.transpose() * X;
  std::vector<std::uint32_t> masks;
  for (std::uint32_t m = 1; m < (1u << n); ++m) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(),
                   [](std::uint32_t a, std::uint32_t b) { return std::popcount(a) < std::popcount(b); });
  for (const std::uint32_t mask : masks) {
    std::vector<Eigen::Index> sv;
    bool pos = false, neg = false;
    for (Eigen::Index i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        sv.push_back(i);
        (y(i) > 0 ? pos : neg) = true;
      }
    if (!pos || !neg) continue;
    const auto m = static_cast<Eigen::Index>(sv.size());
    Mat A = Mat::Zero(m + 1, m + 1);
    Vec rhs = Vec::Zero(m + 1);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) A(r, c) = y(sv[r]) * y(sv[c]) * K(sv[r], sv[c]);
      A(r, m) = y(sv[r]);
      A(m, r) = y(sv[r]);
      rhs(r) = 1.0;
    }
    const Vec z = A.completeOrthogonalDecomposition().solve(rhs);
    if (!z.allFinite() || (z.head(m).array() < -1e-12).any()) continue;
    SvmSolution s;
    s.w = Vec::Zero(X.rows());
    for (Eigen::Index r = 0; r < m; ++r) s.w += z(r) * y(sv[r]) * X.col(sv[r]);
    s.c = z(m);
    const Vec margins = (y.array() * ((X.transpose() * s.w).array() + s.c)).matrix();
    bool ok = true;
    for (Eigen::Index r = 0; r < m && ok; ++r) ok = std::abs(margins(sv[r]) - 1.0) < 1e-9;
    if (!ok || margins.minCoeff() < 1.0 - 1e-9) continue;
    s.alpha = Vec::Zero(n);
    for (Eigen::Index r = 0; r < m; ++r) s.alpha(sv[r]) = z(r);
    return s;
  }
  return std::nullopt;
}

}  // namespace detail

/// Maximum-margin separating hyperplane of `points` with labels +1/-1, as
/// SplitParams: the boundary maps to x = 0.5 and the support vectors of the
/// positive/negative class map to x = 1 / x = 0.
/// Throws InfeasibleError if the classes are not linearly separable.
inline SplitParams max_margin_hyperplane(const std::vector<Vec>& points, const std::vector<int>& labels) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n < 2 || labels.size() != points.size()) throw ArgumentError("need matching points and labels");
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), -1) != labels.end();
  if (!has_pos || !has_neg) throw ArgumentError("both classes must be present");
  const Eigen::Index B = points.front().size();

  Mat X(B, n);
  Vec y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (points[static_cast<std::size_t>(i)].size() != B) throw ArgumentError("point dimension mismatch");
    const int l = labels[static_cast<std::size_t>(i)];
    if (l != 1 && l != -1) throw ArgumentError("labels must be +1 or -1");
    X.col(i) = points[static_cast<std::size_t>(i)];
    y(i) = l;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (y(i) != y(j) && X.col(i) == X.col(j)) throw InfeasibleError("identical points carry opposite labels");

  auto min_margin = [&](const Vec& ww, double cc) { return (y.array() * ((X.transpose() * ww).array() + cc)).minCoeff(); };
  Vec w;
  double c = 0.0;
  if (n <= kExactSvmLimit) {
    const auto sol = detail::kkt_enumerate(X, y);
    if (!sol) throw InfeasibleError("classes are not linearly separable");
    w = sol->w;
    c = sol->c;
  } else {
    const Mat K = X.transpose() * X;
    constexpr double C = 1e12;
    detail::SvmSolution sol;
    try {
      sol = detail::smo(K, y, C, 1000000);
    } catch (const NonConvergenceError&) {
      throw InfeasibleError("SVM dual diverged; classes are likely not separable");
    }
    const Vec& alpha = sol.alpha;
    if ((alpha.array() >= C * (1.0 - 1e-9)).any()) throw InfeasibleError("classes are not linearly separable");
    const double amax = alpha.maxCoeff();
    w = X * (alpha.array() * y.array()).matrix();
    double csum = 0.0;
    int cnt = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (alpha(i) > 1e-9 * amax) {
        csum += y(i) - w.dot(X.col(i));
        ++cnt;
      }
    c = cnt ? csum / cnt : 0.0;
  }
  const double mm = min_margin(w, c);
  if (!(mm > 0.0) || !w.allFinite()) throw InfeasibleError("classes are not linearly separable");

  // Canonical form with margin points just past the clip boundaries.
  const double scale = (1.0 + 1e-9) / mm;
  SplitParams out;
  out.w = scale * w;
  out.d = -scale * c;
  return out;
}

}  // namespace bluth
