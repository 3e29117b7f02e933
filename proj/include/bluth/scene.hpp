#pragma once

// Scene container, HSB1 file format, partial L2 normalization and a
// synthetic linear-mixing scene generator.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bluth/binary_io.hpp"
#include "bluth/errors.hpp"

namespace bluth {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A B x N nonnegative spectral image. Column n is pixel n, where
/// n = row * cols + col.
struct Scene {
  Mat data;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::optional<Vec> weights;
  std::optional<std::vector<double>> band_centers;

  Eigen::Index bands() const { return data.rows(); }
  Eigen::Index pixels() const { return data.cols(); }
  double weight(Eigen::Index n) const { return weights ? (*weights)(n) : 1.0; }
  auto pixel(Eigen::Index n) const { return data.col(n); }

  // Throws ArgumentError when an invariant is violated.
  void validate() const {
    if (data.rows() < 1 || data.cols() < 1) throw ArgumentError("scene must have B >= 1 and N >= 1");
    if (rows * cols != static_cast<std::size_t>(data.cols()))
      throw ArgumentError("rows * cols does not match pixel count");
    if (!data.allFinite() || (data.array() < 0.0).any())
      throw ArgumentError("scene values must be finite and nonnegative");
    if (weights) {
      if (weights->size() != data.cols()) throw ArgumentError("weights length must equal N");
      if (!weights->allFinite() || (weights->array() < 0.0).any())
        throw ArgumentError("weights must be finite and nonnegative");
    }
    if (band_centers && band_centers->size() != static_cast<std::size_t>(data.rows()))
      throw ArgumentError("band_centers length must equal B");
  }
};

struct NormalizationSpec {
  double epsilon = 1.0;
  double nu = 0.25;
};

/// Reference abundances (P_true x N) with names, plus the generating
/// spectra (B x P_true) when they are known.
struct LabelSet {
  Mat abundances;
  std::vector<std::string> names;
  std::optional<Mat> spectra;
};

// ---------------------------------------------------------------------------
// HSB1 container
// ---------------------------------------------------------------------------

namespace detail {

inline io::Bytes encode_hsb1(const Mat& values, std::size_t rows, std::size_t cols,
                             const std::optional<Vec>& weights) {
  io::Writer w;
  w.raw("HSB1", 4);
  w.u32(static_cast<std::uint32_t>(values.rows()));
  w.u32(static_cast<std::uint32_t>(rows));
  w.u32(static_cast<std::uint32_t>(cols));
  w.u8(weights ? 1 : 0);
  for (Eigen::Index n = 0; n < values.cols(); ++n)
    for (Eigen::Index b = 0; b < values.rows(); ++b) w.f32(static_cast<float>(values(b, n)));
  if (weights)
    for (Eigen::Index n = 0; n < weights->size(); ++n) w.f32(static_cast<float>((*weights)(n)));
  return w.take();
}

struct Hsb1Payload {
  Mat values;
  std::size_t rows = 0, cols = 0;
  std::optional<Vec> weights;
};

inline Hsb1Payload decode_hsb1(const io::Bytes& bytes) {
  io::Reader r(bytes);
  if (r.tag(4) != "HSB1") throw FormatError("bad magic: expected HSB1");
  const std::uint32_t bands = r.u32();
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  const std::uint8_t flags = r.u8();
  const std::uint64_t n = static_cast<std::uint64_t>(rows) * cols;
  if (bands == 0 || n == 0) throw FormatError("empty scene dimensions");
  const std::uint64_t expected = 4 * (n * bands + ((flags & 1u) ? n : 0));
  if (r.remaining() < expected) throw FormatError("truncated payload");
  if (r.remaining() > expected) throw FormatError("trailing bytes after payload");

  Hsb1Payload p;
  p.rows = rows;
  p.cols = cols;
  p.values.resize(bands, static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < p.values.cols(); ++j)
    for (Eigen::Index b = 0; b < p.values.rows(); ++b) {
      const float v = r.f32();
      if (!std::isfinite(v) || v < 0.0f) throw FormatError("negative or non-finite value in payload");
      p.values(b, j) = v;
    }
  if (flags & 1u) {
    Vec wts(static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < wts.size(); ++j) {
      const float v = r.f32();
      if (!std::isfinite(v) || v < 0.0f) throw FormatError("negative or non-finite weight");
      wts(j) = v;
    }
    p.weights = std::move(wts);
  }
  return p;
}

}  // namespace detail

/// Serializes to HSB1. Values are stored as f32, so only scenes whose
/// entries are f32-representable survive a roundtrip bit-exactly.
inline io::Bytes encode_scene(const Scene& s) {
  return detail::encode_hsb1(s.data, s.rows, s.cols, s.weights);
}

inline Scene decode_scene(const io::Bytes& bytes) {
  auto p = detail::decode_hsb1(bytes);
  Scene s;
  s.data = std::move(p.values);
  s.rows = p.rows;
  s.cols = p.cols;
  s.weights = std::move(p.weights);
  return s;
}

inline void save_scene(const Scene& s, const std::string& path) { io::write_file(path, encode_scene(s)); }

inline Scene load_scene(const std::string& path) { return decode_scene(io::read_file(path)); }

// Labels reuse HSB1 with bands := P_true; names go in "<path>.names.json".
inline std::string label_names_path(const std::string& path) { return path + ".names.json"; }

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// y / |y|^(1 - eps) per pixel; zero-norm pixels pass through.
inline Scene partial_normalize(const Scene& scene, const NormalizationSpec& spec) {
  Scene out = scene;
  const double expo = 1.0 - spec.epsilon;
  if (expo == 0.0) return out;
  for (Eigen::Index n = 0; n < out.data.cols(); ++n) {
    const double norm = out.data.col(n).norm();
    if (norm > 0.0) out.data.col(n) /= std::pow(norm, expo);
  }
  return out;
}

/// Inverse of partial_normalize for eps > 0.
inline Vec partial_denormalize(const Vec& normalized, double epsilon) {
  if (!(epsilon > 0.0)) throw ArgumentError("inverse normalization requires epsilon > 0");
  const double norm = normalized.norm();
  if (norm == 0.0) return normalized;
  return normalized * std::pow(norm, (1.0 - epsilon) / epsilon);
}

/// eps = nu log p / log(|y|max / |y|min), clamped to (0, 1]. Pixels with
/// zero norm are ignored.
inline double compute_epsilon(const Scene& scene, int p, double nu) {
  if (p < 2) throw ArgumentError("compute_epsilon requires p >= 2");
  if (!(nu > 0.0)) throw ArgumentError("nu must be positive");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  Eigen::Index counted = 0;
  for (Eigen::Index n = 0; n < scene.data.cols(); ++n) {
    const double norm = scene.data.col(n).norm();
    if (norm <= 0.0) continue;
    lo = std::min(lo, norm);
    hi = std::max(hi, norm);
    ++counted;
  }
  if (counted < 2) throw DegenerateError("need at least two pixels with nonzero norm");
  const double log_ratio = std::log(hi / lo);
  if (!(log_ratio > 0.0)) throw DegenerateError("degenerate luminosity range: all pixel norms equal");
  const double eps = nu * std::log(static_cast<double>(p)) / log_ratio;
  return std::clamp(eps, std::numeric_limits<double>::min(), 1.0);
}

// ---------------------------------------------------------------------------
// Synthetic scenes
// ---------------------------------------------------------------------------

struct SynthOptions {
  int bands = 64;
  double min_angle_deg = 15.0;
};

namespace detail {

inline double angle_deg(const Vec& a, const Vec& b) {
  const double c = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

// Smooth nonnegative spectrum: a baseline slope plus three Gaussian bumps,
// scaled to unit L2 norm.
inline Vec random_spectrum(int bands, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec s(bands);
  const double base = 0.05 + 0.3 * u(rng);
  const double slope = (u(rng) - 0.5) * 0.4;
  double c[3], w[3], a[3];
  for (int k = 0; k < 3; ++k) {
    c[k] = u(rng);
    w[k] = 0.05 + 0.2 * u(rng);
    a[k] = u(rng);
  }
  for (int b = 0; b < bands; ++b) {
    const double t = bands > 1 ? static_cast<double>(b) / (bands - 1) : 0.0;
    double v = base + slope * (t - 0.5);
    for (int k = 0; k < 3; ++k) v += a[k] * std::exp(-0.5 * std::pow((t - c[k]) / w[k], 2));
    s(b) = std::max(v, 0.01);
  }
  return s / s.norm();
}

}  // namespace detail

/// Random linear-mixing scene. Endmembers are pairwise >= 15 degrees
/// apart; every endmember owns at least ceil(N/10) pure pixels (capped at
/// floor(N/p)); the remaining pixels mix two endmembers most of the time,
/// three or more less often. snr_db = +inf disables noise.
inline std::pair<Scene, LabelSet> synth_scene(int p, std::size_t rows, std::size_t cols, double snr_db,
                                              std::uint64_t seed, const SynthOptions& opt = {}) {
  if (p < 1) throw ArgumentError("synth_scene requires p >= 1");
  if (rows == 0 || cols == 0) throw ArgumentError("synth_scene requires a nonempty grid");
  const auto n_pix = static_cast<Eigen::Index>(rows * cols);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  Mat spectra(opt.bands, p);
  for (int k = 0; k < p; ++k) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw DegenerateError("could not draw well-separated endmember spectra");
      Vec cand = detail::random_spectrum(opt.bands, rng);
      bool ok = true;
      for (int j = 0; j < k && ok; ++j) ok = detail::angle_deg(cand, spectra.col(j)) >= opt.min_angle_deg;
      if (ok) {
        spectra.col(k) = cand;
        break;
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_pix));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  const Eigen::Index want_pure = (n_pix + 9) / 10;
  const Eigen::Index pure_each = std::min(want_pure, n_pix / p);

  Mat abund = Mat::Zero(p, n_pix);
  std::size_t cursor = 0;
  for (int k = 0; k < p; ++k)
    for (Eigen::Index i = 0; i < pure_each; ++i) abund(k, order[cursor++]) = 1.0;

  std::gamma_distribution<double> gamma1(1.0, 1.0);
  for (; cursor < order.size(); ++cursor) {
    const Eigen::Index n = order[cursor];
    if (p == 1) {
      abund(0, n) = 1.0;
      continue;
    }
    const double r = u01(rng);
    int active = r < 0.75 ? 2 : (r < 0.95 ? 3 : p);
    active = std::min(active, p);
    std::vector<int> ids(static_cast<std::size_t>(p));
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    double total = 0.0;
    for (int i = 0; i < active; ++i) {
      const double g = gamma1(rng);
      abund(ids[static_cast<std::size_t>(i)], n) = g;
      total += g;
    }
    abund.col(n) /= total;
  }

  Mat clean = spectra * abund;
  Scene scene;
  scene.rows = rows;
  scene.cols = cols;
  scene.data = clean;
  if (std::isfinite(snr_db)) {
    const double signal_power = clean.squaredNorm() / static_cast<double>(clean.size());
    const double sigma = std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index j = 0; j < scene.data.cols(); ++j)
      for (Eigen::Index b = 0; b < scene.data.rows(); ++b)
        scene.data(b, j) = std::max(0.0, scene.data(b, j) + noise(rng));
  }
  std::vector<double> centers(static_cast<std::size_t>(opt.bands));
  for (int b = 0; b < opt.bands; ++b)
    centers[static_cast<std::size_t>(b)] = 400.0 + 600.0 * b / std::max(1, opt.bands - 1);
  scene.band_centers = std::move(centers);

  LabelSet labels;
  labels.abundances = std::move(abund);
  for (int k = 0; k < p; ++k) labels.names.push_back("em" + std::to_string(k));
  labels.spectra = std::move(spectra);
  return {std::move(scene), std::move(labels)};
}

}  // namespace bluth
