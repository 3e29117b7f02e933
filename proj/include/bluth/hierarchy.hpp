#pragma once

// The binary unmixing tree: split hyperplanes, clipped-linear splitting
// coefficients, hierarchical abundances and the BLTH model format.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bluth/binary_io.hpp"
#include "bluth/errors.hpp"
#include "bluth/scene.hpp"

namespace bluth {

/// Hyperplane parameters of one split: x = clip((w.y - d + 1) / 2).
struct SplitParams {
  Vec w;
  double d = 0.0;
};

enum class Polarity : std::uint8_t { positive = 0, negative = 1 };

struct Node {
  int id = 0;
  std::optional<int> parent;
  Polarity polarity = Polarity::positive;
  int depth = 0;
  Vec spectrum;
  std::optional<SplitParams> split;
  std::array<int, 2> children{-1, -1};  // {positive, negative}

  bool is_leaf() const { return !split.has_value(); }
};

// cReLU
inline double clip01(double u) { return u <= 0.0 ? 0.0 : (u >= 1.0 ? 1.0 : u); }

inline double split_argument(const SplitParams& s, const Eigen::Ref<const Vec>& y) {
  return 0.5 * (s.w.dot(y) - s.d + 1.0);
}

inline double evaluate_split(const SplitParams& s, const Eigen::Ref<const Vec>& y) {
  return clip01(split_argument(s, y));
}

/// Two-endmember objective |y - (x s_pos + (1-x) s_neg)|^2 - gamma |(x, 1-x)|^2.
inline double binary_objective(const Vec& s_pos, const Vec& s_neg, const Eigen::Ref<const Vec>& y, double gamma,
                               double x) {
  return (y - x * s_pos - (1.0 - x) * s_neg).squaredNorm() - gamma * (x * x + (1.0 - x) * (1.0 - x));
}

/// Hyperplane whose clipped response is the exact minimizer of the
/// two-endmember objective. The stationary point is
///   x = (p.(y - s_neg) - gamma) / (|p|^2 - 2 gamma),  p = s_pos - s_neg,
/// which is w = 2p / (|p|^2 - 2 gamma), d = w.(s_pos + s_neg)/2.
/// Throws DegenerateError when the quadratic in x is not strictly convex.
inline SplitParams init_split_from_spectra(const Vec& s_pos, const Vec& s_neg, double gamma) {
  if (s_pos.size() != s_neg.size()) throw ArgumentError("spectra lengths differ");
  const Vec p = s_pos - s_neg;
  const double denom = p.squaredNorm() - 2.0 * gamma;
  if (!(denom > 0.0)) throw DegenerateError("degenerate split: |s_pos - s_neg|^2 <= 2 gamma");
  SplitParams out;
  out.w = (2.0 / denom) * p;
  out.d = out.w.dot(0.5 * (s_pos + s_neg));
  return out;
}

/// Minimizer of binary_objective over x in [0,1]; falls back to comparing
/// the endpoints when the closed form is degenerate.
inline double binary_abundance(const Vec& s_pos, const Vec& s_neg, const Eigen::Ref<const Vec>& y, double gamma) {
  try {
    return evaluate_split(init_split_from_spectra(s_pos, s_neg, gamma), y);
  } catch (const DegenerateError&) {
    const double f1 = binary_objective(s_pos, s_neg, y, gamma, 1.0);
    const double f0 = binary_objective(s_pos, s_neg, y, gamma, 0.0);
    return f1 < f0 ? 1.0 : 0.0;
  }
}

/// Per-pixel quantities for every node, indexed by node id. `arg` and `x`
/// are meaningful only for internal nodes.
struct PixelEval {
  std::vector<double> arg;
  std::vector<double> x;
  std::vector<double> a;
};

class BluthModel {
 public:
  BluthModel() = default;

  explicit BluthModel(Vec root_spectrum) {
    Node root;
    root.spectrum = std::move(root_spectrum);
    nodes_.push_back(std::move(root));
  }

  Eigen::Index bands() const { return nodes_.empty() ? 0 : nodes_.front().spectrum.size(); }
  int size() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const std::vector<Node>& nodes() const { return nodes_; }
  static constexpr int root() { return 0; }

  int max_depth() const {
    int m = 0;
    for (const auto& n : nodes_) m = std::max(m, n.depth);
    return m;
  }

  int leaf_count() const {
    return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
  }

  /// Nodes at `level`, plus leaves shallower than it, in depth-first order
  /// visiting the positive child first.
  std::vector<int> frontier(int level) const {
    std::vector<int> out;
    collect_frontier(root(), level, out);
    return out;
  }

  std::vector<int> leaves() const { return frontier(max_depth()); }

  /// Internal nodes ordered by depth, then id.
  std::vector<int> internal_nodes() const {
    std::vector<int> ids;
    for (const auto& n : nodes_)
      if (!n.is_leaf()) ids.push_back(n.id);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) { return node(a).depth < node(b).depth; });
    return ids;
  }

  /// All nodes ordered by depth, then id.
  std::vector<int> nodes_by_depth() const {
    std::vector<int> ids(nodes_.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) { return node(a).depth < node(b).depth; });
    return ids;
  }

  bool is_descendant(int id, int ancestor) const {
    for (std::optional<int> cur = id; cur; cur = node(*cur).parent)
      if (*cur == ancestor) return true;
    return false;
  }

  /// True when one node lies on the other's root path.
  bool same_lineage(int a, int b) const { return is_descendant(a, b) || is_descendant(b, a); }

  /// Turns leaf `id` into an internal node with two new leaf children.
  void split_node(int id, SplitParams split, Vec s_pos, Vec s_neg) {
    Node& parent = nodes_.at(static_cast<std::size_t>(id));
    if (!parent.is_leaf()) throw StructuralError("node " + std::to_string(id) + " is already internal");
    if (split.w.size() != bands() || s_pos.size() != bands() || s_neg.size() != bands())
      throw ArgumentError("split dimensions do not match model bands");
    const int depth = parent.depth + 1;
    parent.split = std::move(split);
    const int pos_id = size();
    parent.children = {pos_id, pos_id + 1};
    nodes_.push_back(make_child(pos_id, id, Polarity::positive, depth, std::move(s_pos)));
    nodes_.push_back(make_child(pos_id + 1, id, Polarity::negative, depth, std::move(s_neg)));
  }

  void set_split(int id, SplitParams split) {
    Node& n = nodes_.at(static_cast<std::size_t>(id));
    if (n.is_leaf()) throw StructuralError("cannot set split on a leaf");
    if (split.w.size() != bands()) throw ArgumentError("split dimension mismatch");
    n.split = std::move(split);
  }

  void set_spectrum(int id, Vec s) {
    if (s.size() != bands()) throw ArgumentError("spectrum dimension mismatch");
    nodes_.at(static_cast<std::size_t>(id)).spectrum = std::move(s);
  }

  /// Children always carry larger ids than their parent, so a single
  /// ascending sweep propagates abundances from the root.
  void evaluate(const Eigen::Ref<const Vec>& y, PixelEval& ev) const {
    const std::size_t n = nodes_.size();
    ev.arg.assign(n, 0.0);
    ev.x.assign(n, 0.0);
    ev.a.assign(n, 0.0);
    ev.a[0] = 1.0;
    for (const auto& nd : nodes_) {
      if (nd.is_leaf()) continue;
      const auto i = static_cast<std::size_t>(nd.id);
      ev.arg[i] = split_argument(*nd.split, y);
      ev.x[i] = clip01(ev.arg[i]);
      ev.a[static_cast<std::size_t>(nd.children[0])] = ev.a[i] * ev.x[i];
      ev.a[static_cast<std::size_t>(nd.children[1])] = ev.a[i] * (1.0 - ev.x[i]);
    }
  }

  /// Structural fingerprint (parents and polarities only).
  std::uint64_t topology_hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ull;
    };
    for (const auto& n : nodes_) {
      mix(static_cast<std::uint64_t>(n.parent.value_or(-1) + 1));
      mix(static_cast<std::uint64_t>(n.polarity));
    }
    return h;
  }

  // Used by deserialize; validates the tree invariants.
  static BluthModel from_nodes(std::vector<Node> nodes) {
    if (nodes.empty()) throw FormatError("model has no nodes");
    BluthModel m;
    const Eigen::Index b = nodes.front().spectrum.size();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      auto& n = nodes[i];
      if (n.id != static_cast<int>(i)) throw FormatError("node ids must be dense and ordered");
      if (n.spectrum.size() != b) throw FormatError("inconsistent spectrum length");
      n.children = {-1, -1};
      if (i == 0) {
        if (n.parent) throw FormatError("node 0 must be the root");
        n.depth = 0;
      } else {
        if (!n.parent || *n.parent < 0 || *n.parent >= n.id) throw FormatError("parent must precede child");
        auto& par = nodes[static_cast<std::size_t>(*n.parent)];
        n.depth = par.depth + 1;
        const auto slot = static_cast<std::size_t>(n.polarity);
        if (par.children[slot] != -1) throw FormatError("duplicate child polarity");
        par.children[slot] = n.id;
      }
    }
    for (const auto& n : nodes) {
      const bool has_children = n.children[0] != -1 || n.children[1] != -1;
      if (has_children != n.split.has_value() || (has_children && (n.children[0] == -1 || n.children[1] == -1)))
        throw FormatError("internal nodes need a split and exactly two children");
    }
    m.nodes_ = std::move(nodes);
    return m;
  }

 private:
  static Node make_child(int id, int parent, Polarity pol, int depth, Vec spectrum) {
    Node c;
    c.id = id;
    c.parent = parent;
    c.polarity = pol;
    c.depth = depth;
    c.spectrum = std::move(spectrum);
    return c;
  }

  void collect_frontier(int id, int level, std::vector<int>& out) const {
    const Node& n = node(id);
    if (n.depth == level || n.is_leaf()) {
      out.push_back(id);
      return;
    }
    collect_frontier(n.children[0], level, out);
    collect_frontier(n.children[1], level, out);
  }

  std::vector<Node> nodes_;
};

/// Abundances of the level-`level` frontier, as products of splitting
/// coefficients along each root path.
inline Vec abundances(const BluthModel& model, const Eigen::Ref<const Vec>& y, int level) {
  if (level < 0) throw ArgumentError("level must be >= 0");
  PixelEval ev;
  model.evaluate(y, ev);
  const auto ids = model.frontier(level);
  Vec out(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) out(static_cast<Eigen::Index>(i)) = ev.a[static_cast<std::size_t>(ids[i])];
  return out;
}

/// Frontier abundance maps (frontier size x N).
inline Mat abundance_maps(const BluthModel& model, const Mat& pixels, int level) {
  const auto ids = model.frontier(level);
  Mat out(static_cast<Eigen::Index>(ids.size()), pixels.cols());
  PixelEval ev;
  for (Eigen::Index n = 0; n < pixels.cols(); ++n) {
    model.evaluate(pixels.col(n), ev);
    for (std::size_t i = 0; i < ids.size(); ++i) out(static_cast<Eigen::Index>(i), n) = ev.a[static_cast<std::size_t>(ids[i])];
  }
  return out;
}

/// Spectra of the level-`level` frontier as columns.
inline Mat frontier_spectra(const BluthModel& model, int level) {
  const auto ids = model.frontier(level);
  Mat s(model.bands(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) s.col(static_cast<Eigen::Index>(i)) = model.node(ids[i]).spectrum;
  return s;
}

// ---------------------------------------------------------------------------
// BLTH format
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kBlthVersion = 1;

/// Float count of the parameter payload: (P-1)(2B+1) + P B.
inline std::size_t payload_float_count(std::size_t leaves, std::size_t bands) {
  return (leaves - 1) * (2 * bands + 1) + leaves * bands;
}

inline io::Bytes serialize(const BluthModel& m) {
  io::Writer w;
  w.raw("BLTH", 4);
  w.u16(kBlthVersion);
  w.u32(static_cast<std::uint32_t>(m.bands()));
  w.u32(static_cast<std::uint32_t>(m.size()));
  for (const auto& n : m.nodes()) {
    w.u32(static_cast<std::uint32_t>(n.id));
    w.i32(n.parent.value_or(-1));
    w.u8(static_cast<std::uint8_t>(n.polarity));
    w.u8(n.split ? 1 : 0);
    for (Eigen::Index b = 0; b < n.spectrum.size(); ++b) w.f32(static_cast<float>(n.spectrum(b)));
    if (n.split) {
      for (Eigen::Index b = 0; b < n.split->w.size(); ++b) w.f32(static_cast<float>(n.split->w(b)));
      w.f32(static_cast<float>(n.split->d));
    }
  }
  return w.take();
}

inline BluthModel deserialize(const io::Bytes& bytes) {
  io::Reader r(bytes);
  if (r.tag(4) != "BLTH") throw FormatError("bad magic: expected BLTH");
  if (const auto v = r.u16(); v != kBlthVersion) throw FormatError("unsupported BLTH version " + std::to_string(v));
  const std::uint32_t bands = r.u32();
  const std::uint32_t count = r.u32();
  if (bands == 0 || count == 0) throw FormatError("empty model");
  std::vector<Node> nodes;
  nodes.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Node n;
    n.id = static_cast<int>(r.u32());
    const std::int32_t parent = r.i32();
    if (parent >= 0) n.parent = parent;
    const std::uint8_t pol = r.u8();
    if (pol > 1) throw FormatError("bad polarity");
    n.polarity = static_cast<Polarity>(pol);
    const std::uint8_t has_split = r.u8();
    n.spectrum.resize(bands);
    for (std::uint32_t b = 0; b < bands; ++b) n.spectrum(b) = r.f32();
    if (has_split) {
      SplitParams s;
      s.w.resize(bands);
      for (std::uint32_t b = 0; b < bands; ++b) s.w(b) = r.f32();
      s.d = r.f32();
      n.split = std::move(s);
    }
    nodes.push_back(std::move(n));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after model");
  return BluthModel::from_nodes(std::move(nodes));
}

inline void save_model(const BluthModel& m, const std::string& path) { io::write_file(path, serialize(m)); }
inline BluthModel load_model(const std::string& path) { return deserialize(io::read_file(path)); }

}  // namespace bluth
