#pragma once

// Command-line front end: synth, train, eval and export.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bluth/annealing.hpp"
#include "bluth/errors.hpp"
#include "bluth/eval.hpp"
#include "bluth/hierarchy.hpp"
#include "bluth/scene.hpp"
#include "bluth/training.hpp"

namespace bluth::cli {

using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericError = 3, kIoError = 4 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  TrainerConfig trainer;
  NormalizationSpec normalization;  // epsilon is derived, nu is configurable
  AnnealSchedule anneal;
  std::string mode = "bluth";
};

namespace detail {

template <typename T>
T take(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* n : known) ok = ok || k == n;
    if (!ok) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

}  // namespace detail

/// Parses a RunConfig document; unknown keys are rejected.
inline RunConfig parse_run_config(const json& j) {
  detail::reject_unknown(j,
                         {"n_runs", "ppp_setpoint", "batch_standard", "batch_large", "target_endmembers", "seed",
                          "max_sparsify_sets", "max_shake_cycles", "desparsify_steps", "pure_pixel_rounds",
                          "cluster_iterations", "level_weight_ratio", "level_weights", "nu", "anneal", "mode"},
                         "config");
  RunConfig c;
  TrainerConfig& t = c.trainer;
  t.n_runs = detail::take(j, "n_runs", t.n_runs);
  t.ppp_setpoint = detail::take(j, "ppp_setpoint", t.ppp_setpoint);
  t.batch_standard = detail::take(j, "batch_standard", t.batch_standard);
  t.batch_large = detail::take(j, "batch_large", t.batch_large);
  t.target_endmembers = detail::take(j, "target_endmembers", t.target_endmembers);
  t.seed = detail::take(j, "seed", t.seed);
  t.max_sparsify_sets = detail::take(j, "max_sparsify_sets", t.max_sparsify_sets);
  t.max_shake_cycles = detail::take(j, "max_shake_cycles", t.max_shake_cycles);
  t.desparsify_steps = detail::take(j, "desparsify_steps", t.desparsify_steps);
  t.pure_pixel_rounds = detail::take(j, "pure_pixel_rounds", t.pure_pixel_rounds);
  t.cluster_iterations = detail::take(j, "cluster_iterations", t.cluster_iterations);
  t.objective.level_weight_ratio = detail::take(j, "level_weight_ratio", t.objective.level_weight_ratio);
  t.objective.level_weights = detail::take(j, "level_weights", t.objective.level_weights);
  c.normalization.nu = detail::take(j, "nu", c.normalization.nu);
  c.mode = detail::take(j, "mode", c.mode);
  if (j.contains("anneal")) {
    const json& a = j.at("anneal");
    detail::reject_unknown(a, {"t_initial", "decay", "iterations"}, "anneal");
    c.anneal.t_initial = detail::take(a, "t_initial", c.anneal.t_initial);
    c.anneal.decay = detail::take(a, "decay", c.anneal.decay);
    c.anneal.iterations = detail::take(a, "iterations", c.anneal.iterations);
  }
  if (c.mode != "bluth" && c.mode != "daaa" && c.mode != "sappa") throw ConfigError("mode must be bluth, daaa or sappa");
  if (!(c.normalization.nu > 0.0)) throw ConfigError("nu must be positive");
  if (!(c.trainer.objective.level_weight_ratio > 0.0)) throw ConfigError("level_weight_ratio must be positive");
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_run_config(j);
}

// ---------------------------------------------------------------------------
// Label and flat-model files
// ---------------------------------------------------------------------------

/// "<stem>.hsb" -> "<stem>.spectra.csv".
inline std::string spectra_csv_path(const std::string& hsb_path) {
  std::filesystem::path p(hsb_path);
  p.replace_extension(".spectra.csv");
  return p.string();
}

/// Columns: band, then one column per spectrum.
inline std::string spectra_csv(const Mat& spectra, const std::vector<std::string>& names) {
  std::ostringstream os;
  os << std::setprecision(9) << "band";
  for (Eigen::Index k = 0; k < spectra.cols(); ++k)
    os << ',' << (static_cast<std::size_t>(k) < names.size() ? names[static_cast<std::size_t>(k)] : "em" + std::to_string(k));
  os << '\n';
  for (Eigen::Index b = 0; b < spectra.rows(); ++b) {
    os << b;
    for (Eigen::Index k = 0; k < spectra.cols(); ++k) os << ',' << static_cast<float>(spectra(b, k));
    os << '\n';
  }
  return os.str();
}

inline Mat read_spectra_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty spectra CSV " + path);
  const auto cols = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    std::getline(ss, cell, ',');
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("bad number '" + cell + "' in " + path);
      }
    }
    if (static_cast<Eigen::Index>(row.size()) != cols) throw FormatError("ragged row in " + path);
    rows.push_back(std::move(row));
  }
  Mat m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t b = 0; b < rows.size(); ++b)
    for (Eigen::Index k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(b), k) = rows[b][static_cast<std::size_t>(k)];
  return m;
}

/// Abundances as HSB1 (bands := P_true), names sidecar, spectra CSV if known.
inline void save_labels(const LabelSet& labels, std::size_t rows, std::size_t cols, const std::string& path) {
  io::write_file(path, bluth::detail::encode_hsb1(labels.abundances, rows, cols, std::nullopt));
  io::write_text(label_names_path(path), json(labels.names).dump() + "\n");
  if (labels.spectra) io::write_text(spectra_csv_path(path), spectra_csv(*labels.spectra, labels.names));
}

inline LabelSet load_labels(const std::string& path) {
  auto p = bluth::detail::decode_hsb1(io::read_file(path));
  LabelSet l;
  l.abundances = std::move(p.values);
  const auto names_path = label_names_path(path);
  if (std::filesystem::exists(names_path)) {
    std::ifstream in(names_path);
    try {
      l.names = json::parse(in).get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw FormatError("bad label names file: " + std::string(e.what()));
    }
  }
  const auto csv = spectra_csv_path(path);
  if (std::filesystem::exists(csv)) l.spectra = read_spectra_csv(csv);
  if (l.spectra && l.spectra->cols() != l.abundances.rows())
    throw FormatError("label spectra and abundances disagree on the endmember count");
  return l;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct SynthArgs {
  int p = 4;
  std::size_t rows = 64;
  std::size_t cols = 64;
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  int bands = 64;
  std::string out = ".";
};

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

inline std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

/// Writes scene.hsb, labels.hsb (+ names sidecar) and labels.spectra.csv.
inline void cmd_synth(const SynthArgs& a) {
  SynthOptions opt;
  opt.bands = a.bands;
  const auto [scene, labels] = synth_scene(a.p, a.rows, a.cols, a.snr_db, a.seed, opt);
  ensure_dir(a.out);
  save_scene(scene, join(a.out, "scene.hsb"));
  save_labels(labels, scene.rows, scene.cols, join(a.out, "labels.hsb"));
}

struct TrainArgs {
  std::string scene;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::string out = ".";
};

inline double training_epsilon(const Scene& scene, int p, double nu) {
  if (p < 2) return 1.0;
  return compute_epsilon(scene, p, nu);
}

inline json entry_json(const ProgressEntry& e) {
  return json{{"stage", e.stage},
              {"modality", e.modality},
              {"step", e.step},
              {"gamma", e.gamma},
              {"total", e.value.total},
              {"data_terms", e.value.data_terms},
              {"penalty_terms", e.value.penalty_terms},
              {"lowest_level_data", e.value.lowest_level_data},
              {"weight_sum", e.value.weight_sum},
              {"ppp", e.ppp},
              {"seconds", e.seconds}};
}

inline json progress_json(const std::string& mode, double epsilon, const std::vector<ProgressEntry>& log,
                          const std::vector<std::string>& warnings) {
  json entries = json::array();
  for (const auto& e : log) entries.push_back(entry_json(e));
  return json{{"mode", mode}, {"epsilon", epsilon}, {"warnings", warnings}, {"entries", entries}};
}

/// BLUTH mode writes model_ppa.blth and model_aa.blth; the annealing modes
/// write <mode>.abundances.hsb and <mode>.spectra.csv. All write progress.json.
inline void cmd_train(const TrainArgs& a) {
  RunConfig rc = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  if (a.seed) rc.trainer.seed = *a.seed;
  if (a.mode) rc.mode = *a.mode;
  if (rc.mode != "bluth" && rc.mode != "daaa" && rc.mode != "sappa") throw ConfigError("mode must be bluth, daaa or sappa");
  const Scene raw = load_scene(a.scene);
  const int p = rc.trainer.target_endmembers;
  rc.normalization.epsilon = training_epsilon(raw, p, rc.normalization.nu);
  const Scene scene = partial_normalize(raw, rc.normalization);
  ensure_dir(a.out);

  if (rc.mode == "bluth") {
    try {
      rc.trainer.validate(scene.pixels());
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
    Trainer trainer(scene, rc.trainer);
    const auto result = trainer.train();
    save_model(result.model_ppa, join(a.out, "model_ppa.blth"));
    save_model(result.model_aa, join(a.out, "model_aa.blth"));
    io::write_text(join(a.out, "progress.json"),
                   progress_json(rc.mode, rc.normalization.epsilon, trainer.log(), trainer.warnings()).dump(1) + "\n");
    return;
  }
  const AnnealResult r = rc.mode == "daaa" ? daaa(scene, p, rc.anneal, rc.trainer.seed)
                                           : sappa(scene, p, rc.anneal, rc.trainer.seed);
  io::write_file(join(a.out, rc.mode + ".abundances.hsb"),
                 bluth::detail::encode_hsb1(r.model.abundances, scene.rows, scene.cols, std::nullopt));
  io::write_text(join(a.out, rc.mode + ".spectra.csv"), spectra_csv(r.model.spectra, {}));
  io::write_text(join(a.out, "progress.json"), progress_json(rc.mode, rc.normalization.epsilon, r.log, {}).dump(1) + "\n");
}

struct EvalArgs {
  std::vector<std::string> models;
  std::string labels;
  std::string scene;
  std::string config;
  std::optional<int> level;
  std::string out = ".";
};

struct Estimate {
  std::string name;
  Mat spectra;     // B x P
  Mat abundances;  // P x N
};

/// BLTH models are evaluated on the scene normalized with p = leaf count;
/// "<stem>.abundances.hsb" files are flat models with a sibling spectra CSV.
inline Estimate load_estimate(const std::string& path, const std::optional<Scene>& raw, double nu,
                              std::optional<int> level) {
  Estimate e;
  e.name = std::filesystem::path(path).filename().string();
  const std::string suffix = ".abundances.hsb";
  if (path.size() > suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    e.abundances = bluth::detail::decode_hsb1(io::read_file(path)).values;
    e.spectra = read_spectra_csv(path.substr(0, path.size() - suffix.size()) + ".spectra.csv");
    if (e.spectra.cols() != e.abundances.rows()) throw FormatError("flat model spectra and abundances disagree");
    return e;
  }
  const BluthModel m = load_model(path);
  if (!raw) throw ConfigError("--scene is required to evaluate " + path);
  if (raw->bands() != m.bands()) throw ArgumentError("band-count mismatch between model and scene");
  NormalizationSpec ns;
  ns.nu = nu;
  ns.epsilon = training_epsilon(*raw, m.leaf_count(), nu);
  const Scene scene = partial_normalize(*raw, ns);
  const int l = level.value_or(m.max_depth());
  if (l < 0 || l > m.max_depth()) throw ArgumentError("level outside the model");
  e.spectra = frontier_spectra(m, l);
  e.abundances = abundance_maps(m, scene.data, l);
  return e;
}

inline json report_json(const std::vector<EvalReport>& reports) {
  json out = json::array();
  for (const auto& r : reports) {
    json pairs = json::array();
    for (const auto& p : r.pairs)
      pairs.push_back({{"estimate", p.estimate}, {"label", p.label}, {"name", p.label_name}, {"angle_deg", p.angle_deg},
                       {"iou", p.iou}});
    out.push_back({{"technique", r.technique},
                   {"pairs", pairs},
                   {"mean_angle_deg", r.mean_angle()},
                   {"mean_iou", r.mean_iou()},
                   {"missed", r.missed}});
  }
  return out;
}

/// Writes eval.json and eval.csv; returns the reports.
inline std::vector<EvalReport> cmd_eval(const EvalArgs& a) {
  if (a.models.empty()) throw ConfigError("eval needs at least one --model");
  const RunConfig rc = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  const LabelSet labels = load_labels(a.labels);
  if (!labels.spectra) throw ConfigError("labels have no spectra CSV next to " + a.labels);
  std::optional<Scene> raw;
  if (!a.scene.empty()) raw = load_scene(a.scene);
  std::vector<EvalReport> reports;
  for (const auto& path : a.models) {
    const Estimate e = load_estimate(path, raw, rc.normalization.nu, a.level);
    if (e.spectra.rows() != labels.spectra->rows()) throw ArgumentError("band-count mismatch between model and labels");
    reports.push_back(evaluate(e.spectra, e.abundances, labels, e.name));
  }
  tally_misses(reports, static_cast<int>(labels.abundances.rows()));
  ensure_dir(a.out);
  io::write_text(join(a.out, "eval.json"), report_json(reports).dump(1) + "\n");
  io::write_text(join(a.out, "eval.csv"), report_csv(reports));
  return reports;
}

struct ExportArgs {
  std::string model;
  std::string scene;
  std::string config;
  std::optional<int> level;
  bool dot = false;
  std::string out = ".";
};

/// 8-bit gray level of an abundance, rounded half-up.
inline std::uint8_t gray_level(double a) {
  return static_cast<std::uint8_t>(std::floor(std::clamp(a, 0.0, 1.0) * 255.0 + 0.5));
}

inline io::Bytes pgm_p5(const Eigen::Ref<const Vec>& values, std::size_t rows, std::size_t cols) {
  if (static_cast<std::size_t>(values.size()) != rows * cols) throw ArgumentError("image size mismatch");
  const std::string header = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  io::Bytes out(header.begin(), header.end());
  for (Eigen::Index i = 0; i < values.size(); ++i) out.push_back(gray_level(values(i)));
  return out;
}

/// One node per endmember, one edge per parent link.
inline std::string tree_dot(const BluthModel& m) {
  std::ostringstream os;
  os << "digraph bluth {\n";
  for (const auto& n : m.nodes()) os << "  n" << n.id << " [label=\"" << n.id << "\"];\n";
  for (const auto& n : m.nodes())
    if (n.parent)
      os << "  n" << *n.parent << " -> n" << n.id << " [label=\"" << (n.polarity == Polarity::positive ? '+' : '-')
         << "\"];\n";
  os << "}\n";
  return os.str();
}

/// Writes abundance_<id>.pgm and spectrum_<id>.csv per frontier node, and
/// tree.dot when requested.
inline void cmd_export(const ExportArgs& a) {
  const RunConfig rc = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  const BluthModel m = load_model(a.model);
  const Scene raw = load_scene(a.scene);
  if (raw.bands() != m.bands()) throw ArgumentError("band-count mismatch between model and scene");
  NormalizationSpec ns;
  ns.nu = rc.normalization.nu;
  ns.epsilon = training_epsilon(raw, m.leaf_count(), ns.nu);
  const Scene scene = partial_normalize(raw, ns);
  const int l = a.level.value_or(m.max_depth());
  if (l < 0 || l > m.max_depth()) throw ArgumentError("level outside the model");
  const auto ids = m.frontier(l);
  const Mat A = abundance_maps(m, scene.data, l);
  ensure_dir(a.out);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const std::string stem = std::to_string(ids[k]);
    io::write_file(join(a.out, "abundance_" + stem + ".pgm"),
                   pgm_p5(A.row(static_cast<Eigen::Index>(k)).transpose(), raw.rows, raw.cols));
    std::ostringstream os;
    os << std::setprecision(9) << "band,value\n";
    const Vec& s = m.node(ids[k]).spectrum;
    for (Eigen::Index b = 0; b < s.size(); ++b) os << b << ',' << static_cast<float>(s(b)) << '\n';
    io::write_text(join(a.out, "spectrum_" + stem + ".csv"), os.str());
  }
  if (a.dot) io::write_text(join(a.out, "tree.dot"), tree_dot(m));
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline double parse_snr(const std::string& s) {
  if (s == "inf" || s == "+inf" || s == "Inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("bad --snr value " + s);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("bad --snr value " + s);
  }
}

/// Parses argv and runs one command; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"Hierarchical hyperspectral unmixing"};
  app.require_subcommand(1);

  SynthArgs sa;
  std::string snr = "inf";
  auto* synth = app.add_subcommand("synth", "Write a synthetic scene, labels and truth spectra");
  synth->add_option("-p", sa.p, "Endmember count")->required();
  synth->add_option("-r,--rows", sa.rows, "Rows")->required();
  synth->add_option("-c,--cols", sa.cols, "Columns")->required();
  synth->add_option("--snr", snr, "Signal-to-noise ratio in dB, or inf");
  synth->add_option("--seed", sa.seed, "RNG seed");
  synth->add_option("--bands", sa.bands, "Band count");
  synth->add_option("--out", sa.out, "Output directory");

  TrainArgs ta;
  std::uint64_t train_seed = 0;
  std::string train_mode;
  auto* train = app.add_subcommand("train", "Train a model on a scene");
  train->add_option("--scene", ta.scene, "HSB1 scene")->required();
  train->add_option("--config", ta.config, "RunConfig JSON");
  auto* seed_opt = train->add_option("--seed", train_seed, "Seed (overrides config)");
  auto* mode_opt = train->add_option("--mode", train_mode, "bluth, daaa or sappa");
  train->add_option("--out", ta.out, "Output directory");

  EvalArgs ea;
  int eval_level = 0;
  auto* eval = app.add_subcommand("eval", "Score models against labels");
  eval->add_option("--model", ea.models, "Model file (repeatable)")->required();
  eval->add_option("--labels", ea.labels, "HSB1 labels")->required();
  eval->add_option("--scene", ea.scene, "HSB1 scene (needed for BLTH models)");
  eval->add_option("--config", ea.config, "RunConfig JSON");
  auto* eval_level_opt = eval->add_option("--level", eval_level, "Hierarchy level (default deepest)");
  eval->add_option("--out", ea.out, "Output directory");

  ExportArgs xa;
  int export_level = 0;
  auto* exp = app.add_subcommand("export", "Write abundance PGMs, spectra CSVs and the tree");
  exp->add_option("--model", xa.model, "BLTH model")->required();
  exp->add_option("--scene", xa.scene, "HSB1 scene")->required();
  exp->add_option("--config", xa.config, "RunConfig JSON");
  auto* export_level_opt = exp->add_option("--level", export_level, "Hierarchy level (default deepest)");
  exp->add_flag("--dot", xa.dot, "Also write tree.dot");
  exp->add_option("--out", xa.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (*synth) {
      sa.snr_db = parse_snr(snr);
      cmd_synth(sa);
    } else if (*train) {
      if (*seed_opt) ta.seed = train_seed;
      if (*mode_opt) ta.mode = train_mode;
      cmd_train(ta);
    } else if (*eval) {
      if (*eval_level_opt) ea.level = eval_level;
      cmd_eval(ea);
    } else if (*exp) {
      if (*export_level_opt) xa.level = export_level;
      cmd_export(xa);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ArgumentError& e) {
    err << "argument error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::runtime_error& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericError;
  }
  return kOk;
}

}  // namespace bluth::cli
