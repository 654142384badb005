#include "rfclust/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "rfclust/clustering.hpp"
#include "rfclust/common.hpp"
#include "rfclust/csv.hpp"
#include "rfclust/dataset.hpp"
#include "rfclust/feature_selection.hpp"
#include "rfclust/fixtures.hpp"
#include "rfclust/harness.hpp"
#include "rfclust/reports.hpp"

namespace rfclust {
namespace fs = std::filesystem;
namespace {

// Values given on the command line; unset members fall back to the config
// file, then to RunConfig defaults.
struct RunFlags {
  std::string features;
  std::string targets;
  std::string out;
  std::string config_file;
  std::optional<std::string> algorithm;
  std::vector<double> thresholds;
  std::vector<std::string> variants;
  std::optional<double> correlation_threshold;
  std::optional<std::string> correlation_mode;
  std::optional<int> min_group_size;
  std::optional<int> m_clusters;
  std::optional<int> n_repeats;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scaling;
  std::optional<int> jobs;
  std::optional<int> n_trees;
  std::optional<int> max_depth;
  std::optional<int> min_samples_split;
  std::optional<int> min_samples_leaf;
  std::optional<double> max_features;
  bool raw_precision = false;
  std::optional<double> precision_floor;
  bool no_svg = false;
  bool save_models = false;
};

void add_data_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--features", f.features, "Features CSV (first column f_id)")->required();
  cmd->add_option("--targets", f.targets, "Targets CSV (first column f_id, one column per algorithm)")
      ->required();
  cmd->add_option("--algo", f.algorithm, "Algorithm column in the targets file");
  cmd->add_flag("--raw-precision", f.raw_precision,
                "Targets are raw median precisions; apply log10 with a floor");
  cmd->add_option("--precision-floor", f.precision_floor, "Floor applied before log10 (default 1e-12)");
}

void add_pipeline_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config_file, "JSON config file; flags take precedence");
  cmd->add_option("--thresholds", f.thresholds, "Similarity thresholds, e.g. 0.5,0.7,0.9")
      ->delimiter(',');
  cmd->add_option("--variants", f.variants, "Subset of rf,rfclust,rfclust_unsup,rfclust_perm")
      ->delimiter(',');
  cmd->add_option("--correlation-threshold", f.correlation_threshold, "Pearson edge threshold");
  cmd->add_option("--correlation-mode", f.correlation_mode, "absolute or signed");
  cmd->add_option("--min-group-size", f.min_group_size, "Smallest correlated group processed");
  cmd->add_option("--m-clusters", f.m_clusters, "Clusters for the unsupervised importance");
  cmd->add_option("--n-repeats", f.n_repeats, "Shuffles per feature for permutation importance");
  cmd->add_option("--seed", f.seed, "Root random seed");
  cmd->add_option("--scaling", f.scaling, "Feature scaling before similarity: none, minmax, zscore");
  cmd->add_option("--jobs", f.jobs, "Parallel folds (default: hardware threads)");
  cmd->add_option("--n-trees", f.n_trees, "Trees per forest");
  cmd->add_option("--max-depth", f.max_depth, "Maximum tree depth (default unlimited)");
  cmd->add_option("--min-samples-split", f.min_samples_split, "Minimum samples to split a node");
  cmd->add_option("--min-samples-leaf", f.min_samples_leaf, "Minimum samples per leaf");
  cmd->add_option("--max-features", f.max_features, "Fraction of features tried per split");
}

void add_out_flag(CLI::App* cmd, std::string& out) {
  cmd->add_option("--out", out, std::string("Output directory (default: $") + kOutDirEnv + ")");
}

std::string resolve_out(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  throw ValidationError(std::string("no output directory: pass --out or set ") + kOutDirEnv);
}

template <typename T>
T json_get(const nlohmann::json& j, std::string_view key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("config: key '" + std::string(key) + "' has the wrong type");
  }
}

void apply_config_file(const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "algorithm") c.algorithm = json_get<std::string>(value, key);
    else if (key == "thresholds") c.thresholds = json_get<std::vector<double>>(value, key);
    else if (key == "variants") {
      c.variants.clear();
      for (const auto& v : json_get<std::vector<std::string>>(value, key)) c.variants.push_back(parse_variant(v));
    } else if (key == "correlation_threshold") c.correlation_threshold = json_get<double>(value, key);
    else if (key == "correlation_mode") c.correlation_mode = parse_correlation_mode(json_get<std::string>(value, key));
    else if (key == "min_group_size") c.min_group_size = json_get<std::size_t>(value, key);
    else if (key == "m_clusters") c.m_clusters = json_get<int>(value, key);
    else if (key == "n_repeats") c.n_repeats = json_get<int>(value, key);
    else if (key == "seed") c.seed = json_get<std::uint64_t>(value, key);
    else if (key == "scaling") c.scaling = parse_scaling_mode(json_get<std::string>(value, key));
    else if (key == "jobs") c.jobs = json_get<int>(value, key);
    else if (key == "n_trees") c.forest.n_trees = json_get<int>(value, key);
    else if (key == "max_depth") {
      if (value.is_null()) c.forest.max_depth.reset();
      else c.forest.max_depth = json_get<int>(value, key);
    } else if (key == "min_samples_split") c.forest.min_samples_split = json_get<int>(value, key);
    else if (key == "min_samples_leaf") c.forest.min_samples_leaf = json_get<int>(value, key);
    else if (key == "max_features") c.forest.max_features = json_get<double>(value, key);
    else throw ValidationError("config file: unknown key '" + key + "'");
  }
}

RunConfig build_run_config(const RunFlags& f, const Dataset& dataset) {
  RunConfig c;
  c.jobs = std::max(1U, std::thread::hardware_concurrency());
  if (!f.config_file.empty()) apply_config_file(f.config_file, c);
  if (f.algorithm) c.algorithm = *f.algorithm;
  if (!f.thresholds.empty()) c.thresholds = f.thresholds;
  if (!f.variants.empty()) {
    c.variants.clear();
    for (const auto& v : f.variants) c.variants.push_back(parse_variant(v));
  }
  if (f.correlation_threshold) c.correlation_threshold = *f.correlation_threshold;
  if (f.correlation_mode) c.correlation_mode = parse_correlation_mode(*f.correlation_mode);
  if (f.min_group_size) {
    if (*f.min_group_size < 2) throw ValidationError("--min-group-size must be >= 2");
    c.min_group_size = static_cast<std::size_t>(*f.min_group_size);
  }
  if (f.m_clusters) c.m_clusters = *f.m_clusters;
  if (f.n_repeats) c.n_repeats = *f.n_repeats;
  if (f.seed) c.seed = *f.seed;
  if (f.scaling) c.scaling = parse_scaling_mode(*f.scaling);
  if (f.jobs) c.jobs = *f.jobs;
  if (f.n_trees) c.forest.n_trees = *f.n_trees;
  if (f.max_depth) c.forest.max_depth = *f.max_depth;
  if (f.min_samples_split) c.forest.min_samples_split = *f.min_samples_split;
  if (f.min_samples_leaf) c.forest.min_samples_leaf = *f.min_samples_leaf;
  if (f.max_features) c.forest.max_features = *f.max_features;

  if (c.algorithm.empty()) {
    if (dataset.targets.size() != 1) {
      throw ValidationError("--algo is required when the targets file has several columns");
    }
    c.algorithm = dataset.targets.front().algorithm;
  }
  dataset.target(c.algorithm);
  c.validate();
  return c;
}

Dataset load_from_flags(const RunFlags& f) {
  LoadOptions options;
  if (f.precision_floor && !f.raw_precision) {
    throw ValidationError("--precision-floor only applies together with --raw-precision");
  }
  if (f.raw_precision) options.raw_precision_floor = f.precision_floor.value_or(kDefaultPrecisionFloor);
  return load_dataset(f.features, f.targets, options);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ComputeError("cannot write " + path.string());
  out << text;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ComputeError("cannot create " + dir.string() + ": " + ec.message());
}

int cmd_run(const RunFlags& f, std::ostream& out) {
  const fs::path out_dir = resolve_out(f.out);
  const Dataset dataset = load_from_flags(f);
  const RunConfig config = build_run_config(f, dataset);
  const RunSummary summary = run_lopo(dataset, config);
  emit_reports(summary, dataset, out_dir, {!f.no_svg, f.save_models});
  write_text(out_dir / "config.json", run_config_to_json(config).dump(2) + "\n");
  std::ifstream table(out_dir / "summary.csv");
  out << table.rdbuf();
  return kExitOk;
}

int cmd_importance(const RunFlags& f, const std::vector<std::string>& methods, std::ostream& out) {
  const fs::path out_dir = resolve_out(f.out);
  const Dataset dataset = load_from_flags(f);
  RunFlags flags = f;
  flags.variants.clear();
  for (const auto& m : methods) {
    if (m == "unsup") flags.variants.emplace_back("rfclust_unsup");
    else if (m == "perm") flags.variants.emplace_back("rfclust_perm");
    else throw ValidationError("--methods accepts unsup and perm, got '" + m + "'");
  }
  if (flags.variants.empty()) throw ValidationError("--methods must name at least one method");
  RunConfig config = build_run_config(flags, dataset);
  config.thresholds = {1.0};
  const RunSummary summary = run_lopo(dataset, config);
  ensure_dir(out_dir);
  const auto records = weights_from_summary(summary);
  {
    std::ofstream w(out_dir / "weights.csv", std::ios::binary);
    if (!w) throw ComputeError("cannot write weights.csv");
    write_weights_csv(w, records);
  }
  if (!f.no_svg && !records.empty()) write_text(out_dir / "weights.svg", render_weights_svg(records));
  out << "wrote " << records.size() << " weight rows to " << (out_dir / "weights.csv").string()
      << '\n';
  return kExitOk;
}

int cmd_select_features(const RunFlags& f, const std::string& fold_id, std::ostream& out) {
  const fs::path out_dir = resolve_out(f.out);
  const Dataset dataset = load_from_flags(f);
  const RunConfig config = build_run_config(f, dataset);
  const std::vector<double>& y_all = dataset.target(config.algorithm);

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < dataset.n_problems(); ++i) {
    if (fold_id.empty() || dataset.problem_ids[i] != fold_id) rows.push_back(i);
  }
  std::size_t test_index = dataset.n_problems();
  if (!fold_id.empty()) test_index = dataset.problem_index(fold_id);
  const Matrix x_rows = dataset.features.select_rows(rows);
  std::vector<double> y;
  for (std::size_t r : rows) y.push_back(y_all[r]);
  const std::vector<std::size_t> candidates = nonconstant_columns(x_rows);
  if (candidates.size() < dataset.n_features()) {
    warn("dropping " + std::to_string(dataset.n_features() - candidates.size()) +
         " zero-variance feature(s)");
  }
  if (candidates.size() < 2) throw ComputeError("fewer than two nonconstant features");

  SelectionConfig selection;
  selection.correlation_threshold = config.correlation_threshold;
  selection.mode = config.correlation_mode;
  selection.min_group_size = config.min_group_size;
  selection.forest = config.forest;
  selection.forest.seed = fold_seeds(config.seed, test_index).selection;
  const FeaturePortfolio local = select_features(x_rows.select_columns(candidates), y, selection);

  std::vector<std::string> names;
  for (std::size_t c : candidates) names.push_back(dataset.feature_names[c]);
  ensure_dir(out_dir);
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["algorithm"] = config.algorithm;
  j["held_out"] = fold_id.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(fold_id);
  j["portfolio"] = portfolio_to_json(local, names);
  write_text(out_dir / "portfolio.json", j.dump(2) + "\n");

  std::ostringstream groups;
  groups << "# schema_version=1\n";
  groups << "group,feature,oob_mae,representative\n";
  for (std::size_t g = 0; g < local.groups.size(); ++g) {
    const FeatureGroup& grp = local.groups[g];
    for (std::size_t i = 0; i < grp.members.size(); ++i) {
      csv::write_row(groups, {std::to_string(g), names[grp.members[i]],
                              format_double(grp.member_oob_mae[i]),
                              grp.members[i] == grp.representative ? "1" : "0"});
    }
  }
  write_text(out_dir / "groups.csv", groups.str());
  out << "kept " << local.kept.size() << " of " << dataset.n_features() << " features\n";
  return kExitOk;
}

int cmd_synth(const FixtureSpec& spec, const std::string& out_flag, std::ostream& out) {
  const fs::path out_dir = resolve_out(out_flag);
  const Fixture fx = generate_fixture(spec);
  write_fixture(fx, spec, out_dir);
  out << "wrote " << fx.dataset.n_problems() << " problems x " << fx.dataset.n_features()
      << " features to " << out_dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rfclust: random-forest performance prediction calibrated by similar problems"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Full leave-one-problem-out evaluation and reports");
  add_data_flags(run, run_flags);
  add_pipeline_flags(run, run_flags);
  add_out_flag(run, run_flags.out);
  run->add_flag("--no-svg", run_flags.no_svg, "Skip SVG renderings");
  run->add_flag("--save-models", run_flags.save_models, "Write each fold's forest as JSON");

  RunFlags imp_flags;
  std::vector<std::string> methods{"unsup", "perm"};
  auto* imp = app.add_subcommand("importance", "Per-fold feature weight tables");
  add_data_flags(imp, imp_flags);
  add_pipeline_flags(imp, imp_flags);
  add_out_flag(imp, imp_flags.out);
  imp->add_option("--methods", methods, "unsup,perm")->delimiter(',');
  imp->add_flag("--no-svg", imp_flags.no_svg, "Skip the box-plot rendering");

  RunFlags sel_flags;
  std::string fold_id;
  auto* sel = app.add_subcommand("select-features", "Correlation-based feature portfolio");
  add_data_flags(sel, sel_flags);
  add_pipeline_flags(sel, sel_flags);
  add_out_flag(sel, sel_flags.out);
  sel->add_option("--fold", fold_id, "Hold out this problem id before selecting");

  FixtureSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a planted-structure fixture dataset");
  synth->add_option("--seed", spec.seed, "Generator seed");
  synth->add_option("--n-problems", spec.n_problems, "Problems");
  synth->add_option("--p-relevant", spec.p_relevant, "Cluster-separating features");
  synth->add_option("--p-nuisance", spec.p_nuisance, "Noise features");
  synth->add_option("--copies", spec.n_correlated_copies, "Near-duplicate columns of rel_0");
  synth->add_option("--clusters", spec.n_clusters, "Planted clusters");
  synth->add_option("--spread", spec.target_spread, "Within-cluster target spread");
  synth->add_option("--deceptive-fraction", spec.deceptive_fraction,
                    "Share of problems with misleading features");
  synth->add_option("--algo", spec.algorithm, "Target column name");
  add_out_flag(synth, synth_out);

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Regenerate SVGs from an existing run directory");
  add_out_flag(report, report_dir);

  WarningSink previous = set_warning_sink([&err](std::string_view msg) { err << "warning: " << msg << '\n'; });
  struct Restore {
    WarningSink& previous;
    ~Restore() { set_warning_sink(std::move(previous)); }
  } restore{previous};

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitValidation;
  }

  try {
    if (run->parsed()) return cmd_run(run_flags, out);
    if (imp->parsed()) return cmd_importance(imp_flags, methods, out);
    if (sel->parsed()) return cmd_select_features(sel_flags, fold_id, out);
    if (synth->parsed()) return cmd_synth(spec, synth_out, out);
    if (report->parsed()) {
      regenerate_svgs(resolve_out(report_dir));
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace rfclust
