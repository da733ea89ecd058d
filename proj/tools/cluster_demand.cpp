// cluster-demand: batch CLI for clustering household demand profiles.
//
// Exit codes: 0 success, 1 input error, 2 numerical failure, 3 configuration error.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "demand/error.hpp"
#include "demand/io.hpp"
#include "demand/pipeline.hpp"
#include "demand/synth.hpp"

namespace {

using namespace demand;

// Flags shared by the pipeline-style subcommands. Unset flags leave the
// config value alone.
struct Flags {
  std::string config;
  std::optional<std::string> input, out, reducer, dim, clusterer, k, p, framework;
  std::optional<std::uint64_t> seed;
  std::optional<int> resolution, knn, gap_b, k_max, reps, min_days, n_init;
  std::optional<unsigned> threads;
};

std::optional<int> parse_int_or_auto(const std::string& value, const char* flag) {
  if (value == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cli", "parse_flags", std::string(flag) + " expects an integer or 'auto', got '" + value + "'");
  }
}

std::vector<int> parse_int_list(const std::string& value, const char* flag) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = parse_int_or_auto(item, flag);
    if (!v) throw ConfigError("cli", "parse_flags", std::string(flag) + " expects a list of integers");
    out.push_back(*v);
  }
  if (out.empty()) throw ConfigError("cli", "parse_flags", std::string(flag) + " is empty");
  return out;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "TOML configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--input", f.input, "Input path");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--resolution", f.resolution, "Hours per slot (divides 24)");
  cmd->add_option("--min-days", f.min_days, "Minimum complete days per household");
  cmd->add_option("--threads", f.threads, "Worker threads");
}

void add_reduce(CLI::App* cmd, Flags& f) {
  cmd->add_option("--reducer", f.reducer, "pca | fa")->check(CLI::IsMember({"pca", "fa"}));
  cmd->add_option("--dim", f.dim, "Reduced dimension N or 'auto'");
}

void add_cluster(CLI::App* cmd, Flags& f) {
  cmd->add_option("--clusterer", f.clusterer, "kmc | sc")->check(CLI::IsMember({"kmc", "sc"}));
  cmd->add_option("--k", f.k, "Cluster count N or 'auto'");
  cmd->add_option("--knn", f.knn, "Neighbours in the spectral affinity graph");
  cmd->add_option("--gap-b", f.gap_b, "Gap statistic reference sets");
  cmd->add_option("--k-max", f.k_max, "Largest k tried by the gap statistic");
  cmd->add_option("--n-init", f.n_init, "k-means restarts");
}

void add_validate(CLI::App* cmd, Flags& f) {
  cmd->add_option("--p", f.p, "Partitions per household, comma separated");
  cmd->add_option("--reps", f.reps, "Validation repetitions");
}

PipelineConfig build_config(const Flags& f) {
  PipelineConfig c = f.config.empty() ? PipelineConfig{} : load_config(f.config);
  if (f.input) c.input = *f.input;
  if (f.out) c.out = *f.out;
  if (f.seed) c.seed = *f.seed;
  if (f.resolution) c.resolution = *f.resolution;
  if (f.min_days) c.min_complete_days = *f.min_days;
  if (f.threads) c.threads = *f.threads;
  if (f.reducer) c.reducer = *f.reducer == "pca" ? ReducerKind::pca : ReducerKind::fa;
  if (f.dim) c.dim = parse_int_or_auto(*f.dim, "--dim");
  if (f.clusterer) c.clusterer = *f.clusterer == "kmc" ? ClusterMethod::kmc : ClusterMethod::sc;
  if (f.k) c.k = parse_int_or_auto(*f.k, "--k");
  if (f.knn) c.knn = *f.knn;
  if (f.gap_b) c.gap_b = *f.gap_b;
  if (f.k_max) c.k_max = *f.k_max;
  if (f.n_init) c.n_init = *f.n_init;
  if (f.p) c.p = parse_int_list(*f.p, "--p");
  if (f.reps) c.reps = *f.reps;
  if (f.framework) c.all_frameworks = *f.framework == "all";
  validate_config(c);
  return c;
}

void require_input(const PipelineConfig& c) {
  if (c.input.empty()) throw ConfigError("cli", "parse_flags", "--input is required");
}

std::string readings_summary_csv(const DayMatrices& days) {
  std::string out = "household_id,n_complete_days,n_days_dropped\n";
  for (const auto& [id, s] : days.households) {
    out += id + ',' + std::to_string(s.day_matrix.rows()) + ',' + std::to_string(s.n_days_dropped) + '\n';
  }
  return out;
}

void write_exclusions(const std::filesystem::path& path, const DayMatrices& days) {
  std::ostringstream ss;
  write_exclusions_csv(ss, days.excluded);
  write_text_file(path, ss.str(), "cli", "ingest");
}

nlohmann::json read_json(const std::filesystem::path& path, const char* module) {
  try {
    return nlohmann::json::parse(read_text_file(path, module, "read_json"));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(module, "read_json", path.string() + ": " + e.what());
  }
}

int exit_code(ErrorKind kind) { return static_cast<int>(kind); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster household electricity demand profiles and score clustering frameworks"};
  app.require_subcommand(1);

  Flags flags;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic readings CSV with ground-truth labels");
  std::string synth_out = "synth";
  std::uint64_t synth_seed = 0;
  int synth_hpa = 7, synth_days = 400, synth_resolution = 1;
  double synth_missing = 0.1, synth_noise = 0.05;
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--households-per-archetype", synth_hpa, "Households per archetype")->check(CLI::PositiveNumber);
  synth->add_option("--days", synth_days, "Days per household")->check(CLI::PositiveNumber);
  synth->add_option("--missing-rate", synth_missing, "Probability of dropping a whole day")->check(CLI::Range(0.0, 0.999));
  synth->add_option("--noise", synth_noise, "Relative per-slot noise sigma")->check(CLI::NonNegativeNumber);
  synth->add_option("--resolution", synth_resolution, "Hours per slot");

  auto* ingest = app.add_subcommand("ingest", "Parse readings into day matrices and report exclusions");
  add_common(ingest, flags);

  auto* prep = app.add_subcommand("preprocess", "Write the normalized median profile matrix");
  add_common(prep, flags);

  auto* reduce_cmd = app.add_subcommand("reduce", "Fit PCA or feature agglomeration on profiles.csv");
  add_common(reduce_cmd, flags);
  add_reduce(reduce_cmd, flags);

  auto* cluster_cmd = app.add_subcommand("cluster", "Cluster reduced.csv with k-means or spectral clustering");
  add_common(cluster_cmd, flags);
  add_cluster(cluster_cmd, flags);

  auto* validate_cmd = app.add_subcommand("validate", "Objective validation of a fitted reducer and model");
  add_common(validate_cmd, flags);
  add_validate(validate_cmd, flags);
  std::string reducer_json, model_json, framework_label;
  validate_cmd->add_option("--reducer-json", reducer_json, "Fitted reducer")->required();
  validate_cmd->add_option("--model-json", model_json, "Fitted cluster model")->required();
  validate_cmd->add_option("--label", framework_label, "Framework label for the report");

  auto* pipeline = app.add_subcommand("pipeline", "Run preprocessing, reduction, clustering, validation and plots");
  add_common(pipeline, flags);
  add_reduce(pipeline, flags);
  add_cluster(pipeline, flags);
  add_validate(pipeline, flags);
  pipeline->add_option("--framework", flags.framework, "one | all")->check(CLI::IsMember({"one", "all"}));

  auto* plot = app.add_subcommand("plot", "Render SVG plots from a framework artifact directory");
  std::string plot_dir, plot_profiles, plot_input, plot_households;
  int plot_resolution = 1, plot_min_days = default_min_complete_days;
  plot->add_option("--out", plot_dir, "Framework artifact directory")->required();
  plot->add_option("--profiles", plot_profiles, "profiles.csv (default: <out>/../profiles.csv)");
  plot->add_option("--input", plot_input, "Readings CSV for box plots");
  plot->add_option("--households", plot_households, "Comma-separated household ids for box plots");
  plot->add_option("--resolution", plot_resolution, "Hours per slot");
  plot->add_option("--min-days", plot_min_days, "Minimum complete days per household");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::config);
  }

  try {
    if (*synth) {
      const auto archetypes = default_archetypes(synth_resolution, synth_noise);
      SynthOptions opts;
      opts.households_per_archetype = synth_hpa;
      opts.days = synth_days;
      opts.missing_day_rate = synth_missing;
      opts.seed = synth_seed;
      opts.resolution_hours = synth_resolution;
      const auto data = generate(archetypes, opts);
      std::ostringstream readings, labels;
      write_readings_csv(readings, data.readings, synth_resolution);
      write_labels_csv(labels, data.labels);
      write_text_file(std::filesystem::path(synth_out) / "readings.csv", readings.str(), "synth", "generate");
      write_text_file(std::filesystem::path(synth_out) / "labels.csv", labels.str(), "synth", "generate");
      std::cout << "wrote " << data.readings.size() << " readings for " << data.labels.size() << " households to "
                << synth_out << "\n";
      return 0;
    }

    if (*plot) {
      const std::filesystem::path dir(plot_dir);
      const std::filesystem::path profiles = plot_profiles.empty()
                                                 ? (std::filesystem::exists(dir / "profiles.csv") ? dir / "profiles.csv"
                                                                                                   : dir.parent_path() / "profiles.csv")
                                                 : std::filesystem::path(plot_profiles);
      std::vector<std::string> ids;
      std::stringstream ss(plot_households);
      for (std::string id; std::getline(ss, id, ',');)
        if (!id.empty()) ids.push_back(id);
      std::optional<DayMatrices> days;
      if (!plot_input.empty()) days = load_households(plot_input, plot_resolution, plot_min_days);
      const auto written = plot_artifacts(dir, profiles, days ? &days->households : nullptr, ids);
      std::cout << "wrote " << written.size() << " plots to " << (dir / "plots").string() << "\n";
      return 0;
    }

    const PipelineConfig config = build_config(flags);

    if (*ingest) {
      require_input(config);
      const auto days = load_households(config.input, config.resolution, config.min_complete_days);
      write_text_file(config.out / "households.csv", readings_summary_csv(days), "cli", "ingest");
      write_exclusions(config.out / "exclusions.csv", days);
      std::cout << days.households.size() << " households retained, " << days.excluded.size() << " excluded\n";
    } else if (*prep) {
      require_input(config);
      const auto days = load_households(config.input, config.resolution, config.min_complete_days);
      const auto profiles = preprocess(days.households, config.resolution);
      write_text_file(config.out / "profiles.csv", profile_csv(profiles), "cli", "preprocess");
      write_exclusions(config.out / "exclusions.csv", days);
      std::cout << "profile matrix " << profiles.rows() << "x" << profiles.cols() << "\n";
    } else if (*reduce_cmd) {
      require_input(config);
      const auto profiles = parse_profile_csv(read_text_file(config.input, "dimred", "reduce"));
      const auto fit = fit_reducer(profiles, config.reducer, config.dim);
      const auto reduced = reduce(fit.reducer, profiles);
      write_text_file(config.out / "reducer.json", nlohmann::json(fit.reducer).dump(2) + "\n", "cli", "reduce");
      write_text_file(config.out / "elbow.csv", fit.curve_csv, "cli", "reduce");
      write_text_file(config.out / "reduced.csv", labeled_matrix_csv(reduced.matrix, reduced.household_ids, "c"), "cli",
                      "reduce");
      std::cout << to_string(config.reducer) << " d' = " << output_dim(fit.reducer) << (fit.auto_dim ? " (auto)" : "")
                << "\n";
    } else if (*cluster_cmd) {
      require_input(config);
      const auto reduced = parse_labeled_matrix_csv(read_text_file(config.input, "cluster", "cluster"), "cluster", "cluster");
      const auto fit = fit_clusterer(reduced.matrix, config.clusterer, config);
      write_text_file(config.out / "model.json", model_document(fit.model, reduced.ids).dump(2) + "\n", "cli", "cluster");
      if (fit.gap) write_text_file(config.out / "gap.csv", gap_csv(*fit.gap), "cli", "cluster");
      std::cout << to_string(config.clusterer) << " k = " << fit.model.k << (fit.gap ? " (gap statistic)" : "") << "\n";
    } else if (*validate_cmd) {
      require_input(config);
      const auto days = load_households(config.input, config.resolution, config.min_complete_days);
      const auto reducer = reducer_from_json(read_json(reducer_json, "dimred"));
      const auto model_doc = read_json(model_json, "cluster");
      const auto model = model_from_json(model_doc);
      if (!model_doc.contains("household_ids")) {
        throw InputError("validate", "objective_validate", "model.json lacks household_ids");
      }
      const auto ids = model_doc["household_ids"].get<std::vector<std::string>>();
      const std::string label = framework_label.empty() ? to_string(kind_of(reducer)) + "+" + to_string(model.method)
                                                        : framework_label;
      nlohmann::json reports = nlohmann::json::array();
      std::string csv = validation_csv_header(false);
      for (int p : config.p) {
        ValidationOptions opts;
        opts.p = p;
        opts.repetitions = config.reps;
        opts.seed = derive_seed(role_seed(config.seed, SeedRole::validation), static_cast<std::uint64_t>(p));
        opts.threads = config.threads;
        const auto report = objective_validate(days.households, ids, reducer, model, opts, label);
        for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
        csv += validation_csv_row(report, nullptr);
        reports.push_back(report);
        std::cout << label << " p=" << p << " %matches=" << format_double(report.pct_matches) << "\n";
      }
      write_text_file(config.out / "validation.json", nlohmann::json{{"reports", reports}}.dump(2) + "\n", "cli",
                      "validate");
      write_text_file(config.out / "validation.csv", csv, "cli", "validate");
    } else if (*pipeline) {
      require_input(config);
      const auto result = run_pipeline(config);
      for (const auto& fw : result.frameworks) {
        for (const auto& r : fw.reports) {
          for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
          std::cout << fw.framework.label() << " d'=" << output_dim(fw.reducer.reducer) << " k=" << fw.cluster.model.k
                    << " p=" << r.p << " %matches=" << format_double(r.pct_matches) << "\n";
        }
      }
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "cluster-demand: error in " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "cluster-demand: internal error: " << e.what() << "\n";
    return exit_code(ErrorKind::numerical);
  }
}
