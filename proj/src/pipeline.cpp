#include "demand/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "demand/error.hpp"
#include "demand/io.hpp"
#include "demand/plot.hpp"
#include "demand/rng.hpp"

namespace demand {

std::string Framework::label() const { return to_string(reducer) + "+" + to_string(clusterer); }

std::string Framework::slug() const {
  std::string s = label();
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return c == '+' ? '_' : std::tolower(c); });
  return s;
}

std::vector<Framework> all_frameworks() {
  return {{ReducerKind::fa, ClusterMethod::sc},
          {ReducerKind::fa, ClusterMethod::kmc},
          {ReducerKind::pca, ClusterMethod::sc},
          {ReducerKind::pca, ClusterMethod::kmc}};
}

std::uint64_t role_seed(std::uint64_t seed, SeedRole role) {
  return derive_seed(seed, static_cast<std::uint64_t>(role));
}

void validate_config(const PipelineConfig& c) {
  const auto bad = [](const std::string& what) { throw ConfigError("cli", "config", what); };
  if (c.resolution < 1 || 24 % c.resolution != 0) bad("resolution must divide 24");
  if (c.min_complete_days < 1) bad("min_complete_days must be positive");
  if (c.dim && *c.dim < 1) bad("dim must be positive or auto");
  if (c.k && *c.k < 1) bad("k must be positive or auto");
  if (c.knn < 0) bad("knn must be non-negative");
  if (c.gap_b < 10) bad("gap_b must be at least 10");
  if (c.k_max < 1) bad("k_max must be positive");
  if (c.n_init < 1) bad("n_init must be positive");
  if (c.p.empty()) bad("p list is empty");
  for (int p : c.p)
    if (p < 1) bad("every p must be positive");
  if (c.reps < 1) bad("reps must be positive");
  if (c.threads < 1) bad("threads must be positive");
}

DayMatrices load_households(const std::filesystem::path& readings, int resolution, int min_complete_days) {
  std::ifstream in(readings, std::ios::binary);
  if (!in) throw InputError("ingest", "parse_readings", "cannot open '" + readings.string() + "'");
  const auto parsed = parse_readings(in, resolution);
  return build_day_matrices(parsed, resolution, min_complete_days);
}

ReducerFit fit_reducer(const ProfileMatrix& profiles, ReducerKind kind, std::optional<int> dim) {
  ReducerFit fit;
  fit.auto_dim = !dim.has_value();
  if (kind == ReducerKind::pca) {
    fit.curve_csv = "d,cevr\n";
    for (const auto& [d, v] : cevr_curve(profiles.matrix)) fit.curve_csv += std::to_string(d) + ',' + format_double(v) + '\n';
    fit.reducer = dim ? pca_fit(profiles, *dim) : pca_fit_auto(profiles.matrix);
    return fit;
  }
  const auto tree = ward_feature_tree(profiles.matrix);
  const auto thresholds = default_fa_thresholds(tree);
  fit.curve_csv = "threshold,d\n";
  for (const auto& [t, d] : fa_threshold_curve(profiles.matrix, thresholds)) {
    fit.curve_csv += format_double(t) + ',' + std::to_string(d) + '\n';
  }
  fit.reducer = dim ? fa_fit_dim(profiles.matrix, *dim) : fa_fit_auto(profiles.matrix);
  return fit;
}

Clusterer make_clusterer(ClusterMethod method, const PipelineConfig& config) {
  KMeansOptions km;
  km.n_init = config.n_init;
  if (method == ClusterMethod::kmc) {
    return [km](const Eigen::MatrixXd& x, int k, std::uint64_t seed) { return kmeans(x, k, seed, km); };
  }
  SpectralOptions sc;
  sc.k_nn = config.knn;
  sc.kmeans = km;
  return [sc](const Eigen::MatrixXd& x, int k, std::uint64_t seed) { return spectral(x, k, seed, sc); };
}

ClusterFit fit_clusterer(const Eigen::MatrixXd& reduced, ClusterMethod method, const PipelineConfig& config) {
  const auto clusterer = make_clusterer(method, config);
  ClusterFit fit;
  int k = 0;
  if (config.k) {
    k = *config.k;
  } else {
    const int top = std::min<int>(config.k_max, static_cast<int>(reduced.rows()) - 1);
    if (top < 1) throw InputError("cluster", "gap_statistic", "too few households for a k range");
    std::vector<int> ks;
    for (int i = 1; i <= top; ++i) ks.push_back(i);
    fit.gap = gap_statistic(reduced, ks, config.gap_b, clusterer, role_seed(config.seed, SeedRole::gap), config.threads);
    k = fit.gap->chosen_k;
  }
  fit.model = clusterer(reduced, k, role_seed(config.seed, SeedRole::fit));
  return fit;
}

nlohmann::json model_document(const ClusterModel& model, const std::vector<std::string>& household_ids) {
  nlohmann::json j = model;
  j["household_ids"] = household_ids;
  return j;
}

namespace {

void write_json(const std::filesystem::path& path, const nlohmann::json& j, const char* op) {
  write_text_file(path, j.dump(2) + "\n", "pipeline", op);
}

std::string cvi_cells(const FrameworkResult& r) {
  if (!r.cvi) return ",,,";
  return ',' + format_double(r.cvi->silhouette) + ',' + format_double(r.cvi->davies_bouldin) + ',' +
         format_double(r.cvi->calinski_harabasz);
}

FrameworkResult run_framework(const PipelineConfig& config, const Framework& fw, const DayMatrices& households,
                              const ProfileMatrix& profiles, const std::filesystem::path& dir) {
  FrameworkResult r;
  r.framework = fw;
  r.reducer = fit_reducer(profiles, fw.reducer, config.dim);
  r.reduced = reduce(r.reducer.reducer, profiles);
  write_json(dir / "reducer.json", r.reducer.reducer, "reduce");
  write_text_file(dir / "elbow.csv", r.reducer.curve_csv, "pipeline", "reduce");
  write_text_file(dir / "reduced.csv", labeled_matrix_csv(r.reduced.matrix, r.reduced.household_ids, "c"), "pipeline",
                  "reduce");

  r.cluster = fit_clusterer(r.reduced.matrix, fw.clusterer, config);
  write_json(dir / "model.json", model_document(r.cluster.model, profiles.household_ids), "cluster");
  if (r.cluster.gap) write_text_file(dir / "gap.csv", gap_csv(*r.cluster.gap), "pipeline", "cluster");

  if (r.cluster.model.k >= 2) {
    try {
      r.cvi = cvi_scores(r.reduced.matrix, r.cluster.model.labels);
    } catch (const Error& e) {
      r.cvi_error = e.what();
    }
  } else {
    r.cvi_error = "fewer than 2 clusters";
  }

  nlohmann::json reports = nlohmann::json::array();
  std::string csv = validation_csv_header(true);
  for (int p : config.p) {
    ValidationOptions opts;
    opts.p = p;
    opts.repetitions = config.reps;
    opts.seed = derive_seed(role_seed(config.seed, SeedRole::validation), static_cast<std::uint64_t>(p));
    opts.threads = config.threads;
    auto report = objective_validate(households.households, profiles.household_ids, r.reducer.reducer, r.cluster.model,
                                     opts, fw.label());
    reports.push_back(report);
    csv += validation_csv_row(report, nullptr);
    csv.pop_back();
    csv += cvi_cells(r) + '\n';
    r.reports.push_back(std::move(report));
  }
  nlohmann::json validation = {{"reports", reports}};
  validation["cvi"] = r.cvi ? nlohmann::json(*r.cvi) : nlohmann::json(nullptr);
  if (!r.cvi_error.empty()) validation["cvi_error"] = r.cvi_error;
  write_json(dir / "validation.json", validation, "validate");
  write_text_file(dir / "validation.csv", csv, "pipeline", "validate");

  nlohmann::json summary = {{"framework", fw.label()},
                            {"n", profiles.rows()},
                            {"d", profiles.cols()},
                            {"d_prime", output_dim(r.reducer.reducer)},
                            {"dim_source", r.reducer.auto_dim ? "auto" : "override"},
                            {"k", r.cluster.model.k},
                            {"k_source", r.cluster.gap ? "auto" : "override"},
                            {"seed", config.seed},
                            {"p", config.p},
                            {"reps", config.reps}};
  if (const auto* fa = std::get_if<FaReducer>(&r.reducer.reducer)) summary["fa_threshold"] = fa->threshold;
  if (const auto* pca = std::get_if<PcaReducer>(&r.reducer.reducer)) {
    summary["cevr"] = pca->cevr(pca->output_dim() - 1);
  }
  if (r.cluster.model.method == ClusterMethod::sc) summary["graph_components"] = r.cluster.model.graph_components;
  write_json(dir / "summary.json", summary, "run_pipeline");
  return r;
}

std::vector<std::pair<double, double>> read_two_column_csv(const std::filesystem::path& path, std::string& x_name,
                                                           std::string& y_name) {
  const auto text = read_text_file(path, "plot", "emit_plots");
  std::istringstream in(text);
  std::string line;
  std::vector<std::pair<double, double>> out;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (header) {
      if (fields.size() < 2) throw InputError("plot", "emit_plots", "bad header in " + path.string());
      x_name = fields[0];
      y_name = fields[1];
      header = false;
      continue;
    }
    double x = 0, y = 0;
    if (fields.size() < 2 || !parse_double(fields[0], x) || !parse_double(fields[1], y)) {
      throw InputError("plot", "emit_plots", "bad row in " + path.string());
    }
    out.emplace_back(x, y);
  }
  return out;
}

GapResult read_gap_csv(const std::filesystem::path& path) {
  const auto text = read_text_file(path, "plot", "emit_plots");
  std::istringstream in(text);
  std::string line;
  GapResult g;
  std::getline(in, line);
  if (line != "k,gap,sk") throw InputError("plot", "emit_plots", "bad header in " + path.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    double k = 0, gap = 0, sk = 0;
    if (f.size() != 3 || !parse_double(f[0], k) || !parse_double(f[1], gap) || !parse_double(f[2], sk)) {
      throw InputError("plot", "emit_plots", "bad row in " + path.string());
    }
    g.k_values.push_back(static_cast<int>(k));
    g.gap.push_back(gap);
    g.sk.push_back(sk);
  }
  if (g.k_values.empty()) throw InputError("plot", "emit_plots", "empty gap curve in " + path.string());
  const auto best = std::max_element(g.gap.begin(), g.gap.end()) - g.gap.begin();
  g.chosen_k = g.k_values[static_cast<std::size_t>(best)];
  return g;
}

}  // namespace

std::vector<std::filesystem::path> plot_artifacts(const std::filesystem::path& framework_dir,
                                                  const std::filesystem::path& profiles_csv,
                                                  const std::map<std::string, HouseholdSeries>* households,
                                                  std::span<const std::string> box_households) {
  const auto require = [](const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) throw InputError("plot", "emit_plots", "missing artifact " + p.string());
  };
  const auto model_path = framework_dir / "model.json";
  const auto elbow_path = framework_dir / "elbow.csv";
  require(profiles_csv);
  require(model_path);
  require(elbow_path);

  const auto profiles = parse_profile_csv(read_text_file(profiles_csv, "plot", "emit_plots"));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(model_path, "plot", "emit_plots"));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("plot", "emit_plots", std::string("bad model.json: ") + e.what());
  }
  const auto model = model_from_json(doc);
  if (doc.contains("household_ids") && doc["household_ids"].get<std::vector<std::string>>() != profiles.household_ids) {
    throw InputError("plot", "emit_plots", "model.json households do not match " + profiles_csv.string());
  }

  const auto plots = framework_dir / "plots";
  std::filesystem::create_directories(plots);
  auto written = emit_cluster_plots(plots, profiles, model);

  std::string x_name, y_name;
  const auto curve = read_two_column_csv(elbow_path, x_name, y_name);
  std::vector<double> xs, ys;
  for (const auto& [x, y] : curve) {
    xs.push_back(x);
    ys.push_back(y);
  }
  written.push_back(emit_curve_plot(plots, "elbow", {"Dimension selection", x_name, y_name}, xs, ys));

  const auto gap_path = framework_dir / "gap.csv";
  if (std::filesystem::exists(gap_path)) written.push_back(emit_gap_plot(plots, read_gap_csv(gap_path)));

  if (!box_households.empty()) {
    if (!households) throw InputError("plot", "emit_plots", "box plots need the readings input");
    const auto boxes = emit_box_plots(plots, *households, box_households);
    written.insert(written.end(), boxes.begin(), boxes.end());
  }
  return written;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  validate_config(config);
  PipelineResult result;
  result.households = load_households(config.input, config.resolution, config.min_complete_days);
  result.profiles = preprocess(result.households.households, config.resolution);

  std::filesystem::create_directories(config.out);
  write_text_file(config.out / "profiles.csv", profile_csv(result.profiles), "pipeline", "preprocess");
  std::ostringstream exclusions;
  write_exclusions_csv(exclusions, result.households.excluded);
  write_text_file(config.out / "exclusions.csv", exclusions.str(), "pipeline", "preprocess");

  std::vector<Framework> frameworks =
      config.all_frameworks ? all_frameworks() : std::vector<Framework>{{config.reducer, config.clusterer}};
  std::string comparison = validation_csv_header(true);
  for (const auto& fw : frameworks) {
    const auto dir = config.out / fw.slug();
    std::filesystem::create_directories(dir);
    auto r = run_framework(config, fw, result.households, result.profiles, dir);
    for (const auto& report : r.reports) {
      auto row = validation_csv_row(report, nullptr);
      row.pop_back();
      comparison += row + cvi_cells(r) + '\n';
    }
    if (config.plots) plot_artifacts(dir, config.out / "profiles.csv", &result.households.households, config.plot_households);
    result.frameworks.push_back(std::move(r));
  }
  write_text_file(config.out / "comparison.csv", comparison, "pipeline", "run_pipeline");
  return result;
}

}  // namespace demand
