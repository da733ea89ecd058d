#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "demand/cluster.hpp"
#include "demand/dimred.hpp"
#include "demand/ingest.hpp"
#include "demand/preprocess.hpp"
#include "demand/validate.hpp"
#include "json.hpp"

namespace demand {

struct PipelineConfig {
  std::filesystem::path input;  // readings CSV
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
  int resolution = 1;
  int min_complete_days = default_min_complete_days;
  ReducerKind reducer = ReducerKind::pca;
  std::optional<int> dim;  // unset: elbow
  ClusterMethod clusterer = ClusterMethod::kmc;
  std::optional<int> k;  // unset: gap statistic
  int knn = 0;           // 0: min(10, n-1)
  int gap_b = 50;
  int k_max = 10;
  int n_init = 10;
  std::vector<int> p{2, 3};
  int reps = 100;
  bool all_frameworks = false;
  unsigned threads = 1;
  bool plots = true;
  std::vector<std::string> plot_households;
};

/// Reads a flat TOML document; relative paths resolve against its directory.
/// Unknown keys are a ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir = {});
void validate_config(const PipelineConfig& config);

struct Framework {
  ReducerKind reducer = ReducerKind::pca;
  ClusterMethod clusterer = ClusterMethod::kmc;

  std::string label() const;  // "PCA+KMC"
  std::string slug() const;   // "pca_kmc"
};

/// FA+SC, FA+KMC, PCA+SC, PCA+KMC.
std::vector<Framework> all_frameworks();

/// Sub-stream roles of the master seed.
enum class SeedRole : std::uint64_t { gap = 1, fit = 2, validation = 3 };
std::uint64_t role_seed(std::uint64_t seed, SeedRole role);

DayMatrices load_households(const std::filesystem::path& readings, int resolution, int min_complete_days);

struct ReducerFit {
  Reducer reducer;
  bool auto_dim = false;
  std::string curve_csv;  // "d,cevr" for PCA, "threshold,d" for FA
};
ReducerFit fit_reducer(const ProfileMatrix& profiles, ReducerKind kind, std::optional<int> dim);

Clusterer make_clusterer(ClusterMethod method, const PipelineConfig& config);

struct ClusterFit {
  ClusterModel model;
  std::optional<GapResult> gap;
};
ClusterFit fit_clusterer(const Eigen::MatrixXd& reduced, ClusterMethod method, const PipelineConfig& config);

nlohmann::json model_document(const ClusterModel& model, const std::vector<std::string>& household_ids);

struct FrameworkResult {
  Framework framework;
  ReducerFit reducer;
  ReducedMatrix reduced;
  ClusterFit cluster;
  std::vector<ValidationReport> reports;  // one per p
  std::optional<CviScores> cvi;
  std::string cvi_error;
};

struct PipelineResult {
  DayMatrices households;
  ProfileMatrix profiles;
  std::vector<FrameworkResult> frameworks;
};

/// Runs every configured framework and writes, per framework directory,
/// reducer.json, elbow.csv, reduced.csv, model.json, gap.csv, validation
/// JSON/CSV, summary.json and plots; comparison.csv at the top level.
PipelineResult run_pipeline(const PipelineConfig& config);

/// Renders plots from the artifacts of one framework directory.
std::vector<std::filesystem::path> plot_artifacts(const std::filesystem::path& framework_dir,
                                                  const std::filesystem::path& profiles_csv,
                                                  const std::map<std::string, HouseholdSeries>* households,
                                                  std::span<const std::string> box_households);

}  // namespace demand
