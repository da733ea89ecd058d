#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "demand/cluster.hpp"
#include "demand/dimred.hpp"
#include "demand/ingest.hpp"
#include "demand/rng.hpp"
#include "json.hpp"

namespace demand {

/// Shuffles the rows and splits them into p parts; the first D mod p parts
/// get one extra row.
std::vector<Eigen::MatrixXd> partition_days(const Eigen::MatrixXd& day_matrix, int p, Rng& rng);

/// avg_matches * 100 / (n * p).
double percent_matches(double avg_matches, int n, int p);

struct ValidationOptions {
  int p = 2;
  int repetitions = 100;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct ValidationReport {
  std::string framework;  // e.g. "PCA+KMC"
  int p = 0;
  int repetitions = 0;
  int n = 0;
  double avg_matches = 0.0;
  double avg_mismatches = 0.0;
  double pct_matches = 0.0;
  double pct_mismatches = 0.0;
  std::map<std::string, double> per_household;  // match fraction
  std::vector<std::string> warnings;
};

/// Partition-based stability score of a fitted framework.
///
/// For every repetition and household the complete days are shuffled and
/// split into p parts; each part's median profile is normalized, passed
/// through the fitted `reducer`, and assigned to the nearest center. A match
/// is an assignment equal to the household's fitted label.
/// `household_ids[i]` is the household behind `model.labels[i]`.
/// Repetition r draws from stream derive_seed(options.seed, r).
ValidationReport objective_validate(const std::map<std::string, HouseholdSeries>& households,
                                    const std::vector<std::string>& household_ids, const Reducer& reducer,
                                    const ClusterModel& model, const ValidationOptions& options,
                                    std::string framework = {});

struct CviScores {
  double silhouette = 0.0;
  double davies_bouldin = 0.0;
  double calinski_harabasz = 0.0;
};

double silhouette(const Eigen::MatrixXd& x, std::span<const int> labels);
double davies_bouldin(const Eigen::MatrixXd& x, std::span<const int> labels);
/// Returns 1.0 when the within-cluster dispersion is zero.
double calinski_harabasz(const Eigen::MatrixXd& x, std::span<const int> labels);
CviScores cvi_scores(const Eigen::MatrixXd& x, std::span<const int> labels);

double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

void to_json(nlohmann::json& j, const ValidationReport& report);
void to_json(nlohmann::json& j, const CviScores& scores);

/// `framework,p,pct_matches,pct_mismatches[,silhouette,davies_bouldin,calinski_harabasz]`
std::string validation_csv_header(bool with_cvi);
std::string validation_csv_row(const ValidationReport& report, const CviScores* cvi);

}  // namespace demand
