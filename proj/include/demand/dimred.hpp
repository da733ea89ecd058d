#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "demand/preprocess.hpp"
#include "json.hpp"

namespace demand {

enum class ReducerKind { pca, fa };

std::string to_string(ReducerKind kind);  // "PCA" / "FA"

/// Principal-component projection fitted on a profile matrix.
struct PcaReducer {
  Eigen::VectorXd mean;         // d training column means
  Eigen::MatrixXd projection;   // d x d' top eigenvectors
  Eigen::VectorXd eigenvalues;  // all d, descending
  Eigen::VectorXd evr;          // l1-normalized eigenvalues
  Eigen::VectorXd cevr;         // cumulative evr

  int input_dim() const { return static_cast<int>(projection.rows()); }
  int output_dim() const { return static_cast<int>(projection.cols()); }
};

/// One Ward merge of two feature clusters. Leaves are 0..d-1; the cluster
/// created by merge i has id d + i.
struct FeatureMerge {
  int left = 0;
  int right = 0;
  double distance = 0.0;
  int size = 0;  // features in the merged cluster
};

/// Feature agglomeration: each output column is the mean of one group of
/// input columns.
struct FaReducer {
  std::vector<std::vector<int>> groups;     // sorted, ordered by first feature
  double threshold = 0.0;
  std::vector<FeatureMerge> merge_trace;    // the full dendrogram, d-1 merges
  int n_features = 0;

  int input_dim() const { return n_features; }
  int output_dim() const { return static_cast<int>(groups.size()); }
};

using Reducer = std::variant<PcaReducer, FaReducer>;

ReducerKind kind_of(const Reducer& reducer);
int output_dim(const Reducer& reducer);

struct ReducedMatrix {
  Eigen::MatrixXd matrix;  // n x d'
  std::vector<std::string> household_ids;
  ReducerKind kind = ReducerKind::pca;
};

PcaReducer pca_fit(const Eigen::MatrixXd& m, int dim);
inline PcaReducer pca_fit(const ProfileMatrix& m, int dim) { return pca_fit(m.matrix, dim); }

/// (d', CEVR(d')) for d' = 1..d.
std::vector<std::pair<int, double>> cevr_curve(const Eigen::MatrixXd& m);

/// Ward dendrogram over the columns of `m`. Merge distances are
/// sqrt(2 * n_a * n_b / (n_a + n_b)) * ||mu_a - mu_b||, non-decreasing.
std::vector<FeatureMerge> ward_feature_tree(const Eigen::MatrixXd& m);

/// Applies every merge whose distance does not exceed `threshold`.
FaReducer fa_fit(const Eigen::MatrixXd& m, double threshold);
inline FaReducer fa_fit(const ProfileMatrix& m, double threshold) { return fa_fit(m.matrix, threshold); }
/// Cuts the dendrogram at exactly `dim` groups; threshold records the last merge applied.
FaReducer fa_fit_dim(const Eigen::MatrixXd& m, int dim);

/// (threshold, d') per threshold; thresholds must be ascending.
std::vector<std::pair<double, int>> fa_threshold_curve(const Eigen::MatrixXd& m, std::span<const double> thresholds);
/// `count` evenly spaced thresholds from 0 to the largest merge distance.
std::vector<double> default_fa_thresholds(std::span<const FeatureMerge> tree, int count = 50);

/// Index of the point farthest from the chord joining the first and last
/// points; ties go to the smaller index.
std::size_t elbow_point(std::span<const double> xs, std::span<const double> ys);

/// PCA with d' chosen at the elbow of the CEVR curve.
PcaReducer pca_fit_auto(const Eigen::MatrixXd& m);
/// FA with the threshold chosen at the elbow of the threshold curve.
FaReducer fa_fit_auto(const Eigen::MatrixXd& m);

Eigen::MatrixXd transform(const PcaReducer& reducer, const Eigen::MatrixXd& rows);
Eigen::MatrixXd transform(const FaReducer& reducer, const Eigen::MatrixXd& rows);
Eigen::MatrixXd transform(const Reducer& reducer, const Eigen::MatrixXd& rows);

ReducedMatrix reduce(const Reducer& reducer, const ProfileMatrix& profiles);

void to_json(nlohmann::json& j, const Reducer& reducer);
Reducer reducer_from_json(const nlohmann::json& j);

}  // namespace demand
