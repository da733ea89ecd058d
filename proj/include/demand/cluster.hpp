#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace demand {

enum class ClusterMethod { kmc, sc };

std::string to_string(ClusterMethod method);  // "KMC" / "SC"

/// Output of a clusterer: centers live in the space that was clustered
/// (the reduced space for both methods).
struct ClusterModel {
  int k = 0;
  Eigen::MatrixXd centers;  // k x d'
  std::vector<int> labels;  // n, in [0, k)
  double inertia = 0.0;
  ClusterMethod method = ClusterMethod::kmc;
  /// Connected components of the affinity graph (spectral only, else 0).
  int graph_components = 0;
};

struct KMeansOptions {
  int n_init = 10;
  int max_iter = 300;
  double tol = 1e-6;
  unsigned threads = 1;
};

/// A single Lloyd descent from fixed initial centers.
struct LloydResult {
  ClusterModel model;
  /// Inertia after every center update, in order.
  std::vector<double> inertia_trace;
  int iterations = 0;
};

LloydResult lloyd(const Eigen::MatrixXd& x, Eigen::MatrixXd centers, int max_iter, double tol);

/// Best-of-n_init Lloyd runs. Restart i draws k distinct points uniformly
/// from stream derive_seed(seed, i); the lowest inertia wins, earliest first.
ClusterModel kmeans(const Eigen::MatrixXd& x, int k, std::uint64_t seed, const KMeansOptions& options = {});

/// Within-cluster sum of squared distances to the per-cluster means.
double within_dispersion(const Eigen::MatrixXd& x, std::span<const int> labels);

/// Per-cluster means of the rows of `x`.
Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& x, std::span<const int> labels, int k);

/// Binary kNN graph, union-symmetrized. Neighbors are ranked by distance,
/// then by index.
Eigen::MatrixXd knn_affinity(const Eigen::MatrixXd& x, int k_nn);

/// Unnormalized Laplacian L = D - A.
Eigen::MatrixXd laplacian(const Eigen::MatrixXd& affinity);

int connected_components(const Eigen::MatrixXd& affinity);

int default_knn(Eigen::Index n);

struct SpectralOptions {
  int k_nn = 0;  // 0 selects default_knn(n)
  KMeansOptions kmeans;
};

/// Spectral clustering on the unnormalized Laplacian. Labels come from
/// k-means on the k smallest eigenvectors; centers are then the means of the
/// original rows of `x`.
ClusterModel spectral(const Eigen::MatrixXd& x, int k, std::uint64_t seed, const SpectralOptions& options = {});

using Clusterer = std::function<ClusterModel(const Eigen::MatrixXd&, int k, std::uint64_t seed)>;

struct GapResult {
  std::vector<int> k_values;
  std::vector<double> gap;
  std::vector<double> sk;
  std::vector<double> log_w;           // log W(k) on the data
  std::vector<double> expected_log_w;  // mean log W_b(k) over references
  int chosen_k = 0;
};

/// Gap statistic with B uniform references over the bounding box of `x`.
/// chosen_k is the global argmax of the gap (ties to the smaller k).
GapResult gap_statistic(const Eigen::MatrixXd& x, std::span<const int> k_values, int b, const Clusterer& clusterer,
                        std::uint64_t seed, unsigned threads = 1);

std::string gap_csv(const GapResult& gap);

void to_json(nlohmann::json& j, const ClusterModel& model);
ClusterModel model_from_json(const nlohmann::json& j);

}  // namespace demand
