#include "demand/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "demand/error.hpp"
#include "demand/io.hpp"
#include "demand/numeric.hpp"
#include "demand/parallel.hpp"
#include "demand/rng.hpp"

namespace demand {

std::string to_string(ClusterMethod method) { return method == ClusterMethod::kmc ? "KMC" : "SC"; }

namespace {

void check_labels(const Eigen::MatrixXd& x, std::span<const int> labels, const char* op) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) {
    throw InputError("cluster", op, "label count does not match row count");
  }
  for (int l : labels)
    if (l < 0) throw InputError("cluster", op, "negative label");
}

// Nearest-center assignment followed by empty-cluster repair. Returns true if
// any label changed.
bool assign(const Eigen::MatrixXd& x, Eigen::MatrixXd& centers, std::vector<int>& labels) {
  const auto n = x.rows();
  const auto k = centers.rows();
  bool changed = false;
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = nearest_row(centers, x.row(i));
    auto& label = labels[static_cast<std::size_t>(i)];
    if (label != c) changed = true;
    label = c;
    ++counts[static_cast<std::size_t>(c)];
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    Eigen::Index far = -1;
    double far_d = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int own = labels[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(own)] < 2) continue;
      const double d = squared_euclidean(x.row(i), centers.row(own));
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    auto& label = labels[static_cast<std::size_t>(far)];
    --counts[static_cast<std::size_t>(label)];
    label = static_cast<int>(c);
    counts[static_cast<std::size_t>(c)] = 1;
    centers.row(c) = x.row(far);
    changed = true;
  }
  return changed;
}

double inertia_of(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centers, std::span<const int> labels) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) sum += squared_euclidean(x.row(i), centers.row(labels[static_cast<std::size_t>(i)]));
  return sum;
}

}  // namespace

Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& x, std::span<const int> labels, int k) {
  check_labels(x, labels, "cluster_means");
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int l = labels[static_cast<std::size_t>(i)];
    if (l >= k) throw InputError("cluster", "cluster_means", "label out of range");
    sums.row(l) += x.row(i);
    ++counts[static_cast<std::size_t>(l)];
  }
  for (int c = 0; c < k; ++c)
    if (counts[static_cast<std::size_t>(c)] > 0) sums.row(c) /= counts[static_cast<std::size_t>(c)];
  return sums;
}

double within_dispersion(const Eigen::MatrixXd& x, std::span<const int> labels) {
  check_labels(x, labels, "within_dispersion");
  if (labels.empty()) return 0.0;
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  return inertia_of(x, cluster_means(x, labels, k), labels);
}

LloydResult lloyd(const Eigen::MatrixXd& x, Eigen::MatrixXd centers, int max_iter, double tol) {
  const auto k = centers.rows();
  if (k < 1 || k > x.rows()) throw InputError("cluster", "lloyd", "need 1 <= k <= n");
  if (centers.cols() != x.cols()) throw InputError("cluster", "lloyd", "center dimension mismatch");
  LloydResult out;
  std::vector<int> labels(static_cast<std::size_t>(x.rows()), -1);
  auto update = [&] {
    Eigen::MatrixXd next = cluster_means(x, labels, static_cast<int>(k));
    const double movement = (next - centers).rowwise().norm().maxCoeff();
    centers = std::move(next);
    out.inertia_trace.push_back(inertia_of(x, centers, labels));
    ++out.iterations;
    return movement;
  };
  for (int iter = 0; iter < max_iter; ++iter) {
    const bool changed = assign(x, centers, labels);
    if (!changed && iter > 0) break;
    if (update() < tol) break;
  }
  // Settle labels so every point sits with its nearest center.
  for (int iter = 0; iter < max_iter; ++iter) {
    if (!assign(x, centers, labels)) break;
    update();
  }
  out.model.k = static_cast<int>(k);
  out.model.centers = std::move(centers);
  out.model.inertia = inertia_of(x, out.model.centers, labels);
  out.model.labels = std::move(labels);
  out.model.method = ClusterMethod::kmc;
  return out;
}

ClusterModel kmeans(const Eigen::MatrixXd& x, int k, std::uint64_t seed, const KMeansOptions& options) {
  const auto n = x.rows();
  if (k < 1) throw InputError("cluster", "kmeans", "k must be at least 1");
  if (k > n) throw InputError("cluster", "kmeans", "k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
  if (options.n_init < 1 || options.max_iter < 1) {
    throw ConfigError("cluster", "kmeans", "n_init and max_iter must be positive");
  }
  std::vector<ClusterModel> runs(static_cast<std::size_t>(options.n_init));
  parallel_for(runs.size(), options.threads, [&](std::size_t r) {
    Rng rng(derive_seed(seed, r));
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    Eigen::MatrixXd init(k, x.cols());
    for (int c = 0; c < k; ++c) {
      const auto j = static_cast<std::size_t>(c) + rng.index(static_cast<std::uint64_t>(n - c));
      std::swap(pool[static_cast<std::size_t>(c)], pool[j]);
      init.row(c) = x.row(pool[static_cast<std::size_t>(c)]);
    }
    runs[r] = lloyd(x, std::move(init), options.max_iter, options.tol).model;
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].inertia < runs[best].inertia) best = r;
  return std::move(runs[best]);
}

Eigen::MatrixXd knn_affinity(const Eigen::MatrixXd& x, int k_nn) {
  const auto n = x.rows();
  if (k_nn < 1) throw InputError("cluster", "knn_affinity", "k_nn must be at least 1");
  if (k_nn >= n) {
    throw InputError("cluster", "knn_affinity",
                     "k_nn = " + std::to_string(k_nn) + " must be below n = " + std::to_string(n));
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::pair<double, Eigen::Index>> ranked;
  for (Eigen::Index i = 0; i < n; ++i) {
    ranked.clear();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) ranked.emplace_back(squared_euclidean(x.row(i), x.row(j)), j);
    std::partial_sort(ranked.begin(), ranked.begin() + k_nn, ranked.end());
    for (int m = 0; m < k_nn; ++m) {
      const auto j = ranked[static_cast<std::size_t>(m)].second;
      a(i, j) = a(j, i) = 1.0;
    }
  }
  return a;
}

Eigen::MatrixXd laplacian(const Eigen::MatrixXd& affinity) {
  Eigen::MatrixXd l = -affinity;
  l.diagonal() = affinity.rowwise().sum() - affinity.diagonal();
  return l;
}

int connected_components(const Eigen::MatrixXd& affinity) {
  const auto n = affinity.rows();
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index v) {
    while (parent[static_cast<std::size_t>(v)] != v) v = parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
    return v;
  };
  int components = static_cast<int>(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (affinity(i, j) != 0.0 || affinity(j, i) != 0.0) {
        const auto ri = find(i), rj = find(j);
        if (ri != rj) {
          parent[static_cast<std::size_t>(ri)] = rj;
          --components;
        }
      }
  return components;
}

int default_knn(Eigen::Index n) { return static_cast<int>(std::min<Eigen::Index>(10, n - 1)); }

ClusterModel spectral(const Eigen::MatrixXd& x, int k, std::uint64_t seed, const SpectralOptions& options) {
  const auto n = x.rows();
  if (k < 1 || k > n) throw InputError("cluster", "spectral", "need 1 <= k <= n");
  const int k_nn = options.k_nn > 0 ? options.k_nn : default_knn(n);
  const Eigen::MatrixXd a = knn_affinity(x, k_nn);
  const int components = connected_components(a);
  if (components > k) {
    throw NumericalError("cluster", "spectral",
                         "affinity graph has " + std::to_string(components) + " components but k = " +
                             std::to_string(k) + "; increase k_nn (now " + std::to_string(k_nn) + ")");
  }
  const auto eig = sym_eigen(laplacian(a));
  Eigen::MatrixXd embedding(n, k);
  for (int c = 0; c < k; ++c) embedding.col(c) = eig.vectors.col(n - 1 - c);

  ClusterModel model = kmeans(embedding, k, seed, options.kmeans);
  model.centers = cluster_means(x, model.labels, k);
  model.inertia = within_dispersion(x, model.labels);
  model.method = ClusterMethod::sc;
  model.graph_components = components;
  return model;
}

GapResult gap_statistic(const Eigen::MatrixXd& x, std::span<const int> k_values, int b, const Clusterer& clusterer,
                        std::uint64_t seed, unsigned threads) {
  const auto n = x.rows();
  if (k_values.empty()) throw InputError("cluster", "gap_statistic", "empty k range");
  for (int k : k_values) {
    if (k < 1 || k >= n) {
      throw InputError("cluster", "gap_statistic",
                       "k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + ")");
    }
  }
  if (b < 10) throw InputError("cluster", "gap_statistic", "need at least 10 reference sets");

  const auto safe_log = [](double w) { return std::log(std::max(w, std::numeric_limits<double>::min())); };
  const std::size_t nk = k_values.size();
  GapResult out;
  out.k_values.assign(k_values.begin(), k_values.end());
  out.log_w.resize(nk);
  const std::uint64_t data_seed = derive_seed(seed, 0);
  for (std::size_t i = 0; i < nk; ++i) {
    const auto model = clusterer(x, k_values[i], derive_seed(data_seed, static_cast<std::uint64_t>(k_values[i])));
    out.log_w[i] = safe_log(within_dispersion(x, model.labels));
  }

  const Eigen::RowVectorXd lo = x.colwise().minCoeff();
  const Eigen::RowVectorXd hi = x.colwise().maxCoeff();
  std::vector<std::vector<double>> ref_log_w(static_cast<std::size_t>(b), std::vector<double>(nk));
  parallel_for(static_cast<std::size_t>(b), threads, [&](std::size_t r) {
    const std::uint64_t ref_seed = derive_seed(seed, r + 1);
    Rng rng(derive_seed(ref_seed, 0));
    Eigen::MatrixXd ref(n, x.cols());
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) ref(i, j) = rng.uniform(lo(j), hi(j));
    for (std::size_t i = 0; i < nk; ++i) {
      const auto model = clusterer(ref, k_values[i], derive_seed(ref_seed, static_cast<std::uint64_t>(k_values[i])));
      ref_log_w[r][i] = safe_log(within_dispersion(ref, model.labels));
    }
  });

  out.gap.resize(nk);
  out.sk.resize(nk);
  out.expected_log_w.resize(nk);
  for (std::size_t i = 0; i < nk; ++i) {
    double mean = 0.0;
    for (int r = 0; r < b; ++r) mean += ref_log_w[static_cast<std::size_t>(r)][i];
    mean /= b;
    double var = 0.0;
    for (int r = 0; r < b; ++r) {
      const double diff = ref_log_w[static_cast<std::size_t>(r)][i] - mean;
      var += diff * diff;
    }
    var /= b;
    out.expected_log_w[i] = mean;
    out.gap[i] = mean - out.log_w[i];
    out.sk[i] = std::sqrt(var) * std::sqrt(1.0 + 1.0 / b);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < nk; ++i)
    if (out.gap[i] > out.gap[best] || (out.gap[i] == out.gap[best] && k_values[i] < k_values[best])) best = i;
  out.chosen_k = k_values[best];
  return out;
}

std::string gap_csv(const GapResult& gap) {
  std::string out = "k,gap,sk\n";
  for (std::size_t i = 0; i < gap.k_values.size(); ++i) {
    out += std::to_string(gap.k_values[i]) + ',' + format_double(gap.gap[i]) + ',' + format_double(gap.sk[i]) + '\n';
  }
  return out;
}

void to_json(nlohmann::json& j, const ClusterModel& model) {
  j = {{"method", model.method == ClusterMethod::kmc ? "kmc" : "sc"},
       {"k", model.k},
       {"centers", matrix_to_json(model.centers)},
       {"labels", model.labels},
       {"inertia", model.inertia},
       {"graph_components", model.graph_components}};
}

ClusterModel model_from_json(const nlohmann::json& j) {
  try {
    ClusterModel m;
    const auto method = j.at("method").get<std::string>();
    if (method != "kmc" && method != "sc") {
      throw InputError("cluster", "model_from_json", "unknown method '" + method + "'");
    }
    m.method = method == "kmc" ? ClusterMethod::kmc : ClusterMethod::sc;
    m.k = j.at("k").get<int>();
    m.centers = matrix_from_json(j.at("centers"));
    m.labels = j.at("labels").get<std::vector<int>>();
    m.inertia = j.at("inertia").get<double>();
    m.graph_components = j.value("graph_components", 0);
    if (m.k < 1 || m.centers.rows() != m.k) throw InputError("cluster", "model_from_json", "centers do not match k");
    for (int l : m.labels)
      if (l < 0 || l >= m.k) throw InputError("cluster", "model_from_json", "label out of range");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("cluster", "model_from_json", e.what());
  }
}

}  // namespace demand
