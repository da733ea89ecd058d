#include "demand/dimred.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "demand/error.hpp"
#include "demand/io.hpp"
#include "demand/numeric.hpp"

namespace demand {

std::string to_string(ReducerKind kind) { return kind == ReducerKind::pca ? "PCA" : "FA"; }

ReducerKind kind_of(const Reducer& reducer) {
  return std::holds_alternative<PcaReducer>(reducer) ? ReducerKind::pca : ReducerKind::fa;
}

int output_dim(const Reducer& reducer) {
  return std::visit([](const auto& r) { return r.output_dim(); }, reducer);
}

namespace {

struct Spectrum {
  Eigen::VectorXd mean;
  EigenDecomposition<double> eig;
  Eigen::VectorXd evr;
  Eigen::VectorXd cevr;
};

Spectrum spectrum(const Eigen::MatrixXd& m, const char* op) {
  if (m.rows() < 2) throw InputError("dimred", op, "need at least 2 rows");
  Spectrum s;
  s.mean = m.colwise().mean().transpose();
  s.eig = sym_eigen(covariance(m));
  const Eigen::VectorXd clamped = s.eig.values.cwiseMax(0.0);
  const double total = clamped.sum();
  if (!(total > 0.0)) throw InputError("dimred", op, "input rows have zero total variance");
  s.evr = clamped / total;
  s.cevr.resize(s.evr.size());
  double running = 0.0;
  for (Eigen::Index i = 0; i < s.evr.size(); ++i) {
    running += s.evr(i);
    s.cevr(i) = running;
  }
  return s;
}

// Union-find over dendrogram ids, applying the first `n_merges` merges.
std::vector<std::vector<int>> cut_tree(std::span<const FeatureMerge> tree, int n_features, std::size_t n_merges) {
  std::vector<int> parent(static_cast<std::size_t>(n_features) + tree.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  };
  for (std::size_t i = 0; i < n_merges; ++i) {
    const int id = n_features + static_cast<int>(i);
    parent[static_cast<std::size_t>(find(tree[i].left))] = id;
    parent[static_cast<std::size_t>(find(tree[i].right))] = id;
  }
  std::vector<std::vector<int>> groups;
  std::vector<int> slot(parent.size(), -1);
  for (int f = 0; f < n_features; ++f) {
    const int root = find(f);
    auto& g = slot[static_cast<std::size_t>(root)];
    if (g < 0) {
      g = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(g)].push_back(f);
  }
  return groups;
}

}  // namespace

PcaReducer pca_fit(const Eigen::MatrixXd& m, int dim) {
  if (dim < 1 || dim > m.cols()) {
    throw InputError("dimred", "pca_fit",
                     "d' = " + std::to_string(dim) + " outside [1, " + std::to_string(m.cols()) + "]");
  }
  auto s = spectrum(m, "pca_fit");
  PcaReducer r;
  r.mean = std::move(s.mean);
  r.projection = s.eig.vectors.leftCols(dim);
  r.eigenvalues = std::move(s.eig.values);
  r.evr = std::move(s.evr);
  r.cevr = std::move(s.cevr);
  return r;
}

std::vector<std::pair<int, double>> cevr_curve(const Eigen::MatrixXd& m) {
  const auto s = spectrum(m, "cevr_curve");
  std::vector<std::pair<int, double>> curve;
  for (Eigen::Index i = 0; i < s.cevr.size(); ++i) curve.emplace_back(static_cast<int>(i) + 1, s.cevr(i));
  return curve;
}

std::vector<FeatureMerge> ward_feature_tree(const Eigen::MatrixXd& m) {
  const int d = static_cast<int>(m.cols());
  struct Node {
    int id;
    int size;
    Eigen::VectorXd centroid;
  };
  std::vector<Node> active;
  active.reserve(static_cast<std::size_t>(d));
  for (int f = 0; f < d; ++f) active.push_back({f, 1, m.col(f)});

  std::vector<FeatureMerge> tree;
  double previous = 0.0;
  while (active.size() > 1) {
    std::size_t best_a = 0, best_b = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        const double na = active[a].size, nb = active[b].size;
        const double dist =
            std::sqrt(2.0 * na * nb / (na + nb)) * (active[a].centroid - active[b].centroid).norm();
        if (dist < best) {
          best = dist;
          best_a = a;
          best_b = b;
        }
      }
    }
    Node& a = active[best_a];
    Node& b = active[best_b];
    const int size = a.size + b.size;
    // Ward is monotone; rounding can still produce a sub-ulp dip.
    previous = std::max(previous, best);
    tree.push_back({a.id, b.id, previous, size});
    Node merged{d + static_cast<int>(tree.size()) - 1, size,
                (a.centroid * a.size + b.centroid * b.size) / static_cast<double>(size)};
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_b));
    active[best_a] = std::move(merged);
  }
  return tree;
}

namespace {

FaReducer fa_from_tree(std::vector<FeatureMerge> tree, int d, std::size_t n_merges, double threshold) {
  FaReducer r;
  r.groups = cut_tree(tree, d, n_merges);
  r.threshold = threshold;
  r.merge_trace = std::move(tree);
  r.n_features = d;
  return r;
}

std::size_t merges_within(std::span<const FeatureMerge> tree, double threshold) {
  std::size_t n = 0;
  while (n < tree.size() && tree[n].distance <= threshold) ++n;
  return n;
}

}  // namespace

FaReducer fa_fit(const Eigen::MatrixXd& m, double threshold) {
  if (!(threshold >= 0.0)) throw InputError("dimred", "fa_fit", "threshold must be non-negative");
  if (m.cols() < 1) throw InputError("dimred", "fa_fit", "no features");
  auto tree = ward_feature_tree(m);
  const auto n = merges_within(tree, threshold);
  return fa_from_tree(std::move(tree), static_cast<int>(m.cols()), n, threshold);
}

FaReducer fa_fit_dim(const Eigen::MatrixXd& m, int dim) {
  const int d = static_cast<int>(m.cols());
  if (dim < 1 || dim > d) {
    throw InputError("dimred", "fa_fit_dim", "d' = " + std::to_string(dim) + " outside [1, " + std::to_string(d) + "]");
  }
  auto tree = ward_feature_tree(m);
  const auto n = static_cast<std::size_t>(d - dim);
  const double threshold = n == 0 ? 0.0 : tree[n - 1].distance;
  return fa_from_tree(std::move(tree), d, n, threshold);
}

std::vector<std::pair<double, int>> fa_threshold_curve(const Eigen::MatrixXd& m, std::span<const double> thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw InputError("dimred", "fa_threshold_curve", "thresholds must be ascending");
  }
  const auto tree = ward_feature_tree(m);
  const int d = static_cast<int>(m.cols());
  std::vector<std::pair<double, int>> curve;
  for (double t : thresholds) {
    if (!(t >= 0.0)) throw InputError("dimred", "fa_threshold_curve", "threshold must be non-negative");
    curve.emplace_back(t, d - static_cast<int>(merges_within(tree, t)));
  }
  return curve;
}

std::vector<double> default_fa_thresholds(std::span<const FeatureMerge> tree, int count) {
  if (count < 2) throw InputError("dimred", "default_fa_thresholds", "need at least 2 thresholds");
  const double top = tree.empty() ? 0.0 : tree.back().distance;
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = top * i / (count - 1);
  out.back() = top;
  return out;
}

std::size_t elbow_point(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InputError("dimred", "elbow_point", "xs and ys differ in length");
  if (xs.size() < 3) throw InputError("dimred", "elbow_point", "need at least 3 points");
  const double x0 = xs.front(), y0 = ys.front();
  const double dx = xs.back() - x0, dy = ys.back() - y0;
  const double chord = std::hypot(dx, dy);
  std::size_t best = 0;
  double best_dist = -1.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double cross = dx * (ys[i] - y0) - dy * (xs[i] - x0);
    const double dist = chord > 0.0 ? std::abs(cross) / chord : std::hypot(xs[i] - x0, ys[i] - y0);
    if (dist > best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

PcaReducer pca_fit_auto(const Eigen::MatrixXd& m) {
  const auto curve = cevr_curve(m);
  std::vector<double> xs, ys;
  for (const auto& [dim, value] : curve) {
    xs.push_back(dim);
    ys.push_back(value);
  }
  return pca_fit(m, static_cast<int>(elbow_point(xs, ys)) + 1);
}

FaReducer fa_fit_auto(const Eigen::MatrixXd& m) {
  const auto tree = ward_feature_tree(m);
  const auto thresholds = default_fa_thresholds(tree);
  const auto curve = fa_threshold_curve(m, thresholds);
  std::vector<double> xs, ys;
  for (const auto& [t, dim] : curve) {
    xs.push_back(t);
    ys.push_back(dim);
  }
  return fa_fit(m, xs[elbow_point(xs, ys)]);
}

Eigen::MatrixXd transform(const PcaReducer& reducer, const Eigen::MatrixXd& rows) {
  if (rows.cols() != reducer.input_dim()) {
    throw InputError("dimred", "transform",
                     "rows have " + std::to_string(rows.cols()) + " columns, reducer expects " +
                         std::to_string(reducer.input_dim()));
  }
  return (rows.rowwise() - reducer.mean.transpose()) * reducer.projection;
}

Eigen::MatrixXd transform(const FaReducer& reducer, const Eigen::MatrixXd& rows) {
  if (rows.cols() != reducer.input_dim()) {
    throw InputError("dimred", "transform",
                     "rows have " + std::to_string(rows.cols()) + " columns, reducer expects " +
                         std::to_string(reducer.input_dim()));
  }
  Eigen::MatrixXd out(rows.rows(), reducer.output_dim());
  for (std::size_t g = 0; g < reducer.groups.size(); ++g) {
    const auto& group = reducer.groups[g];
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      double sum = 0.0;
      for (int f : group) sum += rows(i, f);
      out(i, static_cast<Eigen::Index>(g)) = sum / static_cast<double>(group.size());
    }
  }
  return out;
}

Eigen::MatrixXd transform(const Reducer& reducer, const Eigen::MatrixXd& rows) {
  return std::visit([&](const auto& r) { return transform(r, rows); }, reducer);
}

ReducedMatrix reduce(const Reducer& reducer, const ProfileMatrix& profiles) {
  return {transform(reducer, profiles.matrix), profiles.household_ids, kind_of(reducer)};
}

void to_json(nlohmann::json& j, const Reducer& reducer) {
  if (const auto* pca = std::get_if<PcaReducer>(&reducer)) {
    j = {{"kind", "pca"},
         {"input_dim", pca->input_dim()},
         {"output_dim", pca->output_dim()},
         {"mean", vector_to_json(pca->mean)},
         {"projection", matrix_to_json(pca->projection)},
         {"eigenvalues", vector_to_json(pca->eigenvalues)},
         {"evr", vector_to_json(pca->evr)},
         {"cevr", vector_to_json(pca->cevr)}};
    return;
  }
  const auto& fa = std::get<FaReducer>(reducer);
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& mg : fa.merge_trace) {
    trace.push_back({{"left", mg.left}, {"right", mg.right}, {"distance", mg.distance}, {"size", mg.size}});
  }
  j = {{"kind", "fa"},          {"input_dim", fa.n_features}, {"output_dim", fa.output_dim()},
       {"groups", fa.groups},   {"threshold", fa.threshold},  {"merge_trace", trace}};
}

Reducer reducer_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "pca") {
      PcaReducer r;
      r.mean = vector_from_json(j.at("mean"));
      r.projection = matrix_from_json(j.at("projection"));
      r.eigenvalues = vector_from_json(j.at("eigenvalues"));
      r.evr = vector_from_json(j.at("evr"));
      r.cevr = vector_from_json(j.at("cevr"));
      if (r.projection.rows() != r.mean.size() || r.projection.cols() < 1) {
        throw InputError("dimred", "reducer_from_json", "projection shape does not match mean");
      }
      return r;
    }
    if (kind == "fa") {
      FaReducer r;
      r.n_features = j.at("input_dim").get<int>();
      r.groups = j.at("groups").get<std::vector<std::vector<int>>>();
      r.threshold = j.at("threshold").get<double>();
      for (const auto& mg : j.at("merge_trace")) {
        r.merge_trace.push_back({mg.at("left").get<int>(), mg.at("right").get<int>(),
                                 mg.at("distance").get<double>(), mg.at("size").get<int>()});
      }
      std::vector<int> seen(static_cast<std::size_t>(std::max(r.n_features, 0)), 0);
      for (const auto& g : r.groups) {
        if (g.empty()) throw InputError("dimred", "reducer_from_json", "empty feature group");
        for (int f : g) {
          if (f < 0 || f >= r.n_features || seen[static_cast<std::size_t>(f)]++) {
            throw InputError("dimred", "reducer_from_json", "groups do not partition the features");
          }
        }
      }
      if (std::count(seen.begin(), seen.end(), 1) != r.n_features) {
        throw InputError("dimred", "reducer_from_json", "groups do not cover every feature");
      }
      return r;
    }
    throw InputError("dimred", "reducer_from_json", "unknown reducer kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InputError("dimred", "reducer_from_json", e.what());
  }
}

}  // namespace demand
