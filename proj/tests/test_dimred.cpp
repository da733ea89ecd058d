#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <set>

#include "demand/dimred.hpp"
#include "demand/error.hpp"
#include "demand/numeric.hpp"
#include "demand/rng.hpp"

using namespace demand;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// Samples with `strong` high-variance directions plus weak isotropic noise.
MatrixXd low_rank(int n, int d, int strong, std::uint64_t seed) {
  Rng rng(seed);
  const MatrixXd basis = sym_eigen(covariance(random_matrix(3 * d, d, seed + 1))).vectors;
  MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) {
    VectorXd row = VectorXd::Zero(d);
    for (int c = 0; c < d; ++c) row += basis.col(c) * rng.normal() * (c < strong ? 1.0 : 0.01);
    x.row(i) = row.transpose();
  }
  return x;
}

using Partition = std::set<std::set<int>>;

Partition as_partition(const std::vector<std::vector<int>>& groups) {
  Partition p;
  for (const auto& g : groups) p.insert(std::set<int>(g.begin(), g.end()));
  return p;
}

// Independent Ward agglomeration of columns: recompute every pairwise
// error-sum-of-squares increase at each step.
struct WardStep {
  std::vector<double> distances;
  std::vector<Partition> partitions;  // after each merge
};

WardStep brute_force_ward(const MatrixXd& m) {
  auto ess = [&](const std::set<int>& g) {
    VectorXd mean = VectorXd::Zero(m.rows());
    for (int j : g) mean += m.col(j);
    mean /= static_cast<double>(g.size());
    double s = 0.0;
    for (int j : g) s += (m.col(j) - mean).squaredNorm();
    return s;
  };
  std::vector<std::set<int>> clusters;
  for (int j = 0; j < m.cols(); ++j) clusters.push_back({j});
  WardStep out;
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < clusters.size(); ++a)
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        std::set<int> u = clusters[a];
        u.insert(clusters[b].begin(), clusters[b].end());
        const double inc = ess(u) - ess(clusters[a]) - ess(clusters[b]);
        if (inc < best) best = inc, ba = a, bb = b;
      }
    clusters[ba].insert(clusters[bb].begin(), clusters[bb].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
    out.distances.push_back(std::sqrt(2.0 * std::max(best, 0.0)));
    out.partitions.emplace_back(clusters.begin(), clusters.end());
  }
  return out;
}

}  // namespace

TEST_CASE("full-rank PCA is an orthogonal change of basis") {
  const MatrixXd x = random_matrix(30, 8, 1);
  const auto pca = pca_fit(x, 8);
  const MatrixXd z = transform(pca, x);
  const MatrixXd back = (z * pca.projection.transpose()).rowwise() + pca.mean.transpose();
  CHECK((back - x).cwiseAbs().maxCoeff() <= 1e-9);
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j) CHECK(std::abs(euclidean(z.row(i), z.row(j)) - euclidean(x.row(i), x.row(j))) <= 1e-12);
}

TEST_CASE("rank-one data has all variance in one component") {
  MatrixXd x(10, 5);
  VectorXd dir(5);
  dir << 1, -2, 0.5, 3, 1;
  for (int i = 0; i < 10; ++i) x.row(i) = (0.3 * i - 1.0) * dir.transpose();
  const auto pca = pca_fit(x, 1);
  CHECK(pca.evr(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pca.evr.tail(4).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("PCA argument checks") {
  const MatrixXd x = random_matrix(10, 4, 2);
  CHECK_THROWS_AS(pca_fit(x, 0), InputError);
  CHECK_THROWS_AS(pca_fit(x, 5), InputError);
  CHECK_THROWS_AS(pca_fit(MatrixXd::Ones(5, 3), 1), InputError);
  CHECK_THROWS_AS(transform(pca_fit(x, 2), MatrixXd(3, 5)), InputError);
}

TEST_CASE("transform consistency") {
  const MatrixXd x = random_matrix(20, 6, 3);
  const auto pca = pca_fit(x, 3);
  CHECK(transform(pca, pca.mean.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(transform(pca, x) == transform(pca, x));

  ProfileMatrix p{x, {}};
  for (int i = 0; i < 20; ++i) p.household_ids.push_back("h" + std::to_string(i));
  const auto reduced = reduce(Reducer{pca}, p);
  CHECK(reduced.matrix == transform(pca, x));
  CHECK(reduced.kind == ReducerKind::pca);

  const auto fa = fa_fit(x, 1.0);
  CHECK(transform(fa, x) == transform(fa, x));
}

TEST_CASE("FA mean pooling") {
  FaReducer fa;
  fa.groups = {{0, 1}, {2}};
  fa.n_features = 3;
  MatrixXd row(1, 3);
  row << 2, 4, 5;
  const MatrixXd out = transform(fa, row);
  CHECK(out(0, 0) == 3.0);
  CHECK(out(0, 1) == 5.0);
}

TEST_CASE("CEVR examples") {
  // Equal eigenvalues: isotropic data via a rotated, scaled identity design.
  MatrixXd iso(8, 4);
  iso << MatrixXd::Identity(4, 4), -MatrixXd::Identity(4, 4);
  const auto eq = cevr_curve(iso);
  REQUIRE(eq.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(eq[i].first == i + 1);
    CHECK(eq[i].second == doctest::Approx(0.25 * (i + 1)).epsilon(1e-12));
  }
  // Eigenvalues (3, 1, 0).
  MatrixXd x(4, 3);
  const double a = std::sqrt(4.5), b = std::sqrt(1.5);
  x << a, 0, 0, -a, 0, 0, 0, b, 0, 0, -b, 0;
  const auto c = cevr_curve(x);
  CHECK(c[0].second == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(c[1].second == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c[2].second == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("CEVR from eigenvalues equals CEVR from projected variances") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const MatrixXd x = random_matrix(27, 24, seed);
    const auto curve = cevr_curve(x);
    const auto full = pca_fit(x, 24);
    const MatrixXd z = transform(full, x);
    VectorXd var(24);
    for (int c = 0; c < 24; ++c) var(c) = z.col(c).squaredNorm() / 26.0;
    const MatrixXd centered = x.rowwise() - x.colwise().mean();
    const double total = centered.squaredNorm() / 26.0;
    double running = 0.0;
    for (int c = 0; c < 24; ++c) {
      running += var(c);
      CHECK(std::abs(curve[c].second - running / total) <= 1e-9);
    }
  }
}

TEST_CASE("PCA reconstruction error does not grow with d'") {
  const MatrixXd x = random_matrix(25, 10, 9);
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 10; ++k) {
    const auto pca = pca_fit(x, k);
    const MatrixXd back = (transform(pca, x) * pca.projection.transpose()).rowwise() + pca.mean.transpose();
    const double err = (back - x).squaredNorm();
    CHECK(err <= prev + 1e-9);
    prev = err;
  }
  CHECK(prev <= 1e-18 * x.squaredNorm() + 1e-18);
}

TEST_CASE("elbow point") {
  const std::vector<double> xs{1, 2, 3, 4}, ys{0, 10, 11, 12};
  CHECK(elbow_point(xs, ys) == 1);
  const std::vector<double> lin{1, 2, 3, 4, 5};
  CHECK(elbow_point(lin, lin) == 0);
  CHECK_THROWS_AS(elbow_point(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InputError);
}

TEST_CASE("seven strong components give an elbow at d' = 7") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const MatrixXd x = low_rank(60, 24, 7, seed);
    const auto pca = pca_fit_auto(x);
    CHECK(pca.output_dim() == 7);
    CHECK(pca.cevr(6) > 0.96);
  }
}

TEST_CASE("FA threshold extremes") {
  const MatrixXd x = random_matrix(12, 24, 4);
  CHECK(fa_fit(x, 0.0).output_dim() == 24);
  CHECK(fa_fit(x, std::numeric_limits<double>::infinity()).output_dim() == 1);
  CHECK_THROWS_AS(fa_fit(x, -1.0), InputError);
}

TEST_CASE("Ward tree matches a brute-force agglomeration") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const MatrixXd x = random_matrix(9, 10, 100 + seed);
    const auto tree = ward_feature_tree(x);
    const auto oracle = brute_force_ward(x);
    REQUIRE(tree.size() == 9);
    for (std::size_t i = 0; i < tree.size(); ++i) CHECK(tree[i].distance == doctest::Approx(oracle.distances[i]).epsilon(1e-10));
    for (int dim = 1; dim <= 10; ++dim) {
      const auto fa = fa_fit_dim(x, dim);
      CHECK(fa.output_dim() == dim);
      if (dim < 10) CHECK(as_partition(fa.groups) == oracle.partitions[10 - dim - 1]);
    }
  }
}

TEST_CASE("FA threshold curve is monotone with the right endpoints") {
  const MatrixXd x = random_matrix(15, 24, 5);
  const auto tree = ward_feature_tree(x);
  const auto thresholds = default_fa_thresholds(tree);
  CHECK(thresholds.size() == 50);
  const auto curve = fa_threshold_curve(x, thresholds);
  CHECK(curve.front().second == 24);
  CHECK(curve.back().second == 1);
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].second <= curve[i - 1].second);
  const std::vector<double> descending{1.0, 0.5};
  CHECK_THROWS_AS(fa_threshold_curve(x, descending), InputError);
  const auto fa = fa_fit_auto(x);
  CHECK(fa.output_dim() >= 1);
  CHECK(fa.output_dim() <= 24);
}

TEST_CASE("FA groups ignore sample row order") {
  MatrixXd x = random_matrix(14, 12, 6);
  const auto a = fa_fit(x, 2.0);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(14);
  perm.setIdentity();
  Rng rng(1);
  rng.shuffle(perm.indices().data(), perm.indices().data() + 14);
  const auto b = fa_fit(perm * x, 2.0);
  CHECK(a.groups == b.groups);
}

TEST_CASE("reducer JSON round trip") {
  const MatrixXd x = random_matrix(12, 6, 7);
  for (const Reducer& r : {Reducer{pca_fit(x, 3)}, Reducer{fa_fit_dim(x, 4)}}) {
    const nlohmann::json j = r;
    const auto back = reducer_from_json(nlohmann::json::parse(j.dump()));
    CHECK(kind_of(back) == kind_of(r));
    CHECK(transform(back, x) == transform(r, x));
  }
  auto bad = nlohmann::json(Reducer{fa_fit_dim(x, 2)});
  bad["groups"] = nlohmann::json::array({{0, 1}, {1, 2, 3, 4, 5}});
  CHECK_THROWS_AS(reducer_from_json(bad), InputError);
}
