#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "demand/error.hpp"

namespace demand {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Column-centered sample covariance with the 1/(n-1) estimator.
/// The result is symmetrized so it is exactly symmetric.
template <typename Derived>
MatrixX<typename Derived::Scalar> covariance(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.rows() < 2) {
    throw InputError("numeric", "covariance", "need at least 2 rows, got " + std::to_string(x.rows()));
  }
  const MatrixX<Scalar> centered = x.rowwise() - x.colwise().mean();
  MatrixX<Scalar> cov = (centered.transpose() * centered) / static_cast<Scalar>(x.rows() - 1);
  return (cov + cov.transpose()) / Scalar(2);
}

template <typename Scalar>
struct EigenDecomposition {
  VectorX<Scalar> values;   // descending
  MatrixX<Scalar> vectors;  // column i pairs with values[i]
  int sweeps = 0;
  /// Off-diagonal Frobenius norm before the first sweep and after each sweep.
  std::vector<Scalar> off_diagonal_norms;
};

struct JacobiOptions {
  int max_sweeps = 100;
  /// Convergence when off(A) <= tolerance * ||S||_F.
  double tolerance = 1e-12;
};

namespace detail {

template <typename Scalar>
Scalar off_diagonal_norm(const MatrixX<Scalar>& a) {
  Scalar sum = 0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

}  // namespace detail

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues are sorted descending (ties keep diagonal order). Each
/// eigenvector is signed so its largest-magnitude component is positive; the
/// first such component wins a magnitude tie.
template <typename Derived>
EigenDecomposition<typename Derived::Scalar> sym_eigen(const Eigen::MatrixBase<Derived>& s,
                                                       const JacobiOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  if (s.rows() != s.cols()) {
    throw InputError("numeric", "sym_eigen", "matrix is not square");
  }
  const Eigen::Index n = s.rows();
  const Scalar max_abs = n == 0 ? Scalar(0) : s.cwiseAbs().maxCoeff();
  const Scalar asymmetry = n == 0 ? Scalar(0) : (s - s.transpose()).cwiseAbs().maxCoeff();
  if (asymmetry > Scalar(1e-12) * std::max(Scalar(1), max_abs)) {
    std::ostringstream msg;
    msg << "matrix is not symmetric (max |S - S^T| = " << asymmetry << ")";
    throw InputError("numeric", "sym_eigen", msg.str());
  }

  MatrixX<Scalar> a = (s + s.transpose()) / Scalar(2);
  MatrixX<Scalar> v = MatrixX<Scalar>::Identity(n, n);
  EigenDecomposition<Scalar> out;

  const Scalar target = static_cast<Scalar>(options.tolerance) * a.norm();
  Scalar off = detail::off_diagonal_norm(a);
  out.off_diagonal_norms.push_back(off);

  while (off > target) {
    if (out.sweeps >= options.max_sweeps) {
      std::ostringstream msg;
      msg << "no convergence after " << options.max_sweeps << " sweeps (off-diagonal norm " << off << ")";
      throw NumericalError("numeric", "sym_eigen", msg.str());
    }
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        Scalar t;
        if (abs(theta) > Scalar(1e150)) {
          t = Scalar(1) / (Scalar(2) * theta);
        } else {
          t = (theta >= 0 ? Scalar(1) : Scalar(-1)) / (abs(theta) + std::sqrt(theta * theta + Scalar(1)));
        }
        const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
        const Scalar sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = a(q, p) = Scalar(0);
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
    ++out.sweeps;
    off = detail::off_diagonal_norm(a);
    out.off_diagonal_norms.push_back(off);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Eigen::Index src = order[static_cast<std::size_t>(c)];
    out.values(c) = a(src, src);
    VectorX<Scalar> col = v.col(src);
    Eigen::Index lead = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (abs(col(i)) > abs(col(lead))) lead = i;
    if (col(lead) < 0) col = -col;
    out.vectors.col(c) = col;
  }
  return out;
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar squared_euclidean(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw InputError("numeric", "euclidean",
                     "length mismatch (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  typename DerivedA::Scalar sum = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const auto diff = a(i) - b(i);
    sum += diff * diff;
  }
  return sum;
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar euclidean(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return std::sqrt(squared_euclidean(a, b));
}

/// Index of the row of `centers` nearest to `point`; ties go to the lower index.
template <typename DerivedC, typename DerivedP>
int nearest_row(const Eigen::MatrixBase<DerivedC>& centers, const Eigen::MatrixBase<DerivedP>& point) {
  int best = 0;
  auto best_d = squared_euclidean(centers.row(0).transpose(), point);
  for (Eigen::Index c = 1; c < centers.rows(); ++c) {
    const auto d = squared_euclidean(centers.row(c).transpose(), point);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace demand
