// Copyright 2026 The voxtrait Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense statistical kernel: Pearson correlation, correlation-profile
// distance, variance inflation factors, least squares and the leading
// principal component. Everything is templated on the scalar type and takes
// Eigen expressions.

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "voxtrait/error.hpp"

namespace voxtrait::stats {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Symmetric, unit diagonal, entries in [-1, 1].
template <typename Scalar>
struct CorrelationMatrix {
  Matrix<Scalar> r;
  std::vector<std::string> names;

  Eigen::Index size() const { return r.rows(); }
};

/// Pearson correlation of the columns of `samples` (n x k). A constant
/// column correlates 0 with everything but itself.
template <typename Derived>
CorrelationMatrix<typename Derived::Scalar> correlation(const Eigen::MatrixBase<Derived>& samples,
                                                        std::vector<std::string> names = {}) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = samples.rows(), k = samples.cols();
  if (n < 2) throw InvalidArgument("correlation needs at least two samples");

  Matrix<Scalar> centered = samples.rowwise() - samples.colwise().mean();
  Vector<Scalar> norms = centered.colwise().norm().transpose();
  Matrix<Scalar> r = Matrix<Scalar>::Zero(k, k);
  bool warned = false;
  for (Eigen::Index u = 0; u < k; ++u) {
    r(u, u) = Scalar(1);
    for (Eigen::Index v = u + 1; v < k; ++v) {
      Scalar value(0);
      if (norms(u) > Scalar(0) && norms(v) > Scalar(0)) {
        value = centered.col(u).dot(centered.col(v)) / (norms(u) * norms(v));
        value = std::clamp(value, Scalar(-1), Scalar(1));
      } else if (!warned) {
        spdlog::warn("constant column in correlation input; its correlations are set to 0");
        warned = true;
      }
      r(u, v) = r(v, u) = value;
    }
  }
  if (names.empty()) {
    for (Eigen::Index i = 0; i < k; ++i) names.push_back("x" + std::to_string(i));
  }
  return {std::move(r), std::move(names)};
}

/// Euclidean distance between the absolute-correlation profiles of u and v,
/// summed over every variable including u and v.
template <typename Scalar>
Scalar profile_distance(const CorrelationMatrix<Scalar>& cm, Eigen::Index u, Eigen::Index v) {
  return (cm.r.row(u).cwiseAbs() - cm.r.row(v).cwiseAbs()).norm();
}

template <typename Scalar>
Matrix<Scalar> profile_distances(const CorrelationMatrix<Scalar>& cm) {
  const Eigen::Index k = cm.size();
  Matrix<Scalar> d = Matrix<Scalar>::Zero(k, k);
  for (Eigen::Index u = 0; u < k; ++u)
    for (Eigen::Index v = u + 1; v < k; ++v) d(u, v) = d(v, u) = profile_distance(cm, u, v);
  return d;
}

template <typename Scalar>
struct VifReport {
  /// +infinity marks variables caught in an exact linear dependency.
  Vector<Scalar> values;
  Scalar max_vif = Scalar(0);
};

/// VIF_i = [R^-1]_ii, which equals 1 / (1 - R_i^2) of regressing variable i
/// on the others. Variables involved in a near-null direction of R get +inf;
/// the rest are computed from a rank-revealing solve on the remaining block.
template <typename Scalar>
VifReport<Scalar> vif(const CorrelationMatrix<Scalar>& cm, Scalar singular_tolerance = Scalar(1e-10)) {
  const Eigen::Index k = cm.size();
  if (k < 2) throw InvalidArgument("VIF needs at least two variables");
  const Scalar inf = std::numeric_limits<Scalar>::infinity();

  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(cm.r);
  const Vector<Scalar>& lambda = eig.eigenvalues();
  const Scalar scale = std::max(lambda.cwiseAbs().maxCoeff(), Scalar(1));

  VifReport<Scalar> out;
  out.values.resize(k);
  if (lambda(0) > singular_tolerance * scale) {
    Eigen::LDLT<Matrix<Scalar>> ldlt(cm.r);
    Matrix<Scalar> inv = ldlt.solve(Matrix<Scalar>::Identity(k, k));
    out.values = inv.diagonal();
  } else {
    std::vector<bool> dependent(static_cast<std::size_t>(k), false);
    for (Eigen::Index j = 0; j < k; ++j) {
      if (lambda(j) > singular_tolerance * scale) break;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (std::abs(eig.eigenvectors()(i, j)) > Scalar(1e-6)) dependent[static_cast<std::size_t>(i)] = true;
      }
    }
    for (Eigen::Index i = 0; i < k; ++i) {
      if (dependent[static_cast<std::size_t>(i)]) {
        out.values(i) = inf;
        continue;
      }
      // R_i^2 = r_i^T R_{-i}^+ r_i on the block without variable i.
      std::vector<Eigen::Index> others;
      for (Eigen::Index j = 0; j < k; ++j)
        if (j != i) others.push_back(j);
      Matrix<Scalar> block = cm.r(others, others);
      Vector<Scalar> ri = cm.r(others, i);
      Eigen::CompleteOrthogonalDecomposition<Matrix<Scalar>> cod(block);
      const Scalar r2 = ri.dot(cod.solve(ri));
      out.values(i) = r2 < Scalar(1) ? Scalar(1) / (Scalar(1) - r2) : inf;
    }
  }
  out.max_vif = out.values.maxCoeff();
  return out;
}

template <typename Scalar>
struct OlsResult {
  Vector<Scalar> coefficients;
  Scalar r_squared = Scalar(0);
};

/// Least squares y ~ X via column-pivoted QR. X is used as given, so callers
/// add a column of ones for an intercept. Throws SingularMatrixError when X
/// is rank deficient.
template <typename DerivedY, typename DerivedX>
OlsResult<typename DerivedX::Scalar> ols(const Eigen::MatrixBase<DerivedY>& y, const Eigen::MatrixBase<DerivedX>& X) {
  using Scalar = typename DerivedX::Scalar;
  const Eigen::Index n = X.rows(), p = X.cols();
  if (y.size() != n) throw InvalidArgument("ols: y and X row counts differ");
  if (n <= p) throw InvalidArgument("ols: need more observations than regressors");

  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(X);
  if (qr.rank() < p) throw SingularMatrixError("ols: design matrix is rank deficient");
  OlsResult<Scalar> out;
  out.coefficients = qr.solve(y.derived().template cast<Scalar>().eval());
  const Vector<Scalar> resid = y - X * out.coefficients;
  const Scalar ss_res = resid.squaredNorm();
  const Scalar ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  out.r_squared = ss_tot > Scalar(0) ? Scalar(1) - ss_res / ss_tot : (ss_res > Scalar(0) ? Scalar(0) : Scalar(1));
  return out;
}

template <typename Scalar>
struct PrincipalComponent {
  Vector<Scalar> loadings;  // unit norm, first non-zero entry positive
  Scalar explained_variance = Scalar(0);  // fraction of the total
  Scalar eigenvalue = Scalar(0);
};

/// Flips v so that its first entry with |v_i| > tol is positive.
template <typename Scalar>
void fix_sign(Vector<Scalar>& v, Scalar tol = Scalar(1e-12)) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > tol) {
      if (v(i) < Scalar(0)) v = -v;
      return;
    }
  }
}

template <typename Scalar>
struct PcaResult {
  PrincipalComponent<Scalar> component;
  Vector<Scalar> projection;  // centered data times loadings
};

/// Leading eigenvector of the column covariance of `samples` (n x m).
template <typename Derived>
PcaResult<typename Derived::Scalar> pca_first_component(const Eigen::MatrixBase<Derived>& samples) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = samples.rows(), m = samples.cols();
  if (n < 2) throw InvalidArgument("PCA needs at least two samples");
  if (m < 1) throw InvalidArgument("PCA needs at least one column");

  Matrix<Scalar> centered = samples.rowwise() - samples.colwise().mean();
  Matrix<Scalar> cov = centered.transpose() * centered / Scalar(n);
  const Scalar total = cov.trace();
  if (!(total > Scalar(0))) throw InvalidArgument("PCA on a degenerate cluster (all columns constant)");

  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(cov);
  PcaResult<Scalar> out;
  out.component.loadings = eig.eigenvectors().col(m - 1);
  out.component.loadings.normalize();
  fix_sign(out.component.loadings);
  out.component.eigenvalue = eig.eigenvalues()(m - 1);
  out.component.explained_variance = out.component.eigenvalue / total;
  out.projection = centered * out.component.loadings;
  return out;
}

/// Population mean and standard deviation.
template <typename Derived>
std::pair<typename Derived::Scalar, typename Derived::Scalar> mean_sd(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar mean = v.mean();
  const Scalar var = (v.array() - mean).square().mean();
  return {mean, std::sqrt(var)};
}

/// Pearson correlation of two vectors; 0 if either is constant.
template <typename DA, typename DB>
typename DA::Scalar pearson(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  const auto ca = (a.array() - a.mean()).matrix().eval();
  const auto cb = (b.array() - b.mean()).matrix().eval();
  const Scalar den = ca.norm() * cb.norm();
  if (!(den > Scalar(0))) return Scalar(0);
  return std::clamp(ca.dot(cb) / den, Scalar(-1), Scalar(1));
}

}  // namespace voxtrait::stats
