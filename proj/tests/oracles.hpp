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

// Reference implementations written without Eigen's solvers: Gaussian
// elimination for least squares and cyclic Jacobi for symmetric eigenproblems.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace voxtrait::testing {

using Rows = std::vector<std::vector<double>>;

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(Rows a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (a[pivot][col] == 0.0) throw std::runtime_error("singular system");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

/// Least squares through the normal equations X'X beta = X'y.
inline std::vector<double> ols_coefficients(const Rows& x, const std::vector<double>& y) {
  const std::size_t p = x.front().size();
  Rows xtx(p, std::vector<double>(p, 0.0));
  std::vector<double> xty(p, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t a = 0; a < p; ++a) {
      xty[a] += x[i][a] * y[i];
      for (std::size_t b = 0; b < p; ++b) xtx[a][b] += x[i][a] * x[i][b];
    }
  }
  return gauss_solve(xtx, xty);
}

/// 1 / (1 - R^2) of regressing column j on every other column plus an intercept.
inline double vif_by_regression(const Rows& data, std::size_t j) {
  const std::size_t k = data.front().size();
  Rows x;
  std::vector<double> y;
  for (const auto& row : data) {
    std::vector<double> r{1.0};
    for (std::size_t c = 0; c < k; ++c)
      if (c != j) r.push_back(row[c]);
    x.push_back(std::move(r));
    y.push_back(row[j]);
  }
  const auto beta = ols_coefficients(x, y);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double fit = 0.0;
    for (std::size_t c = 0; c < beta.size(); ++c) fit += beta[c] * x[i][c];
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  return 1.0 / (ss_res / ss_tot);
}

struct EigenPair {
  std::vector<double> values;  // descending
  Rows vectors;                // vectors[i] belongs to values[i]
};

/// Cyclic Jacobi rotations until the off-diagonal mass vanishes.
inline EigenPair jacobi_eigen(Rows a) {
  const std::size_t n = a.size();
  Rows v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  EigenPair out;
  for (std::size_t i : order) {
    out.values.push_back(a[i][i]);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k][i];
    out.vectors.push_back(std::move(col));
  }
  return out;
}

struct PcaOracle {
  std::vector<double> loadings;
  std::vector<double> projection;
  double explained = 0.0;
};

/// Leading component of the population covariance, first non-zero loading positive.
inline PcaOracle pca_oracle(const Rows& data) {
  const std::size_t n = data.size(), m = data.front().size();
  std::vector<double> mean(m, 0.0);
  for (const auto& row : data)
    for (std::size_t c = 0; c < m; ++c) mean[c] += row[c] / static_cast<double>(n);
  Rows cov(m, std::vector<double>(m, 0.0));
  for (const auto& row : data)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) cov[a][b] += (row[a] - mean[a]) * (row[b] - mean[b]) / static_cast<double>(n);
  double trace = 0.0;
  for (std::size_t a = 0; a < m; ++a) trace += cov[a][a];
  const auto eig = jacobi_eigen(cov);
  PcaOracle out;
  out.loadings = eig.vectors.front();
  for (double v : out.loadings) {
    if (std::abs(v) > 1e-12) {
      if (v < 0.0)
        for (auto& w : out.loadings) w = -w;
      break;
    }
  }
  out.explained = eig.values.front() / trace;
  for (const auto& row : data) {
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) s += (row[c] - mean[c]) * out.loadings[c];
    out.projection.push_back(s);
  }
  return out;
}

/// n samples of k correlated columns: random loadings on a few shared
/// factors plus idiosyncratic noise of random size.
inline Rows correlated_samples(std::mt19937_64& rng, std::size_t n, std::size_t k, std::size_t factors) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> noise(0.2, 1.5), scale(0.1, 10.0), shift(-5.0, 5.0);
  Rows w(k, std::vector<double>(factors));
  std::vector<double> sd(k), sc(k), sh(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (auto& v : w[c]) v = z(rng);
    sd[c] = noise(rng);
    sc[c] = scale(rng);
    sh[c] = shift(rng);
  }
  Rows out(n, std::vector<double>(k));
  std::vector<double> f(factors);
  for (auto& row : out) {
    for (auto& v : f) v = z(rng);
    for (std::size_t c = 0; c < k; ++c) {
      double s = sd[c] * z(rng);
      for (std::size_t j = 0; j < factors; ++j) s += w[c][j] * f[j];
      row[c] = sh[c] + sc[c] * s;
    }
  }
  return out;
}

}  // namespace voxtrait::testing
