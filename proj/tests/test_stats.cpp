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

#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "voxtrait/error.hpp"
#include "voxtrait/stats.hpp"

using namespace voxtrait;
using namespace voxtrait::stats;
namespace orc = voxtrait::testing;

namespace {

Eigen::MatrixXd to_matrix(const orc::Rows& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

CorrelationMatrix<double> from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  CorrelationMatrix<double> cm;
  cm.r.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) cm.r(i, j++) = v;
    ++i;
  }
  return cm;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("Pearson correlation") {
  Eigen::MatrixXd x(4, 3);
  x << 0, 0, 0, 1, 1, -1, 2, 0, -2, 3, 1, -3;
  const auto cm = correlation(x, {"a", "b", "c"});
  CHECK(cm.r(0, 0) == 1.0);
  CHECK(cm.r(0, 1) == doctest::Approx(0.4472135955));
  CHECK(cm.r(0, 2) == doctest::Approx(-1.0));
  CHECK(cm.r(1, 0) == cm.r(0, 1));
  CHECK(cm.names[2] == "c");

  Eigen::MatrixXd one(1, 2);
  one << 1, 2;
  CHECK_THROWS_AS(correlation(one), InvalidArgument);

  Eigen::MatrixXd constant(3, 2);
  constant << 1, 5, 2, 5, 3, 5;
  const auto c2 = correlation(constant);
  CHECK(c2.r(0, 1) == 0.0);
  CHECK(c2.r(1, 1) == 1.0);
  CHECK(c2.names[1] == "x1");
}

TEST_CASE("correlation of z-scored data equals X'X / n") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd x = to_matrix(orc::correlated_samples(rng, 40, 6, 2));
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const auto [m, s] = mean_sd(x.col(c));
      x.col(c) = (x.col(c).array() - m) / s;
    }
    const auto cm = correlation(x);
    const Eigen::MatrixXd gram = x.transpose() * x / static_cast<double>(x.rows());
    CHECK((cm.r - gram).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("profile distance") {
  const auto cm = from_rows({{1, .5, .2}, {.5, 1, .6}, {.2, .6, 1}});
  // Rows 0 and 1 differ by (0, 0.5, -0.4) in absolute value.
  CHECK(profile_distance(cm, 0, 1) == doctest::Approx(std::sqrt(0.25 + 0.25 + 0.16)));

  CorrelationMatrix<double> hand;
  hand.r.resize(3, 3);
  hand.r << 1, .5, .2, 1, .5, .6, .2, .6, 1;
  CHECK(profile_distance(hand, 0, 1) == doctest::Approx(0.4));

  // Sign is ignored and duplicated variables sit at distance 0.
  const auto dup = from_rows({{1, 1, -.3}, {1, 1, -.3}, {-.3, -.3, 1}});
  CHECK(profile_distance(dup, 0, 1) == 0.0);
}

TEST_CASE("profile distance is a pseudometric") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto cm = correlation(to_matrix(orc::correlated_samples(rng, 30, 7, 3)));
    const auto d = profile_distances(cm);
    CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.diagonal().isZero());
    for (Eigen::Index a = 0; a < 7; ++a)
      for (Eigen::Index b = 0; b < 7; ++b)
        for (Eigen::Index c = 0; c < 7; ++c) CHECK(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
  }
}

TEST_CASE("VIF closed forms") {
  const auto id = from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const auto v0 = vif(id);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(v0.values(i) == doctest::Approx(1.0));

  const auto two = from_rows({{1, .8}, {.8, 1}});
  const auto v = vif(two);
  CHECK(v.values(0) == doctest::Approx(1.0 / 0.36).epsilon(1e-14));
  CHECK(v.values(1) == doctest::Approx(2.7778).epsilon(1e-4));
  CHECK(v.max_vif == v.values(0));

  CorrelationMatrix<double> single;
  single.r = Eigen::MatrixXd::Identity(1, 1);
  CHECK_THROWS_AS(vif(single), InvalidArgument);
}

TEST_CASE("VIF equals regression on the other variables") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> kk(2, 8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = kk(rng);
    const auto data = orc::correlated_samples(rng, 60, k, 1 + trial % 3);
    const auto report = vif(correlation(to_matrix(data)));
    for (std::size_t j = 0; j < k; ++j) {
      CHECK(rel(report.values(static_cast<Eigen::Index>(j)), orc::vif_by_regression(data, j)) < 1e-8);
      CHECK(report.values(static_cast<Eigen::Index>(j)) >= 1.0 - 1e-9);
    }
  }
}

TEST_CASE("singular correlation gives the infinite sentinel") {
  std::mt19937_64 rng(4);
  auto data = orc::correlated_samples(rng, 50, 4, 2);
  for (auto& row : data) row.push_back(2.0 * row[0] - row[1]);  // exact dependency
  for (auto& row : data) row.push_back(std::normal_distribution<double>(0, 1)(rng));
  // Columns 0, 1, 4 are dependent; column 5 is independent noise.
  const auto report = vif(correlation(to_matrix(data)));
  CHECK(std::isinf(report.max_vif));
  CHECK(std::isinf(report.values(0)));
  CHECK(std::isinf(report.values(4)));
  CHECK(std::isfinite(report.values(5)));

  const auto dup = from_rows({{1, 1}, {1, 1}});
  CHECK(std::isinf(vif(dup).max_vif));
}

TEST_CASE("OLS") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 12, p = 4;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    orc::Rows rows;
    for (int i = 0; i < n; ++i) {
      std::vector<double> r;
      for (int j = 0; j < p; ++j) r.push_back(x(i, j) = z(rng));
      y(i) = z(rng);
      rows.push_back(r);
    }
    const auto fit = ols(y, x);
    const auto hand = orc::ols_coefficients(rows, std::vector<double>(y.data(), y.data() + n));
    for (int j = 0; j < p; ++j) CHECK(std::abs(fit.coefficients(j) - hand[static_cast<std::size_t>(j)]) < 1e-10);
  }

  Eigen::MatrixXd x(5, 2);
  x << 1, 0, 1, 1, 1, 2, 1, 3, 1, 4;
  Eigen::VectorXd y(5);
  y << 1, 3, 5, 7, 9;
  const auto exact = ols(y, x);
  CHECK(exact.r_squared == doctest::Approx(1.0));
  CHECK(exact.coefficients(1) == doctest::Approx(2.0));

  Eigen::VectorXd orth(5);
  orth << 2, -1, -2, -1, 2;  // centered, orthogonal to 1 and t
  CHECK(ols(orth, x).r_squared == doctest::Approx(0.0));

  Eigen::MatrixXd rank(5, 2);
  rank << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10;
  CHECK_THROWS_AS(ols(y, rank), SingularMatrixError);
  CHECK_THROWS_AS(ols(y.head(2), x.topRows(2)), InvalidArgument);
}

TEST_CASE("PCA duplicate and isotropic cases") {
  Eigen::MatrixXd dup(4, 2);
  dup << -1.5, -1.5, -0.5, -0.5, 0.5, 0.5, 1.5, 1.5;
  const auto p = pca_first_component(dup);
  CHECK(p.component.loadings(0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(p.component.loadings(1) == doctest::Approx(1.0 / std::sqrt(2.0)));
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(p.projection(i) == doctest::Approx(std::sqrt(2.0) * dup(i, 0)));
  CHECK(p.component.explained_variance == doctest::Approx(1.0));

  Eigen::MatrixXd iso(4, 2);
  iso << 1, 1, 1, -1, -1, 1, -1, -1;
  CHECK(pca_first_component(iso).component.explained_variance == doctest::Approx(0.5));

  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(5, 3);
  CHECK_THROWS_AS(pca_first_component(zero), InvalidArgument);
}

TEST_CASE("PCA matches the Jacobi oracle") {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> mm(2, 6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = mm(rng);
    const auto data = orc::correlated_samples(rng, 40, m, 1);
    const auto x = to_matrix(data);
    const auto p = pca_first_component(x);
    const auto o = orc::pca_oracle(data);
    CHECK(std::abs(p.component.loadings.norm() - 1.0) < 1e-9);
    for (std::size_t c = 0; c < m; ++c) CHECK(std::abs(p.component.loadings(static_cast<Eigen::Index>(c)) - o.loadings[c]) < 1e-8);
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK(std::abs(p.projection(static_cast<Eigen::Index>(i)) - o.projection[i]) < 1e-8 * (1.0 + std::abs(o.projection[i])));
    }
    CHECK(p.component.explained_variance == doctest::Approx(o.explained).epsilon(1e-10));

    // The leading component carries at least as much variance as any member.
    const double var_pc = mean_sd(p.projection).second;
    for (Eigen::Index c = 0; c < x.cols(); ++c) CHECK(var_pc >= mean_sd(x.col(c)).second - 1e-12);
  }
}

TEST_CASE("sign convention") {
  Eigen::VectorXd v(3);
  v << 0.0, -0.6, 0.8;
  fix_sign(v);
  CHECK(v(1) == 0.6);
  CHECK(v(2) == -0.8);
}

TEST_CASE("mean_sd and pearson") {
  Eigen::VectorXd a(3), b(3), c(3);
  a << 1, 2, 3;
  b << 2, 4, 6.5;
  c << 1, 1, 1;
  const auto [m, s] = mean_sd(a);
  CHECK(m == 2.0);
  CHECK(s == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(pearson(a, b) > 0.99);
  CHECK(pearson(a, c) == 0.0);
}
