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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "voxtrait/erf.hpp"
#include "voxtrait/error.hpp"

using namespace voxtrait;
using namespace voxtrait::erf;

namespace {

struct Data {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> speakers;
};

// Standard normal features; y from `f`; `speakers` groups of equal size.
template <typename F>
Data make_data(std::size_t n, std::size_t k, std::uint64_t seed, F f, std::size_t speakers = 10) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Data d;
  d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  d.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = z(rng);
    d.y(static_cast<Eigen::Index>(i)) = f(d.x.row(static_cast<Eigen::Index>(i)), rng);
    d.speakers.push_back("s" + std::to_string(i % speakers));
  }
  return d;
}

Hyperparameters trees(std::size_t n) {
  Hyperparameters hp;
  hp.n_estimators = n;
  return hp;
}

bool same_forest(const Forest& a, const Forest& b) {
  if (a.trees.size() != b.trees.size()) return false;
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    const auto& na = a.trees[t].nodes;
    const auto& nb = b.trees[t].nodes;
    if (na.size() != nb.size()) return false;
    for (std::size_t i = 0; i < na.size(); ++i) {
      if (na[i].feature != nb[i].feature || na[i].threshold != nb[i].threshold || na[i].left != nb[i].left ||
          na[i].right != nb[i].right || na[i].value != nb[i].value || na[i].samples != nb[i].samples ||
          na[i].impurity_decrease != nb[i].impurity_decrease) {
        return false;
      }
    }
  }
  return true;
}

const auto kFirst = [](const auto& row, auto&) { return row(0); };

}  // namespace

TEST_CASE("single-cause target") {
  const auto d = make_data(200, 2, 1, kFirst);
  const auto f = fit(d.x, d.y, trees(100), 7);
  const auto imp = feature_importance(f);
  CHECK(imp(0) > 0.9);
  CHECK(imp(1) < 0.05);
  CHECK(imp.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("symmetric two-cause target") {
  const auto d = make_data(400, 2, 2, [](const auto& r, auto&) { return r(0) + r(1); });
  const auto imp = feature_importance(fit(d.x, d.y, trees(200), 3));
  CHECK(std::abs(imp(0) - imp(1)) < 0.1);
}

TEST_CASE("constant target") {
  const auto d = make_data(30, 3, 3, [](const auto&, auto&) { return 2.5; });
  const auto f = fit(d.x, d.y, trees(10), 1);
  const auto p = predict(f, d.x);
  CHECK(p.isConstant(2.5));
  CHECK(feature_importance(f).isZero());
  for (const auto& t : f.trees) CHECK(t.nodes.size() == 1);
}

TEST_CASE("two samples are fit exactly") {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  Eigen::VectorXd y(2);
  y << -3.0, 5.0;
  const auto f = fit(x, y, trees(20), 4);
  const auto p = predict(f, x);
  CHECK(p(0) == doctest::Approx(-3.0));
  CHECK(p(1) == doctest::Approx(5.0));
}

TEST_CASE("fully grown trees interpolate noise-free training data") {
  const auto d = make_data(80, 3, 5, [](const auto& r, auto&) { return std::sin(r(0)) + r(1) * r(2); });
  const auto f = fit(d.x, d.y, trees(30), 9);
  const auto p = predict(f, d.x);
  CHECK((p - d.y).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("leaf values are means of their training targets") {
  const auto d = make_data(120, 4, 6, [](const auto& r, auto& g) {
    return r(0) - 0.5 * r(3) + std::normal_distribution<double>(0, 0.3)(g);
  });
  Hyperparameters hp = trees(5);
  hp.min_samples_leaf = 5;
  hp.max_depth = 6;
  const auto f = fit(d.x, d.y, hp, 10);
  for (const auto& tree : f.trees) {
    std::map<std::size_t, std::vector<double>> reached;
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
      std::size_t node = 0;
      while (!tree.nodes[node].is_leaf()) {
        const auto& n = tree.nodes[node];
        node = static_cast<std::size_t>(d.x(i, n.feature) <= n.threshold ? n.left : n.right);
      }
      reached[node].push_back(d.y(i));
    }
    for (const auto& [node, ys] : reached) {
      double mean = 0.0;
      for (double v : ys) mean += v / static_cast<double>(ys.size());
      CHECK(std::abs(tree.nodes[node].value - mean) < 1e-12);
      CHECK(tree.nodes[node].samples == ys.size());
      CHECK(ys.size() >= 5);
    }
    CHECK(tree.depth() <= 6);
  }
}

TEST_CASE("single-tree and constant forests") {
  const auto d = make_data(50, 2, 7, kFirst);
  const auto f = fit(d.x, d.y, trees(1), 11);
  const auto p = predict(f, d.x);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) CHECK(p(i) == f.trees[0].predict(d.x.row(i)));

  Forest c = f;
  c.trees.assign(3, Tree{{Node{}}});
  for (auto& t : c.trees) t.nodes[0].value = 0.25;
  CHECK(predict(c, d.x).isConstant(0.25));
}

TEST_CASE("determinism and thread independence") {
  const auto d = make_data(150, 5, 8, [](const auto& r, auto& g) {
    return r(0) * r(1) + std::normal_distribution<double>(0, 0.5)(g);
  });
  const auto a = fit(d.x, d.y, trees(40), 42, {}, 1);
  const auto b = fit(d.x, d.y, trees(40), 42, {}, 4);
  const auto c = fit(d.x, d.y, trees(40), 43, {}, 1);
  CHECK(same_forest(a, b));
  CHECK_FALSE(same_forest(a, c));
  CHECK(predict(a, d.x) == predict(b, d.x));
  CHECK(a.tree_seeds == b.tree_seeds);
  std::set<std::uint64_t> distinct(a.tree_seeds.begin(), a.tree_seeds.end());
  CHECK(distinct.size() == a.tree_seeds.size());
}

TEST_CASE("predictions stay within the training range") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = make_data(60, 3, 100 + seed, [](const auto& r, auto& g) {
      return std::exp(r(0)) + std::normal_distribution<double>(0, 1)(g);
    });
    const auto f = fit(d.x, d.y, trees(20), seed);
    const auto probe = make_data(200, 3, 200 + seed, kFirst);
    Eigen::MatrixXd wild = 10.0 * probe.x;
    const auto p = predict(f, wild);
    CHECK(p.minCoeff() >= d.y.minCoeff());
    CHECK(p.maxCoeff() <= d.y.maxCoeff());
  }
}

TEST_CASE("deeper trees never fit the training set worse") {
  const auto d = make_data(300, 3, 12, [](const auto& r, auto&) { return r(0) + 0.5 * r(1) * r(1); });
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t depth : {2u, 5u, 10u}) {
    Hyperparameters hp = trees(50);
    hp.max_depth = depth;
    const double mse = mean_squared_error(d.y, predict(fit(d.x, d.y, hp, 5), d.x));
    CHECK(mse <= previous);
    previous = mse;
  }
}

TEST_CASE("duplicating a dominant feature dilutes its importance") {
  auto d = make_data(300, 3, 13, [](const auto& r, auto& g) {
    return 2.0 * r(0) + 0.5 * r(1) + std::normal_distribution<double>(0, 0.2)(g);
  });
  const double solo = feature_importance(fit(d.x, d.y, trees(200), 1))(0);
  Eigen::MatrixXd dup(d.x.rows(), 4);
  dup << d.x.col(0), d.x.col(0), d.x.col(1), d.x.col(2);
  const auto imp = feature_importance(fit(dup, d.y, trees(200), 1));
  CHECK(imp(0) < solo);
  CHECK(imp(1) < solo);
  CHECK(std::abs(imp(0) + imp(1) - solo) < 0.15);
}

TEST_CASE("hyperparameter limits") {
  const auto d = make_data(200, 3, 14, [](const auto& r, auto&) { return r(0) + r(1) + r(2); });
  Hyperparameters hp = trees(10);
  hp.max_leaf_nodes = 7;
  for (const auto& t : fit(d.x, d.y, hp, 2).trees) CHECK(t.leaf_count() <= 7);
  hp = trees(10);
  hp.min_samples_split = 50;
  for (const auto& t : fit(d.x, d.y, hp, 2).trees)
    for (const auto& n : t.nodes)
      if (!n.is_leaf()) CHECK(n.samples >= 50);

  hp = trees(0);
  CHECK_THROWS_AS(fit(d.x, d.y, hp, 1), InvalidArgument);
  hp = trees(5);
  hp.max_features = 9;
  CHECK_THROWS_AS(fit(d.x, d.y, hp, 1), InvalidArgument);
  CHECK_THROWS_AS(fit(d.x.topRows(1), d.y.head(1), trees(5), 1), InvalidArgument);
  CHECK_THROWS_AS(fit(d.x, d.y.head(10), trees(5), 1), InvalidArgument);

  const auto f = fit(d.x, d.y, trees(5), 1);
  CHECK_THROWS_AS(predict(f, d.x.leftCols(2)), InvalidArgument);
}

TEST_CASE("grid enumeration order") {
  Grid g;
  const auto cells = g.cells(trees(10));
  REQUIRE(cells.size() == 81);
  CHECK(cells[0].max_depth == 5u);
  CHECK(cells[0].max_leaf_nodes == 100u);
  CHECK(cells[1].max_leaf_nodes == 300u);
  CHECK_FALSE(cells[2].max_leaf_nodes.has_value());
  CHECK(cells[3].min_samples_split == 5u);
  CHECK(cells[80].max_depth == 20u);
  CHECK(cells[80].n_estimators == 10);
}

TEST_CASE("grid search") {
  const auto d = make_data(100, 2, 15, [](const auto& r, auto&) { return 3.0 * r(0) - r(1); });
  Hyperparameters a = trees(20);
  a.max_depth = 2;

  SUBCASE("single cell") {
    const auto r = grid_search(d.x, d.y, {a}, 10, 1);
    CHECK(r.best == a);
    CHECK(r.best_index == 0);
  }
  SUBCASE("duplicates resolve to the first") {
    const auto r = grid_search(d.x, d.y, {a, a, a}, 5, 1);
    CHECK(r.best_index == 0);
    CHECK(r.cell_mse[0] == r.cell_mse[2]);
  }
  SUBCASE("flexible cells win on noise-free data") {
    std::vector<Hyperparameters> cells;
    for (std::size_t depth : {1u, 2u, 4u}) {
      Hyperparameters h = trees(30);
      h.max_depth = depth;
      cells.push_back(h);
    }
    cells.push_back(trees(30));
    const auto r = grid_search(d.x, d.y, cells, 10, 3);
    for (double mse : r.cell_mse) CHECK(r.cell_mse.back() <= mse);
    CHECK(r.best_index == 3);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(grid_search(d.x, d.y, {}, 10, 1), InvalidArgument);
    CHECK_THROWS_AS(grid_search(d.x.topRows(5), d.y.head(5), {a, a}, 10, 1), InvalidArgument);
  }
}

TEST_CASE("fold assignment") {
  std::vector<std::string> ids;
  for (int s = 0; s < 6; ++s)
    for (int i = 0; i < 9; ++i) ids.push_back("sp" + std::to_string(s));

  SUBCASE("per speaker: every fold holds every speaker") {
    const auto folds = assign_folds(ids, 4, SplitMode::per_speaker, 3);
    std::map<std::string, std::set<std::size_t>> seen;
    for (std::size_t i = 0; i < ids.size(); ++i) seen[ids[i]].insert(folds[i]);
    for (const auto& [_, f] : seen) CHECK(f.size() == 4);
  }
  SUBCASE("grouped: no speaker crosses folds") {
    const std::vector<std::string> four(ids.begin(), ids.begin() + 36);
    const auto folds = assign_folds(four, 4, SplitMode::grouped, 3);
    std::map<std::size_t, std::set<std::string>> per_fold;
    for (std::size_t i = 0; i < four.size(); ++i) per_fold[folds[i]].insert(four[i]);
    REQUIRE(per_fold.size() == 4);
    for (const auto& [_, s] : per_fold) CHECK(s.size() == 1);
    CHECK_THROWS_AS(assign_folds(four, 5, SplitMode::grouped, 3), InvalidArgument);
  }
  SUBCASE("plain: balanced") {
    const auto folds = assign_folds(ids, 5, SplitMode::plain, 3);
    std::vector<int> counts(5, 0);
    for (auto f : folds) ++counts[f];
    CHECK(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()) <= 1);
  }
  SUBCASE("deterministic") {
    CHECK(assign_folds(ids, 4, SplitMode::per_speaker, 9) == assign_folds(ids, 4, SplitMode::per_speaker, 9));
  }
  SUBCASE("split mode names") {
    CHECK(parse_split_mode("per-speaker") == SplitMode::per_speaker);
    CHECK(parse_split_mode("per_speaker") == SplitMode::per_speaker);
    CHECK(parse_split_mode("grouped") == SplitMode::grouped);
    CHECK(to_string(SplitMode::plain) == "plain");
    CHECK_THROWS_AS(parse_split_mode("random"), InvalidArgument);
  }
}

TEST_CASE("cross-validation") {
  SUBCASE("noise-free target") {
    const auto d = make_data(240, 3, 16, [](const auto& r, auto&) { return r(0) + 0.5 * r(1); }, 12);
    const auto m = cross_validate(d.x, d.y, d.speakers, trees(100), 4, SplitMode::per_speaker, 1);
    CHECK(m.r_test > 0.99);
    CHECK(m.folds == 4);
    CHECK(m.mse_test >= 0.0);
    CHECK(m.r2_train >= m.r2_test);
  }
  SUBCASE("shuffled labels") {
    auto d = make_data(240, 3, 17, kFirst, 12);
    std::mt19937_64 rng(5);
    std::shuffle(d.y.begin(), d.y.end(), rng);
    const auto m = cross_validate(d.x, d.y, d.speakers, trees(100), 4, SplitMode::per_speaker, 1);
    CHECK(std::abs(m.r_test) < 0.15);
  }
  SUBCASE("constant target reports r = 0") {
    const auto d = make_data(40, 2, 18, [](const auto&, auto&) { return 1.0; }, 4);
    const auto m = cross_validate(d.x, d.y, d.speakers, trees(5), 4, SplitMode::per_speaker, 1);
    CHECK(m.r_test == 0.0);
    CHECK(m.mse_test == 0.0);
  }
}

TEST_CASE("metrics") {
  Eigen::VectorXd y(4), p(4);
  y << 1, 2, 3, 4;
  p << 1, 2, 3, 5;
  CHECK(mean_squared_error(y, p) == doctest::Approx(0.25));
  CHECK(r_squared(y, p) == doctest::Approx(1.0 - 1.0 / 5.0));
  CHECK(r_squared(y, y) == 1.0);
}

TEST_CASE("model serialization") {
  const auto d = make_data(60, 3, 19, kFirst);
  const std::vector<std::string> names{"a", "b", "c"};
  Hyperparameters hp = trees(8);
  hp.max_depth = 4;
  const auto f = fit(d.x, d.y, hp, 77, names);
  const auto path = std::filesystem::temp_directory_path() / "voxtrait_test_model.json";
  save_model(path, f);
  const auto g = load_model(path, &names);
  CHECK(same_forest(f, g));
  CHECK(g.hp == f.hp);
  CHECK(g.seed == 77);
  CHECK(predict(g, d.x) == predict(f, d.x));
  CHECK(hyperparameters_from_json(to_json(hp)) == hp);

  const std::vector<std::string> other{"a", "c", "b"};
  CHECK(schema_fingerprint(other) != schema_fingerprint(names));
  CHECK_THROWS_AS(load_model(path, &other), InvalidArgument);

  auto j = nlohmann::json::parse(to_json(f).dump());
  j["format"] = "something-else";
  CHECK_THROWS_AS(forest_from_json(j), ParseError);
  j = nlohmann::json::parse(to_json(f).dump());
  j["features"][0] = "z";
  CHECK_THROWS_AS(forest_from_json(j), ParseError);
}
