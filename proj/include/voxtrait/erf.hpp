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

// Extremely randomized regression trees: no bootstrap, one uniform random
// threshold per candidate feature per node, variance-reduction scoring.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace voxtrait::erf {

struct Hyperparameters {
  std::optional<std::size_t> max_depth;       // unlimited when empty
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  std::optional<std::size_t> max_leaf_nodes;  // unlimited when empty
  std::optional<std::size_t> max_features;    // all features when empty
  std::size_t n_estimators = 1000;

  bool operator==(const Hyperparameters&) const = default;
};

std::string describe(const Hyperparameters& hp);

struct Node {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean target of the training samples reaching the node
  std::size_t samples = 0;
  double impurity_decrease = 0.0;  // n*Var - nL*VarL - nR*VarR

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<Node> nodes;

  template <typename Row>
  double predict(const Row& x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x(n.feature) <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
  }
  std::size_t leaf_count() const;
  std::size_t depth() const;
};

struct Forest {
  std::vector<Tree> trees;
  Hyperparameters hp;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> tree_seeds;
  std::vector<std::string> feature_names;
  std::string fingerprint;
  std::size_t n_train = 0;
  double y_min = 0.0;
  double y_max = 0.0;

  std::size_t feature_count() const { return feature_names.size(); }
};

/// FNV-1a over the ordered feature names.
std::string schema_fingerprint(const std::vector<std::string>& names);

/// Per-tree seed i of a master seed (splitmix64 of seed + i).
std::uint64_t tree_seed(std::uint64_t master, std::size_t i);

/// `threads` == 0 uses the hardware concurrency. Results do not depend on it.
Forest fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Hyperparameters& hp, std::uint64_t seed,
           std::vector<std::string> names = {}, unsigned threads = 0);

Tree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Hyperparameters& hp, std::uint64_t seed);

Eigen::VectorXd predict(const Forest& forest, const Eigen::MatrixXd& X);

/// Total impurity decrease per feature over every node of every tree,
/// divided by the training size, normalized to sum 1. All zeros (with a
/// warning) when no tree ever split.
Eigen::VectorXd feature_importance(const Forest& forest);

struct Grid {
  std::vector<std::optional<std::size_t>> max_depth{5, 10, 20};
  std::vector<std::size_t> min_samples_leaf{1, 2, 5};
  std::vector<std::size_t> min_samples_split{2, 5, 10};
  std::vector<std::optional<std::size_t>> max_leaf_nodes{100, 300, std::nullopt};

  /// Cells in nested order: max_depth, min_samples_leaf, min_samples_split,
  /// max_leaf_nodes (last varies fastest).
  std::vector<Hyperparameters> cells(const Hyperparameters& base) const;
};

struct GridResult {
  Hyperparameters best;
  std::vector<double> cell_mse;
  std::size_t best_index = 0;
};

/// Exhaustive search; each cell scored by mean test MSE over `cv_folds`
/// shuffled row folds. Ties resolve to the earliest cell.
GridResult grid_search(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<Hyperparameters>& cells,
                       std::size_t cv_folds, std::uint64_t seed, unsigned threads = 0);

enum class SplitMode { per_speaker, grouped, plain };

std::string_view to_string(SplitMode mode);
SplitMode parse_split_mode(std::string_view text);

/// Fold index per row.
std::vector<std::size_t> assign_folds(const std::vector<std::string>& speaker_ids, std::size_t folds, SplitMode mode,
                                      std::uint64_t seed);

struct CvMetrics {
  double r2_train = 0.0;
  double r2_test = 0.0;
  double mse_train = 0.0;
  double mse_test = 0.0;
  double r_train = 0.0;
  double r_test = 0.0;
  std::size_t folds = 0;
};

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& pred);
double mean_squared_error(const Eigen::VectorXd& y, const Eigen::VectorXd& pred);

CvMetrics cross_validate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& speaker_ids,
                         const Hyperparameters& hp, std::size_t folds, SplitMode mode, std::uint64_t seed,
                         unsigned threads = 0);

nlohmann::ordered_json to_json(const Hyperparameters& hp);
Hyperparameters hyperparameters_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const CvMetrics& m);

nlohmann::ordered_json to_json(const Forest& forest);
/// Throws ParseError on a malformed document and InvalidArgument when
/// `expected_names` is given and its fingerprint differs from the model's.
Forest forest_from_json(const nlohmann::json& j, const std::vector<std::string>* expected_names = nullptr);

void save_model(const std::filesystem::path& path, const Forest& forest);
Forest load_model(const std::filesystem::path& path, const std::vector<std::string>* expected_names = nullptr);

}  // namespace voxtrait::erf
