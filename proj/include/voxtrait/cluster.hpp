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

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "voxtrait/stats.hpp"

namespace voxtrait::cluster {

/// One agglomeration step. Leaves are ids 0..n-1; step i creates id n+i.
struct Merge {
  std::size_t a = 0;  // smaller id
  std::size_t b = 0;
  double distance = 0.0;
  std::size_t id = 0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::vector<Merge> merges;
  std::vector<std::string> leaves;

  std::size_t leaf_count() const { return leaves.size(); }
};

/// Average linkage over fixed leaf distances. The closest pair is merged at
/// each step; equal distances go to the lowest (a, b) id pair.
Dendrogram build_dendrogram_from_distances(const Eigen::MatrixXd& distances, std::vector<std::string> names = {});

/// Leaf distances are the absolute-correlation profile distances of `cm`.
Dendrogram build_dendrogram(const stats::CorrelationMatrix<double>& cm);

struct ClusterAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> membership;            // leaf -> cluster
  std::vector<std::vector<std::size_t>> members;  // cluster -> sorted leaves
  std::vector<std::string> names;

  std::size_t size() const { return members.size(); }
};

/// Applies the first n-k merges. Clusters are numbered by their smallest
/// member.
ClusterAssignment cut(const Dendrogram& dendro, std::size_t k);

/// Distance at which the tree splits into k groups, halfway between the
/// heights of the (n-k)th and (n-k+1)th merges. Used for drawing.
double cut_height(const Dendrogram& dendro, std::size_t k);

/// Leaves in drawing order (left-to-right depth-first traversal).
std::vector<std::size_t> leaf_order(const Dendrogram& dendro);

struct Representation {
  Eigen::MatrixXd values;  // n x k
  std::vector<std::optional<stats::PrincipalComponent<double>>> components;  // empty for singletons
  std::vector<std::string> names;
};

/// Singletons pass through; larger clusters become the standardized
/// projection onto their first principal component.
Representation represent_clusters(const Eigen::MatrixXd& samples, const ClusterAssignment& assignment);

nlohmann::ordered_json to_json(const Dendrogram& dendro);
nlohmann::ordered_json to_json(const ClusterAssignment& assignment);

}  // namespace voxtrait::cluster
