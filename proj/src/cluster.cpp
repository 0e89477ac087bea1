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

#include "voxtrait/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "voxtrait/error.hpp"

namespace voxtrait::cluster {

namespace {

constexpr double kTieTolerance = 1e-12;

struct Active {
  std::size_t id;
  std::vector<std::size_t> leaves;
};

double average_linkage(const Eigen::MatrixXd& d, const Active& s, const Active& t) {
  double sum = 0.0;
  for (auto u : s.leaves)
    for (auto v : t.leaves) sum += d(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
  return sum / static_cast<double>(s.leaves.size() * t.leaves.size());
}

std::size_t find(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) x = parent[x] = parent[parent[x]];
  return x;
}

}  // namespace

Dendrogram build_dendrogram_from_distances(const Eigen::MatrixXd& distances, std::vector<std::string> names) {
  const auto n = static_cast<std::size_t>(distances.rows());
  if (distances.cols() != distances.rows()) throw InvalidArgument("distance matrix must be square");
  if (n < 2) throw InvalidArgument("dendrogram needs at least two leaves");
  if (names.empty()) {
    for (std::size_t i = 0; i < n; ++i) names.push_back("x" + std::to_string(i));
  }
  if (names.size() != n) throw InvalidArgument("leaf name count does not match the distance matrix");

  std::vector<Active> active;
  for (std::size_t i = 0; i < n; ++i) active.push_back({i, {i}});

  Dendrogram out;
  out.leaves = std::move(names);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    std::pair<std::size_t, std::size_t> best_ids{};
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        const double dist = average_linkage(distances, active[i], active[j]);
        const std::pair<std::size_t, std::size_t> ids{std::min(active[i].id, active[j].id),
                                                      std::max(active[i].id, active[j].id)};
        const double tol = kTieTolerance * std::max(1.0, std::abs(dist));
        const bool better = std::isinf(best) || dist < best - tol;
        const bool tie = !better && std::abs(dist - best) <= tol && ids < best_ids;
        if (better || tie) {
          best = dist;
          bi = i;
          bj = j;
          best_ids = ids;
        }
      }
    }
    Active merged{n + step, {}};
    merged.leaves = active[bi].leaves;
    merged.leaves.insert(merged.leaves.end(), active[bj].leaves.begin(), active[bj].leaves.end());
    std::sort(merged.leaves.begin(), merged.leaves.end());
    out.merges.push_back({best_ids.first, best_ids.second, best, merged.id, merged.leaves.size()});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
    active.push_back(std::move(merged));
  }
  return out;
}

Dendrogram build_dendrogram(const stats::CorrelationMatrix<double>& cm) {
  if (cm.size() < 2) throw InvalidArgument("dendrogram needs at least two variables");
  return build_dendrogram_from_distances(stats::profile_distances(cm), cm.names);
}

ClusterAssignment cut(const Dendrogram& dendro, std::size_t k) {
  const std::size_t n = dendro.leaf_count();
  if (k < 1 || k > n) {
    throw InvalidArgument("cluster count " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  // Node ids map into a union-find over leaves via a representative leaf.
  std::vector<std::size_t> parent(n), rep(2 * n - 1);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::iota(rep.begin(), rep.begin() + static_cast<std::ptrdiff_t>(n), std::size_t{0});
  for (std::size_t i = 0; i < n - k; ++i) {
    const auto& m = dendro.merges[i];
    const auto ra = find(parent, rep[m.a]);
    const auto rb = find(parent, rep[m.b]);
    parent[std::max(ra, rb)] = std::min(ra, rb);
    rep[m.id] = std::min(ra, rb);
  }

  ClusterAssignment out;
  out.k = k;
  out.membership.assign(n, 0);
  std::vector<std::size_t> root_to_cluster(n, n);
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    const auto root = find(parent, leaf);
    if (root_to_cluster[root] == n) {
      root_to_cluster[root] = out.members.size();
      out.members.emplace_back();
    }
    out.membership[leaf] = root_to_cluster[root];
    out.members[root_to_cluster[root]].push_back(leaf);
  }
  for (const auto& mem : out.members) {
    std::string name;
    for (auto leaf : mem) name += (name.empty() ? "" : "+") + dendro.leaves[leaf];
    out.names.push_back(std::move(name));
  }
  return out;
}

double cut_height(const Dendrogram& dendro, std::size_t k) {
  const std::size_t n = dendro.leaf_count();
  if (k < 1 || k > n) throw InvalidArgument("cluster count out of range");
  const double below = k == n ? 0.0 : dendro.merges[n - k - 1].distance;
  const double above = k == 1 ? dendro.merges.back().distance * 1.05 : dendro.merges[n - k].distance;
  return 0.5 * (below + above);
}

std::vector<std::size_t> leaf_order(const Dendrogram& dendro) {
  const std::size_t n = dendro.leaf_count();
  std::vector<std::size_t> order;
  if (n == 0) return order;
  std::vector<std::size_t> stack{dendro.merges.empty() ? 0 : dendro.merges.back().id};
  while (!stack.empty()) {
    const auto node = stack.back();
    stack.pop_back();
    if (node < n) {
      order.push_back(node);
      continue;
    }
    const auto& m = dendro.merges[node - n];
    stack.push_back(m.b);
    stack.push_back(m.a);
  }
  return order;
}

Representation represent_clusters(const Eigen::MatrixXd& samples, const ClusterAssignment& assignment) {
  if (static_cast<std::size_t>(samples.cols()) != assignment.membership.size()) {
    throw InvalidArgument("sample columns do not match the cluster assignment");
  }
  const auto k = static_cast<Eigen::Index>(assignment.size());
  Representation out;
  out.values.resize(samples.rows(), k);
  out.names = assignment.names;
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto& mem = assignment.members[static_cast<std::size_t>(c)];
    if (mem.size() == 1) {
      out.values.col(c) = samples.col(static_cast<Eigen::Index>(mem.front()));
      out.components.emplace_back();
      continue;
    }
    if (samples.rows() < 2) throw InvalidArgument("cluster representation needs at least two samples");
    std::vector<Eigen::Index> cols(mem.begin(), mem.end());
    const Eigen::MatrixXd sub = samples(Eigen::all, cols);
    auto pca = stats::pca_first_component(sub);
    const auto [mean, sd] = stats::mean_sd(pca.projection);
    if (!(sd > 0.0)) throw InvalidArgument("degenerate cluster '" + assignment.names[static_cast<std::size_t>(c)] + "'");
    out.values.col(c) = (pca.projection.array() - mean) / sd;
    out.components.emplace_back(std::move(pca.component));
  }
  return out;
}

nlohmann::ordered_json to_json(const Dendrogram& dendro) {
  nlohmann::ordered_json j;
  j["leaves"] = dendro.leaves;
  auto merges = nlohmann::ordered_json::array();
  for (const auto& m : dendro.merges) {
    merges.push_back({{"a", m.a}, {"b", m.b}, {"distance", m.distance}, {"id", m.id}, {"size", m.size}});
  }
  j["merges"] = std::move(merges);
  return j;
}

nlohmann::ordered_json to_json(const ClusterAssignment& assignment) {
  auto clusters = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < assignment.size(); ++c) {
    clusters.push_back({{"name", assignment.names[c]}, {"members", assignment.members[c]}});
  }
  return clusters;
}

}  // namespace voxtrait::cluster
