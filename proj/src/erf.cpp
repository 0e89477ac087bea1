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

#include "voxtrait/erf.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <thread>

#include "voxtrait/error.hpp"
#include "voxtrait/stats.hpp"

namespace voxtrait::erf {

namespace {

constexpr int kModelSchema = 1;
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based stream; a node's draws depend only on its own seed.
struct Stream {
  std::uint64_t state;
  std::uint64_t next() {
    state += kGolden;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
};

std::uint64_t child_seed(std::uint64_t parent, int side) {
  return splitmix64(parent ^ (static_cast<std::uint64_t>(side + 1) * 0xD1B54A32D192ED03ULL));
}

unsigned resolve_threads(unsigned threads, std::size_t jobs) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(jobs, 1)));
}

template <typename F>
void parallel_for(std::size_t jobs, unsigned threads, F&& body) {
  threads = resolve_threads(threads, jobs);
  if (threads <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next++; i < jobs; i = next++) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Hyperparameters& hp)
      : X_(X), y_(y), hp_(hp), idx_(static_cast<std::size_t>(X.rows())) {
    std::iota(idx_.begin(), idx_.end(), std::size_t{0});
  }

  Tree build(std::uint64_t seed) {
    add_node(0, idx_.size(), 0, seed);
    std::size_t leaves = 1;
    while (!queue_.empty()) {
      if (hp_.max_leaf_nodes && leaves >= *hp_.max_leaf_nodes) break;
      const Pending p = queue_.top();
      queue_.pop();
      apply(p);
      ++leaves;
    }
    return std::move(tree_);
  }

 private:
  struct Pending {
    int node;
    std::size_t start, end, depth;
    std::uint64_t seed;
    int feature;
    double threshold;
    double gain;

    bool operator<(const Pending& o) const {
      if (gain != o.gain) return gain < o.gain;
      return node > o.node;
    }
  };

  double at(std::size_t row, int feature) const {
    return X_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(feature));
  }

  void add_node(std::size_t start, std::size_t end, std::size_t depth, std::uint64_t seed) {
    const std::size_t n = end - start;
    Node node;
    node.samples = n;
    double sum = 0.0, lo = y_(static_cast<Eigen::Index>(idx_[start])), hi = lo;
    for (std::size_t i = start; i < end; ++i) {
      const double v = y_(static_cast<Eigen::Index>(idx_[i]));
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    node.value = std::clamp(sum / static_cast<double>(n), lo, hi);
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(node);

    if (hi <= lo) return;
    if (hp_.max_depth && depth >= *hp_.max_depth) return;
    if (n < hp_.min_samples_split || n < 2 * hp_.min_samples_leaf) return;
    if (auto p = best_split(id, start, end, depth, seed)) queue_.push(*p);
  }

  std::optional<Pending> best_split(int id, std::size_t start, std::size_t end, std::size_t depth,
                                    std::uint64_t seed) const {
    const auto k = static_cast<std::size_t>(X_.cols());
    Stream rng{seed};

    std::vector<int> features(k);
    std::iota(features.begin(), features.end(), 0);
    std::vector<double> lo(k), hi(k);
    std::vector<int> usable;
    for (int f : features) {
      double a = at(idx_[start], f), b = a;
      for (std::size_t i = start + 1; i < end; ++i) {
        const double v = at(idx_[i], f);
        a = std::min(a, v);
        b = std::max(b, v);
      }
      lo[static_cast<std::size_t>(f)] = a;
      hi[static_cast<std::size_t>(f)] = b;
      if (b > a) usable.push_back(f);
    }
    if (usable.empty()) return std::nullopt;
    if (hp_.max_features && *hp_.max_features < usable.size()) {
      for (std::size_t i = 0; i < *hp_.max_features; ++i) {
        std::swap(usable[i], usable[i + rng.below(usable.size() - i)]);
      }
      usable.resize(*hp_.max_features);
      std::sort(usable.begin(), usable.end());
    }

    const double n = static_cast<double>(end - start);
    std::optional<Pending> best;
    for (int f : usable) {
      const double a = lo[static_cast<std::size_t>(f)], b = hi[static_cast<std::size_t>(f)];
      double thr = a + rng.uniform() * (b - a);
      if (thr >= b) thr = a;
      std::size_t nl = 0;
      double suml = 0.0, sumr = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const double v = y_(static_cast<Eigen::Index>(idx_[i]));
        if (at(idx_[i], f) <= thr) {
          ++nl;
          suml += v;
        } else {
          sumr += v;
        }
      }
      const std::size_t nr = end - start - nl;
      if (nl < hp_.min_samples_leaf || nr < hp_.min_samples_leaf || nl == 0 || nr == 0) continue;
      const double dl = static_cast<double>(nl), dr = static_cast<double>(nr);
      const double diff = suml / dl - sumr / dr;
      const double gain = dl * dr / n * diff * diff;
      if (!best || gain > best->gain) best = Pending{id, start, end, depth, seed, f, thr, gain};
    }
    return best;
  }

  void apply(const Pending& p) {
    auto mid_it = std::stable_partition(idx_.begin() + static_cast<std::ptrdiff_t>(p.start),
                                        idx_.begin() + static_cast<std::ptrdiff_t>(p.end),
                                        [&](std::size_t row) { return at(row, p.feature) <= p.threshold; });
    const auto mid = static_cast<std::size_t>(mid_it - idx_.begin());
    {
      auto& node = tree_.nodes[static_cast<std::size_t>(p.node)];
      node.feature = p.feature;
      node.threshold = p.threshold;
      node.impurity_decrease = p.gain;
    }
    const int left = static_cast<int>(tree_.nodes.size());
    add_node(p.start, mid, p.depth + 1, child_seed(p.seed, 0));
    const int right = static_cast<int>(tree_.nodes.size());
    add_node(mid, p.end, p.depth + 1, child_seed(p.seed, 1));
    tree_.nodes[static_cast<std::size_t>(p.node)].left = left;
    tree_.nodes[static_cast<std::size_t>(p.node)].right = right;
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  const Hyperparameters& hp_;
  std::vector<std::size_t> idx_;
  Tree tree_;
  std::priority_queue<Pending> queue_;
};

std::string opt_to_string(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : "none"; }

nlohmann::ordered_json opt_json(const std::optional<std::size_t>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<std::size_t> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::size_t>();
}

}  // namespace

std::string describe(const Hyperparameters& hp) {
  std::ostringstream os;
  os << "max_depth=" << opt_to_string(hp.max_depth) << " min_samples_leaf=" << hp.min_samples_leaf
     << " min_samples_split=" << hp.min_samples_split << " max_leaf_nodes=" << opt_to_string(hp.max_leaf_nodes);
  return os.str();
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::size_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

std::string schema_fingerprint(const std::vector<std::string>& names) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& n : names) {
    for (unsigned char c : n) feed(c);
    feed(',');
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

std::uint64_t tree_seed(std::uint64_t master, std::size_t i) { return splitmix64(master + kGolden * (i + 1)); }

Tree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Hyperparameters& hp, std::uint64_t seed) {
  return TreeBuilder(X, y, hp).build(seed);
}

Forest fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Hyperparameters& hp, std::uint64_t seed,
           std::vector<std::string> names, unsigned threads) {
  if (X.rows() < 2) throw InvalidArgument("fit needs at least two samples");
  if (X.cols() < 1) throw InvalidArgument("fit needs at least one feature");
  if (y.size() != X.rows()) throw InvalidArgument("fit: X and y row counts differ");
  if (hp.n_estimators < 1 || hp.min_samples_leaf < 1 || hp.min_samples_split < 2) {
    throw InvalidArgument("invalid hyperparameters: " + describe(hp));
  }
  if ((hp.max_depth && *hp.max_depth < 1) || (hp.max_leaf_nodes && *hp.max_leaf_nodes < 2) ||
      (hp.max_features && (*hp.max_features < 1 || *hp.max_features > static_cast<std::size_t>(X.cols())))) {
    throw InvalidArgument("invalid hyperparameters: " + describe(hp));
  }
  if (!X.allFinite() || !y.allFinite()) throw InvalidArgument("fit: non-finite input");
  if (names.empty()) {
    for (Eigen::Index i = 0; i < X.cols(); ++i) names.push_back("x" + std::to_string(i));
  }
  if (names.size() != static_cast<std::size_t>(X.cols())) throw InvalidArgument("fit: feature name count mismatch");

  Forest f;
  f.hp = hp;
  f.seed = seed;
  f.feature_names = std::move(names);
  f.fingerprint = schema_fingerprint(f.feature_names);
  f.n_train = static_cast<std::size_t>(X.rows());
  f.y_min = y.minCoeff();
  f.y_max = y.maxCoeff();
  if (f.y_max <= f.y_min) spdlog::warn("constant target; every tree is a single leaf");
  f.trees.resize(hp.n_estimators);
  for (std::size_t i = 0; i < hp.n_estimators; ++i) f.tree_seeds.push_back(tree_seed(seed, i));
  parallel_for(hp.n_estimators, threads, [&](std::size_t i) { f.trees[i] = fit_tree(X, y, hp, f.tree_seeds[i]); });
  return f;
}

Eigen::VectorXd predict(const Forest& forest, const Eigen::MatrixXd& X) {
  if (static_cast<std::size_t>(X.cols()) != forest.feature_count()) {
    throw InvalidArgument("predict: expected " + std::to_string(forest.feature_count()) + " features, got " +
                          std::to_string(X.cols()));
  }
  if (forest.trees.empty()) throw InvalidArgument("predict: empty forest");
  Eigen::VectorXd out(X.rows());
  const double t = static_cast<double>(forest.trees.size());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto row = X.row(i);
    double sum = 0.0;
    for (const auto& tree : forest.trees) sum += tree.predict(row);
    out(i) = std::clamp(sum / t, forest.y_min, forest.y_max);
  }
  return out;
}

Eigen::VectorXd feature_importance(const Forest& forest) {
  Eigen::VectorXd imp = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(forest.feature_count()));
  for (const auto& tree : forest.trees) {
    for (const auto& n : tree.nodes) {
      if (!n.is_leaf()) imp(n.feature) += n.impurity_decrease;
    }
  }
  if (forest.n_train > 0) imp /= static_cast<double>(forest.n_train);
  const double total = imp.sum();
  if (!(total > 0.0)) {
    spdlog::warn("no tree split on any feature; importances are all zero");
    return Eigen::VectorXd::Zero(imp.size());
  }
  return imp / total;
}

std::vector<Hyperparameters> Grid::cells(const Hyperparameters& base) const {
  std::vector<Hyperparameters> out;
  for (const auto& d : max_depth)
    for (auto leaf : min_samples_leaf)
      for (auto split : min_samples_split)
        for (const auto& nodes : max_leaf_nodes) {
          Hyperparameters hp = base;
          hp.max_depth = d;
          hp.min_samples_leaf = leaf;
          hp.min_samples_split = split;
          hp.max_leaf_nodes = nodes;
          out.push_back(hp);
        }
  return out;
}

namespace {

struct FoldData {
  Eigen::MatrixXd X_train, X_test;
  Eigen::VectorXd y_train, y_test;
};

FoldData split_fold(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::size_t>& fold,
                    std::size_t f) {
  std::vector<Eigen::Index> train, test;
  for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
  FoldData d;
  d.X_train = X(train, Eigen::all);
  d.X_test = X(test, Eigen::all);
  d.y_train = y(train);
  d.y_test = y(test);
  return d;
}

}  // namespace

GridResult grid_search(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<Hyperparameters>& cells,
                       std::size_t cv_folds, std::uint64_t seed, unsigned threads) {
  if (cells.empty()) throw InvalidArgument("grid search needs at least one cell");
  if (cv_folds < 2) throw InvalidArgument("grid search needs at least two folds");
  const auto n = static_cast<std::size_t>(X.rows());
  if (n < cv_folds) {
    throw InvalidArgument("grid search: " + std::to_string(n) + " samples cannot fill " + std::to_string(cv_folds) +
                          " folds");
  }
  GridResult out;
  if (cells.size() == 1) {
    out.best = cells.front();
    out.cell_mse.push_back(std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  const std::vector<std::string> rows(n);
  const auto fold = assign_folds(rows, cv_folds, SplitMode::plain, seed);
  std::vector<FoldData> data;
  for (std::size_t f = 0; f < cv_folds; ++f) data.push_back(split_fold(X, y, fold, f));

  for (const auto& hp : cells) {
    double total = 0.0;
    for (std::size_t f = 0; f < cv_folds; ++f) {
      const auto forest = fit(data[f].X_train, data[f].y_train, hp, tree_seed(seed, f), {}, threads);
      total += mean_squared_error(data[f].y_test, predict(forest, data[f].X_test));
    }
    out.cell_mse.push_back(total / static_cast<double>(cv_folds));
  }
  out.best_index = static_cast<std::size_t>(std::min_element(out.cell_mse.begin(), out.cell_mse.end()) -
                                            out.cell_mse.begin());
  out.best = cells[out.best_index];
  return out;
}

std::string_view to_string(SplitMode mode) {
  switch (mode) {
    case SplitMode::per_speaker: return "per_speaker";
    case SplitMode::grouped: return "grouped";
    case SplitMode::plain: return "plain";
  }
  return "unknown";
}

SplitMode parse_split_mode(std::string_view text) {
  std::string t(text);
  std::replace(t.begin(), t.end(), '-', '_');
  if (t == "per_speaker") return SplitMode::per_speaker;
  if (t == "grouped") return SplitMode::grouped;
  if (t == "plain") return SplitMode::plain;
  throw InvalidArgument("unknown split mode '" + std::string(text) + "' (per-speaker, grouped, plain)");
}

std::vector<std::size_t> assign_folds(const std::vector<std::string>& speaker_ids, std::size_t folds, SplitMode mode,
                                      std::uint64_t seed) {
  if (folds < 2) throw InvalidArgument("cross-validation needs at least two folds");
  const std::size_t n = speaker_ids.size();
  std::vector<std::size_t> fold(n, 0);
  Stream rng{seed};
  auto shuffle = [&](auto& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  };

  if (mode == SplitMode::plain) {
    if (n < folds) throw InvalidArgument("fewer samples than folds");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order);
    for (std::size_t i = 0; i < n; ++i) fold[order[i]] = i % folds;
    return fold;
  }

  std::vector<std::string> speakers;
  std::map<std::string, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = rows[speaker_ids[i]];
    if (r.empty()) speakers.push_back(speaker_ids[i]);
    r.push_back(i);
  }
  std::sort(speakers.begin(), speakers.end());

  if (mode == SplitMode::grouped) {
    if (speakers.size() < folds) {
      throw InvalidArgument("grouped split: " + std::to_string(speakers.size()) + " speakers cannot fill " +
                            std::to_string(folds) + " folds");
    }
    shuffle(speakers);
    for (std::size_t s = 0; s < speakers.size(); ++s)
      for (auto i : rows[speakers[s]]) fold[i] = s % folds;
    return fold;
  }

  std::size_t offset = 0, short_speakers = 0;
  for (const auto& s : speakers) {
    auto r = rows[s];
    if (r.size() < folds) ++short_speakers;
    shuffle(r);
    for (std::size_t j = 0; j < r.size(); ++j) fold[r[j]] = (offset + j) % folds;
    offset = (offset + r.size()) % folds;
  }
  if (short_speakers > 0) {
    spdlog::warn("{} speaker(s) have fewer than {} samples; their samples were dealt round-robin", short_speakers,
                 folds);
  }
  std::vector<std::size_t> counts(folds, 0);
  for (auto f : fold) ++counts[f];
  if (std::find(counts.begin(), counts.end(), 0) != counts.end()) throw InvalidArgument("a fold is empty");
  return fold;
}

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& pred) {
  const double ss_res = (y - pred).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  if (ss_tot > 0.0) return 1.0 - ss_res / ss_tot;
  return ss_res > 0.0 ? 0.0 : 1.0;
}

double mean_squared_error(const Eigen::VectorXd& y, const Eigen::VectorXd& pred) {
  return (y - pred).squaredNorm() / static_cast<double>(y.size());
}

CvMetrics cross_validate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& speaker_ids,
                         const Hyperparameters& hp, std::size_t folds, SplitMode mode, std::uint64_t seed,
                         unsigned threads) {
  if (speaker_ids.size() != static_cast<std::size_t>(X.rows())) throw InvalidArgument("speaker id count mismatch");
  const auto fold = assign_folds(speaker_ids, folds, mode, seed);
  CvMetrics m;
  m.folds = folds;
  bool constant_warned = false;
  auto r = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double v = stats::pearson(a, b);
    if (!constant_warned && (a.maxCoeff() <= a.minCoeff() || b.maxCoeff() <= b.minCoeff())) {
      spdlog::warn("constant targets or predictions in a fold; Pearson r reported as 0");
      constant_warned = true;
    }
    return v;
  };
  for (std::size_t f = 0; f < folds; ++f) {
    const auto d = split_fold(X, y, fold, f);
    const auto forest = fit(d.X_train, d.y_train, hp, tree_seed(seed, f), {}, threads);
    const auto p_train = predict(forest, d.X_train);
    const auto p_test = predict(forest, d.X_test);
    m.r2_train += r_squared(d.y_train, p_train);
    m.r2_test += r_squared(d.y_test, p_test);
    m.mse_train += mean_squared_error(d.y_train, p_train);
    m.mse_test += mean_squared_error(d.y_test, p_test);
    m.r_train += r(d.y_train, p_train);
    m.r_test += r(d.y_test, p_test);
  }
  const double k = static_cast<double>(folds);
  m.r2_train /= k;
  m.r2_test /= k;
  m.mse_train /= k;
  m.mse_test /= k;
  m.r_train /= k;
  m.r_test /= k;
  return m;
}

nlohmann::ordered_json to_json(const Hyperparameters& hp) {
  return {{"max_depth", opt_json(hp.max_depth)},
          {"min_samples_leaf", hp.min_samples_leaf},
          {"min_samples_split", hp.min_samples_split},
          {"max_leaf_nodes", opt_json(hp.max_leaf_nodes)},
          {"max_features", opt_json(hp.max_features)},
          {"n_estimators", hp.n_estimators}};
}

Hyperparameters hyperparameters_from_json(const nlohmann::json& j) {
  Hyperparameters hp;
  hp.max_depth = opt_from(j, "max_depth");
  hp.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  hp.min_samples_split = j.at("min_samples_split").get<std::size_t>();
  hp.max_leaf_nodes = opt_from(j, "max_leaf_nodes");
  hp.max_features = opt_from(j, "max_features");
  hp.n_estimators = j.at("n_estimators").get<std::size_t>();
  return hp;
}

nlohmann::ordered_json to_json(const CvMetrics& m) {
  return {{"r2_train", m.r2_train}, {"r2_test", m.r2_test}, {"mse_train", m.mse_train},
          {"mse_test", m.mse_test}, {"r_train", m.r_train}, {"r_test", m.r_test},
          {"folds", m.folds}};
}

nlohmann::ordered_json to_json(const Forest& forest) {
  nlohmann::ordered_json j;
  j["format"] = "voxtrait-erf";
  j["schema_version"] = kModelSchema;
  j["fingerprint"] = forest.fingerprint;
  j["features"] = forest.feature_names;
  j["hyperparameters"] = to_json(forest.hp);
  j["seed"] = forest.seed;
  j["n_train"] = forest.n_train;
  j["y_range"] = {forest.y_min, forest.y_max};
  auto trees = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    nlohmann::ordered_json tj;
    tj["seed"] = forest.tree_seeds[t];
    std::vector<int> feature, left, right;
    std::vector<double> threshold, value, decrease;
    std::vector<std::size_t> samples;
    for (const auto& n : forest.trees[t].nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
      samples.push_back(n.samples);
      decrease.push_back(n.impurity_decrease);
    }
    tj["feature"] = feature;
    tj["threshold"] = threshold;
    tj["left"] = left;
    tj["right"] = right;
    tj["value"] = value;
    tj["samples"] = samples;
    tj["impurity_decrease"] = decrease;
    trees.push_back(std::move(tj));
  }
  j["trees"] = std::move(trees);
  return j;
}

Forest forest_from_json(const nlohmann::json& j, const std::vector<std::string>* expected_names) {
  Forest f;
  try {
    if (j.at("format").get<std::string>() != "voxtrait-erf") throw ParseError("not a voxtrait model");
    if (j.at("schema_version").get<int>() != kModelSchema) throw ParseError("unsupported model schema_version");
    f.feature_names = j.at("features").get<std::vector<std::string>>();
    f.fingerprint = j.at("fingerprint").get<std::string>();
    if (f.fingerprint != schema_fingerprint(f.feature_names)) throw ParseError("model fingerprint does not match its feature list");
    f.hp = hyperparameters_from_json(j.at("hyperparameters"));
    f.seed = j.at("seed").get<std::uint64_t>();
    f.n_train = j.at("n_train").get<std::size_t>();
    f.y_min = j.at("y_range").at(0).get<double>();
    f.y_max = j.at("y_range").at(1).get<double>();
    for (const auto& tj : j.at("trees")) {
      f.tree_seeds.push_back(tj.at("seed").get<std::uint64_t>());
      const auto feature = tj.at("feature").get<std::vector<int>>();
      const auto threshold = tj.at("threshold").get<std::vector<double>>();
      const auto left = tj.at("left").get<std::vector<int>>();
      const auto right = tj.at("right").get<std::vector<int>>();
      const auto value = tj.at("value").get<std::vector<double>>();
      const auto samples = tj.at("samples").get<std::vector<std::size_t>>();
      const auto decrease = tj.at("impurity_decrease").get<std::vector<double>>();
      const std::size_t m = feature.size();
      if (threshold.size() != m || left.size() != m || right.size() != m || value.size() != m || samples.size() != m ||
          decrease.size() != m || m == 0) {
        throw ParseError("tree arrays have inconsistent lengths");
      }
      Tree tree;
      for (std::size_t i = 0; i < m; ++i) {
        Node n{feature[i], threshold[i], left[i], right[i], value[i], samples[i], decrease[i]};
        if (!n.is_leaf()) {
          const auto nf = static_cast<std::size_t>(n.feature);
          if (nf >= f.feature_names.size() || n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) ||
              static_cast<std::size_t>(n.left) >= m || static_cast<std::size_t>(n.right) >= m) {
            throw ParseError("tree node " + std::to_string(i) + " is malformed");
          }
        }
        tree.nodes.push_back(n);
      }
      f.trees.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  if (expected_names && schema_fingerprint(*expected_names) != f.fingerprint) {
    throw InvalidArgument("model was trained on a different feature schema (fingerprint " + f.fingerprint + ", data " +
                          schema_fingerprint(*expected_names) + ")");
  }
  return f;
}

void save_model(const std::filesystem::path& path, const Forest& forest) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(forest).dump() << '\n';
}

Forest load_model(const std::filesystem::path& path, const std::vector<std::string>* expected_names) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return forest_from_json(j, expected_names);
}

}  // namespace voxtrait::erf
