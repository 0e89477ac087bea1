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

// End-to-end studies: duration sweep, cluster-reduction sweep with VIF
// monitoring, and characterization of cluster importance.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "voxtrait/audio_io.hpp"
#include "voxtrait/cluster.hpp"
#include "voxtrait/erf.hpp"
#include "voxtrait/features.hpp"

namespace voxtrait::pipeline {

inline constexpr int kReportSchema = 1;

struct ModelConfig {
  erf::Hyperparameters base;  // n_estimators, max_features and the no-search fallback
  erf::Grid grid;
  bool search = true;         // false: use `base` as is
  std::size_t grid_folds = 10;
  std::size_t folds = 4;
  erf::SplitMode split_mode = erf::SplitMode::per_speaker;
  std::uint64_t seed = 42;
  unsigned threads = 0;
};

nlohmann::ordered_json to_json(const ModelConfig& c);

/// A segment length in seconds, or the rated sentence span from the manifest.
struct Duration {
  std::optional<double> seconds;

  bool sentence() const { return !seconds.has_value(); }
  std::string label() const;
};

Duration parse_duration(const std::string& text);

struct Extraction {
  features::FeatureMatrix matrix;
  features::Sidecar sidecar;
  std::size_t segments = 0;  // before dropping unusable ones
};

/// Segments, measures and normalizes every recording of one sex class.
/// Speakers without a rating label are skipped with a warning.
Extraction extract(const std::vector<audio::ManifestEntry>& manifest, const audio::RatingLabels& labels,
                   audio::Sex sex, const Duration& duration, const features::ExtractionConfig& config);

struct Evaluation {
  erf::Hyperparameters hp;
  erf::CvMetrics metrics;
  std::vector<double> grid_mse;
  erf::SplitMode split_mode = erf::SplitMode::per_speaker;
  std::size_t folds = 0;
};

/// Grid search (when enabled) followed by cross-validation at the winner.
Evaluation evaluate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& speakers,
                    const ModelConfig& config);

nlohmann::ordered_json to_json(const Evaluation& e);

struct DurationRow {
  std::string label;
  std::size_t samples = 0;
  bool skipped = false;
  std::string note;
  Evaluation evaluation;
};

struct DurationSweepReport {
  std::string sex;
  std::vector<DurationRow> rows;
  std::optional<std::size_t> optimal;  // index into rows
};

/// Sentence-span rows use plain 5-fold splits across all samples.
DurationSweepReport duration_sweep(const std::vector<audio::ManifestEntry>& manifest,
                                   const audio::RatingLabels& labels, audio::Sex sex,
                                   const std::vector<Duration>& durations,
                                   const features::ExtractionConfig& extraction, const ModelConfig& model);

nlohmann::ordered_json to_json(const DurationSweepReport& r);

struct ClusterRow {
  std::size_t k = 0;
  bool failed = false;
  std::string error;
  double max_vif = 0.0;
  std::vector<double> vifs;
  cluster::ClusterAssignment assignment;
  Evaluation evaluation;
};

struct Selection {
  std::size_t k = 0;
  bool performance_met = false;
  double baseline_r_test = 0.0;
  double tolerance = 0.05;
  std::optional<std::size_t> vif_crossing_k;  // largest k with max VIF < 5
};

struct ClusterSweepReport {
  cluster::Dendrogram dendrogram;
  std::vector<ClusterRow> rows;  // k descending
  std::optional<Selection> selection;
  std::string selection_error;
};

inline constexpr double kVifLimit = 5.0;

/// VIFs of a represented matrix; a single column reports 1.
stats::VifReport<double> representative_vif(const Eigen::MatrixXd& represented, const std::vector<std::string>& names);

/// Runs k = k_max..k_min (defaults: all leaves down to 1).
ClusterSweepReport cluster_sweep(const features::FeatureMatrix& fm, const ModelConfig& model,
                                 std::size_t k_min = 1, std::optional<std::size_t> k_max = std::nullopt);

/// Smallest k with max VIF < 5 and r_test within `tolerance` of the k = n
/// baseline; otherwise the smallest k with max VIF < 5, flagged. Throws
/// InvalidArgument if no k qualifies.
Selection select_optimal_k(const std::vector<ClusterRow>& rows, double tolerance = 0.05);

nlohmann::ordered_json to_json(const ClusterSweepReport& r);

struct ClusterWeight {
  std::string name;
  std::vector<std::string> members;
  double vif = 1.0;
  double importance = 0.0;
  std::optional<double> explained_variance;
};

struct CharacterizationReport {
  std::string sex;
  std::string duration;
  std::size_t k = 0;
  bool k_from_sweep = false;
  std::optional<Selection> selection;
  std::vector<ClusterWeight> clusters;  // in cluster order
  Evaluation evaluation;
  erf::Forest model;
};

CharacterizationReport characterize(const features::FeatureMatrix& fm, std::size_t k, const ModelConfig& model);

nlohmann::ordered_json to_json(const CharacterizationReport& r);

}  // namespace voxtrait::pipeline
