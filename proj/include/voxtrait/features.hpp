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

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voxtrait/audio_io.hpp"
#include "voxtrait/formants.hpp"
#include "voxtrait/perturbation.hpp"
#include "voxtrait/pitch.hpp"

namespace voxtrait::features {

inline constexpr std::size_t kMeasureCount = 23;

/// Column order of every feature table. Index i is measure #i+1 of the
/// standard 23-measure set.
enum class Measure : std::size_t {
  f0_mean,
  f0_sd,
  hnr,
  jitter_local,
  jitter_local_abs,
  jitter_rap,
  jitter_ppq5,
  jitter_ddp,
  shimmer_local,
  shimmer_apq3,
  shimmer_apq5,
  shimmer_apq11,
  shimmer_dda,
  f1_mean,
  f2_mean,
  f3_mean,
  f4_mean,
  formant_position,
  formant_dispersion,
  avg_formant,
  mff,
  fitch_vtl,
  delta_f,
};

constexpr std::size_t index(Measure m) { return static_cast<std::size_t>(m); }

const std::array<std::string_view, kMeasureCount>& measure_names();
std::vector<std::string> measure_name_list();

struct AcousticVector {
  std::array<double, kMeasureCount> values{};
  std::array<bool, kMeasureCount> missing{};

  AcousticVector() { missing.fill(true); }

  double operator[](Measure m) const { return values[index(m)]; }
  bool is_missing(Measure m) const { return missing[index(m)]; }
  void set(Measure m, std::optional<double> v);
  std::size_t missing_count() const;
  bool all_missing() const { return missing_count() == kMeasureCount; }
};

struct ExtractionConfig {
  std::optional<double> pitch_floor;    // default per sex class
  std::optional<double> pitch_ceiling;  // default per sex class
  double voicing_threshold = 0.45;
  formants::FormantConfig formant;
};

pitch::PitchConfig pitch_config_for(const ExtractionConfig& config, audio::Sex sex);

/// Everything measurable from one segment on its own. The formant position
/// still needs pool statistics, hence the two passes.
struct SegmentMeasures {
  std::optional<double> f0_mean;
  std::optional<double> f0_sd;
  perturbation::PerturbationSet perturbation;
  std::optional<formants::Formants> formants;
  std::size_t frames = 0;
  std::size_t voiced_frames = 0;
};

SegmentMeasures measure_segment(const audio::AudioSegment& seg, audio::Sex sex, const ExtractionConfig& config);

/// Pool statistics over the per-segment formant means that are present.
formants::PoolStats pool_stats(std::span<const SegmentMeasures> measures);

AcousticVector assemble(const SegmentMeasures& m, const formants::PoolStats& pool, double speed_of_sound = 35000.0);

AcousticVector extract_vector(const audio::AudioSegment& seg, audio::Sex sex, const formants::PoolStats& pool,
                              const ExtractionConfig& config);

struct ColumnScale {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t missing = 0;
};

struct LabeledVector {
  std::string speaker_id;
  std::size_t segment_index = 0;
  AcousticVector vector;
};

/// Z-normalized sample x measure table. Rows are ordered by speaker id, then
/// segment index; every segment of a speaker carries the speaker's label.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> speaker_ids;
  std::vector<std::size_t> segment_index;
  Eigen::VectorXd labels;
  std::vector<std::string> names;
  std::vector<ColumnScale> scale;  // empty when loaded without a sidecar

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// Column-wise population z-scores over non-missing entries; missing entries
/// become 0 (the column mean). Zero-variance columns become all zeros.
/// All-missing vectors are dropped with a warning.
FeatureMatrix build_matrix(std::span<const LabeledVector> rows, const audio::RatingLabels& labels);

/// Applies stored scaling to a new vector (missing entries map to 0).
Eigen::VectorXd normalize(const AcousticVector& v, std::span<const ColumnScale> scale);
Eigen::VectorXd denormalize(const Eigen::VectorXd& z, std::span<const ColumnScale> scale);

/// Re-standardizes the columns of a matrix in place (population SD).
void standardize_columns(Eigen::MatrixXd& m);

/// `speaker_id,segment_index,label,<23 measure names>`, one row per segment.
void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& fm);
FeatureMatrix read_feature_csv(const std::filesystem::path& path);

struct Sidecar {
  std::string sex;
  double duration_s = 0.0;
  std::vector<std::string> names;
  std::vector<ColumnScale> scale;
  formants::PoolStats pool;
  std::size_t excluded_segments = 0;
};

std::filesystem::path sidecar_path(const std::filesystem::path& feature_csv);
void write_sidecar(const std::filesystem::path& path, const Sidecar& sidecar);
Sidecar read_sidecar(const std::filesystem::path& path);

}  // namespace voxtrait::features
