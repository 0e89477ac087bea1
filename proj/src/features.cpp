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

#include "voxtrait/features.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "csv.hpp"
#include "json.hpp"
#include "voxtrait/error.hpp"

namespace voxtrait::features {

namespace {

constexpr int kSidecarSchema = 1;

}  // namespace

const std::array<std::string_view, kMeasureCount>& measure_names() {
  static constexpr std::array<std::string_view, kMeasureCount> names = {
      "f0_mean",       "f0_sd",          "hnr",           "jitter_local",  "jitter_local_abs", "jitter_rap",
      "jitter_ppq5",   "jitter_ddp",     "shimmer_local", "shimmer_apq3",  "shimmer_apq5",     "shimmer_apq11",
      "shimmer_dda",   "f1_mean",        "f2_mean",       "f3_mean",       "f4_mean",          "formant_position",
      "formant_dispersion", "avg_formant", "mff",         "fitch_vtl",     "delta_f",
  };
  return names;
}

std::vector<std::string> measure_name_list() {
  const auto& n = measure_names();
  return {n.begin(), n.end()};
}

void AcousticVector::set(Measure m, std::optional<double> v) {
  const auto i = index(m);
  if (v && std::isfinite(*v)) {
    values[i] = *v;
    missing[i] = false;
  } else {
    values[i] = 0.0;
    missing[i] = true;
  }
}

std::size_t AcousticVector::missing_count() const {
  return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), true));
}

pitch::PitchConfig pitch_config_for(const ExtractionConfig& config, audio::Sex sex) {
  auto pc = pitch::default_config(sex);
  if (config.pitch_floor) pc.floor_hz = *config.pitch_floor;
  if (config.pitch_ceiling) pc.ceiling_hz = *config.pitch_ceiling;
  pc.voicing_threshold = config.voicing_threshold;
  return pc;
}

SegmentMeasures measure_segment(const audio::AudioSegment& seg, audio::Sex sex, const ExtractionConfig& config) {
  SegmentMeasures m;
  const auto pc = pitch_config_for(config, sex);
  if (seg.samples.size() < pitch::window_samples(pc, seg.sample_rate)) return m;

  const auto track = pitch::track_pitch(seg, pc);
  m.frames = track.size();
  m.voiced_frames = track.voiced_count();
  if (m.voiced_frames == 0) return m;

  double sum = 0.0;
  for (std::size_t i = 0; i < track.size(); ++i)
    if (track.voiced[i]) sum += track.f0_hz[i];
  const double mean = sum / static_cast<double>(m.voiced_frames);
  m.f0_mean = mean;
  if (m.voiced_frames >= 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < track.size(); ++i)
      if (track.voiced[i]) ss += (track.f0_hz[i] - mean) * (track.f0_hz[i] - mean);
    m.f0_sd = std::sqrt(ss / static_cast<double>(m.voiced_frames - 1));
  }

  const auto pulses = pitch::extract_pulses(seg, track);
  m.perturbation = perturbation::measure(track, pulses);

  const double rate = formants::analysis_rate_for(config.formant, sex);
  const auto ft = formants::track_formants(seg, track, rate, config.formant);
  m.formants = formants::formant_means(ft, config.formant.min_frames);
  return m;
}

formants::PoolStats pool_stats(std::span<const SegmentMeasures> measures) {
  std::vector<formants::Formants> present;
  for (const auto& m : measures)
    if (m.formants) present.push_back(*m.formants);
  return formants::pool_stats(present);
}

AcousticVector assemble(const SegmentMeasures& m, const formants::PoolStats& pool, double speed_of_sound) {
  AcousticVector v;
  v.set(Measure::f0_mean, m.f0_mean);
  v.set(Measure::f0_sd, m.f0_sd);
  const auto& p = m.perturbation;
  v.set(Measure::hnr, p.hnr_db);
  v.set(Measure::jitter_local, p.jitter.local);
  v.set(Measure::jitter_local_abs, p.jitter.local_abs);
  v.set(Measure::jitter_rap, p.jitter.rap);
  v.set(Measure::jitter_ppq5, p.jitter.ppq5);
  v.set(Measure::jitter_ddp, p.jitter.ddp);
  v.set(Measure::shimmer_local, p.shimmer.local);
  v.set(Measure::shimmer_apq3, p.shimmer.apq3);
  v.set(Measure::shimmer_apq5, p.shimmer.apq5);
  v.set(Measure::shimmer_apq11, p.shimmer.apq11);
  v.set(Measure::shimmer_dda, p.shimmer.dda);
  if (m.formants) {
    const auto& f = *m.formants;
    v.set(Measure::f1_mean, f[0]);
    v.set(Measure::f2_mean, f[1]);
    v.set(Measure::f3_mean, f[2]);
    v.set(Measure::f4_mean, f[3]);
    const auto e = formants::vtl_estimators(f, pool, speed_of_sound);
    v.set(Measure::formant_position, e.formant_position);
    v.set(Measure::formant_dispersion, e.dispersion);
    v.set(Measure::avg_formant, e.average);
    v.set(Measure::mff, e.geometric_mean);
    v.set(Measure::fitch_vtl, e.fitch_vtl);
    v.set(Measure::delta_f, e.spacing);
  }
  return v;
}

AcousticVector extract_vector(const audio::AudioSegment& seg, audio::Sex sex, const formants::PoolStats& pool,
                              const ExtractionConfig& config) {
  return assemble(measure_segment(seg, sex, config), pool, config.formant.speed_of_sound);
}

FeatureMatrix build_matrix(std::span<const LabeledVector> rows, const audio::RatingLabels& labels) {
  std::vector<const LabeledVector*> kept;
  std::size_t dropped = 0;
  for (const auto& r : rows) {
    if (r.vector.all_missing()) {
      ++dropped;
      continue;
    }
    if (!labels.contains(r.speaker_id)) {
      throw InvalidArgument("speaker '" + r.speaker_id + "' has no rating label");
    }
    kept.push_back(&r);
  }
  if (dropped > 0) spdlog::warn("{} segment(s) had no measurable voicing and were excluded", dropped);
  if (kept.size() < 2) throw InvalidArgument("feature matrix needs at least two usable samples");

  std::stable_sort(kept.begin(), kept.end(), [](const LabeledVector* a, const LabeledVector* b) {
    return std::tie(a->speaker_id, a->segment_index) < std::tie(b->speaker_id, b->segment_index);
  });

  const auto n = static_cast<Eigen::Index>(kept.size());
  const auto k = static_cast<Eigen::Index>(kMeasureCount);
  FeatureMatrix fm;
  fm.values.resize(n, k);
  fm.labels.resize(n);
  fm.names = measure_name_list();
  fm.scale.resize(kMeasureCount);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto* r = kept[static_cast<std::size_t>(i)];
    fm.speaker_ids.push_back(r->speaker_id);
    fm.segment_index.push_back(r->segment_index);
    fm.labels(i) = labels.at(r->speaker_id);
  }

  for (Eigen::Index c = 0; c < k; ++c) {
    auto& s = fm.scale[static_cast<std::size_t>(c)];
    double sum = 0.0;
    std::size_t present = 0;
    for (const auto* r : kept) {
      if (r->vector.missing[static_cast<std::size_t>(c)]) continue;
      sum += r->vector.values[static_cast<std::size_t>(c)];
      ++present;
    }
    s.missing = kept.size() - present;
    if (present > 0) {
      s.mean = sum / static_cast<double>(present);
      double ss = 0.0;
      for (const auto* r : kept) {
        if (r->vector.missing[static_cast<std::size_t>(c)]) continue;
        const double d = r->vector.values[static_cast<std::size_t>(c)] - s.mean;
        ss += d * d;
      }
      s.sd = std::sqrt(ss / static_cast<double>(present));
    }
    if (!(s.sd > 0.0)) spdlog::warn("measure '{}' has zero variance; normalized to zeros", fm.names[static_cast<std::size_t>(c)]);
    if (s.missing > 0) spdlog::info("measure '{}': {} missing value(s) imputed to the column mean", fm.names[static_cast<std::size_t>(c)], s.missing);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& v = kept[static_cast<std::size_t>(i)]->vector;
      const bool miss = v.missing[static_cast<std::size_t>(c)];
      fm.values(i, c) = (miss || !(s.sd > 0.0)) ? 0.0 : (v.values[static_cast<std::size_t>(c)] - s.mean) / s.sd;
    }
  }
  return fm;
}

Eigen::VectorXd normalize(const AcousticVector& v, std::span<const ColumnScale> scale) {
  if (scale.size() != kMeasureCount) throw InvalidArgument("normalization needs 23 column scales");
  Eigen::VectorXd z(static_cast<Eigen::Index>(kMeasureCount));
  for (std::size_t c = 0; c < kMeasureCount; ++c) {
    const auto& s = scale[c];
    z(static_cast<Eigen::Index>(c)) = (v.missing[c] || !(s.sd > 0.0)) ? 0.0 : (v.values[c] - s.mean) / s.sd;
  }
  return z;
}

Eigen::VectorXd denormalize(const Eigen::VectorXd& z, std::span<const ColumnScale> scale) {
  if (static_cast<std::size_t>(z.size()) != scale.size()) throw InvalidArgument("denormalize: size mismatch");
  Eigen::VectorXd x(z.size());
  for (Eigen::Index c = 0; c < z.size(); ++c) {
    const auto& s = scale[static_cast<std::size_t>(c)];
    x(c) = z(c) * s.sd + s.mean;
  }
  return x;
}

void standardize_columns(Eigen::MatrixXd& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double mean = m.col(c).mean();
    const double sd = std::sqrt((m.col(c).array() - mean).square().mean());
    if (sd > 0.0) {
      m.col(c) = (m.col(c).array() - mean) / sd;
    } else {
      m.col(c).setZero();
    }
  }
}

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& fm) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "speaker_id,segment_index,label";
  for (const auto& n : fm.names) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < fm.rows(); ++i) {
    out << fm.speaker_ids[static_cast<std::size_t>(i)] << ',' << fm.segment_index[static_cast<std::size_t>(i)] << ','
        << fm.labels(i);
    for (Eigen::Index c = 0; c < fm.cols(); ++c) out << ',' << fm.values(i, c);
    out << '\n';
  }
}

FeatureMatrix read_feature_csv(const std::filesystem::path& path) {
  const auto table = detail::read_csv(path);
  const std::string origin = path.string();
  if (table.header.size() < 4 || table.header[0] != "speaker_id" || table.header[1] != "segment_index" ||
      table.header[2] != "label") {
    throw ParseError(origin + ": header must start with speaker_id,segment_index,label");
  }
  FeatureMatrix fm;
  fm.names.assign(table.header.begin() + 3, table.header.end());
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto k = static_cast<Eigen::Index>(fm.names.size());
  fm.values.resize(n, k);
  fm.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const std::string where = origin + ":" + std::to_string(table.line_numbers[static_cast<std::size_t>(i)]);
    if (row.size() != table.header.size()) throw ParseError(where + ": expected " + std::to_string(table.header.size()) + " fields");
    fm.speaker_ids.push_back(row[0]);
    fm.segment_index.push_back(static_cast<std::size_t>(detail::parse_integer(row[1], where)));
    fm.labels(i) = detail::parse_double(row[2], where);
    for (Eigen::Index c = 0; c < k; ++c) fm.values(i, c) = detail::parse_double(row[static_cast<std::size_t>(c) + 3], where);
  }
  return fm;
}

std::filesystem::path sidecar_path(const std::filesystem::path& feature_csv) {
  auto p = feature_csv;
  p.replace_extension(".norm.json");
  return p;
}

void write_sidecar(const std::filesystem::path& path, const Sidecar& s) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSidecarSchema;
  j["sex"] = s.sex;
  j["duration_s"] = s.duration_s;
  j["excluded_segments"] = s.excluded_segments;
  auto cols = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < s.names.size(); ++i) {
    cols.push_back({{"name", s.names[i]}, {"mean", s.scale[i].mean}, {"sd", s.scale[i].sd}, {"missing", s.scale[i].missing}});
  }
  j["columns"] = cols;
  j["formant_pool"] = {{"mean", s.pool.mean}, {"sd", s.pool.sd}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Sidecar read_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  Sidecar s;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("schema_version").get<int>() != kSidecarSchema) throw ParseError(path.string() + ": unsupported schema_version");
    s.sex = j.at("sex").get<std::string>();
    s.duration_s = j.at("duration_s").get<double>();
    s.excluded_segments = j.value("excluded_segments", std::size_t{0});
    for (const auto& c : j.at("columns")) {
      s.names.push_back(c.at("name").get<std::string>());
      s.scale.push_back({c.at("mean").get<double>(), c.at("sd").get<double>(), c.value("missing", std::size_t{0})});
    }
    s.pool.mean = j.at("formant_pool").at("mean").get<formants::Formants>();
    s.pool.sd = j.at("formant_pool").at("sd").get<formants::Formants>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return s;
}

}  // namespace voxtrait::features
