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

#include "voxtrait/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "voxtrait/error.hpp"
#include "voxtrait/stats.hpp"

namespace voxtrait::pipeline {

namespace {

nlohmann::ordered_json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return nullptr;
  return x > 0 ? "inf" : "-inf";
}

nlohmann::ordered_json opt_json(const std::optional<std::size_t>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::vector<std::string> leaf_names(const cluster::Dendrogram& d, const std::vector<std::size_t>& members) {
  std::vector<std::string> out;
  for (auto m : members) out.push_back(d.leaves[m]);
  return out;
}

}  // namespace

nlohmann::ordered_json to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["base"] = erf::to_json(c.base);
  j["search"] = c.search;
  if (c.search) {
    auto opts = nlohmann::ordered_json::array();
    for (const auto& v : c.grid.max_depth) opts.push_back(opt_json(v));
    j["grid"]["max_depth"] = opts;
    j["grid"]["min_samples_leaf"] = c.grid.min_samples_leaf;
    j["grid"]["min_samples_split"] = c.grid.min_samples_split;
    opts = nlohmann::ordered_json::array();
    for (const auto& v : c.grid.max_leaf_nodes) opts.push_back(opt_json(v));
    j["grid"]["max_leaf_nodes"] = opts;
    j["grid_folds"] = c.grid_folds;
  }
  j["folds"] = c.folds;
  j["split_mode"] = std::string(erf::to_string(c.split_mode));
  j["seed"] = c.seed;
  return j;
}

std::string Duration::label() const {
  if (!seconds) return "sentence";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", *seconds);
  return buf;
}

Duration parse_duration(const std::string& text) {
  if (text == "sentence") return {};
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || !(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument("duration must be a positive number of seconds or 'sentence', got '" + text + "'");
  }
  return Duration{v};
}

Extraction extract(const std::vector<audio::ManifestEntry>& manifest, const audio::RatingLabels& labels,
                   audio::Sex sex, const Duration& duration, const features::ExtractionConfig& config) {
  std::vector<audio::AudioSegment> segments;
  std::map<std::string, std::size_t> next_index;
  std::set<std::string> unlabeled;
  std::size_t missing_span = 0;
  for (const auto& e : manifest) {
    if (e.sex != sex) continue;
    if (!labels.contains(e.speaker_id)) {
      unlabeled.insert(e.speaker_id);
      continue;
    }
    auto rec = audio::load_wav(e.wav_path);
    rec.speaker_id = e.speaker_id;
    rec.sex = e.sex;
    auto& idx = next_index[e.speaker_id];
    if (duration.sentence()) {
      if (!e.sentence_start || !e.sentence_end) {
        ++missing_span;
        continue;
      }
      const auto a = static_cast<std::size_t>(std::max(0.0, *e.sentence_start) * rec.sample_rate);
      const auto b = std::min(rec.samples.size(), static_cast<std::size_t>(*e.sentence_end * rec.sample_rate));
      if (b <= a) throw InvalidArgument(e.wav_path.string() + ": empty sentence span");
      audio::AudioSegment seg{e.speaker_id, idx++, {rec.samples.begin() + static_cast<std::ptrdiff_t>(a),
                                                     rec.samples.begin() + static_cast<std::ptrdiff_t>(b)},
                              rec.sample_rate, static_cast<double>(b - a) / rec.sample_rate};
      segments.push_back(std::move(seg));
    } else {
      for (auto& seg : audio::segment(rec, *duration.seconds)) {
        seg.segment_index = idx++;
        segments.push_back(std::move(seg));
      }
    }
  }
  if (!unlabeled.empty()) spdlog::warn("{} speaker(s) have no rating and were skipped", unlabeled.size());
  if (missing_span > 0) spdlog::warn("{} recording(s) have no sentence span and were skipped", missing_span);
  if (segments.empty()) {
    throw InvalidArgument("no " + audio::to_string(sex) + " segments to extract at duration " + duration.label());
  }

  std::vector<features::SegmentMeasures> measures;
  measures.reserve(segments.size());
  for (const auto& seg : segments) measures.push_back(features::measure_segment(seg, sex, config));
  const auto pool = features::pool_stats(measures);

  std::vector<features::LabeledVector> rows;
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    auto v = features::assemble(measures[i], pool, config.formant.speed_of_sound);
    if (v.all_missing()) ++excluded;
    rows.push_back({segments[i].speaker_id, segments[i].segment_index, std::move(v)});
  }

  Extraction out;
  out.segments = segments.size();
  out.matrix = features::build_matrix(rows, labels);
  out.sidecar.sex = audio::to_string(sex);
  out.sidecar.duration_s = duration.seconds.value_or(0.0);
  out.sidecar.names = out.matrix.names;
  out.sidecar.scale = out.matrix.scale;
  out.sidecar.pool = pool;
  out.sidecar.excluded_segments = excluded;
  return out;
}

Evaluation evaluate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& speakers,
                    const ModelConfig& config) {
  Evaluation e;
  e.hp = config.base;
  e.split_mode = config.split_mode;
  e.folds = config.folds;
  if (config.search) {
    const auto cells = config.grid.cells(config.base);
    if (cells.size() == 1) {
      e.hp = cells.front();
    } else if (static_cast<std::size_t>(X.rows()) < config.grid_folds) {
      spdlog::warn("{} samples are too few for {}-fold grid search; using the base hyperparameters", X.rows(),
                   config.grid_folds);
    } else {
      auto g = erf::grid_search(X, y, cells, config.grid_folds, config.seed, config.threads);
      e.hp = g.best;
      e.grid_mse = std::move(g.cell_mse);
    }
  }
  e.metrics = erf::cross_validate(X, y, speakers, e.hp, config.folds, config.split_mode, config.seed, config.threads);
  return e;
}

nlohmann::ordered_json to_json(const Evaluation& e) {
  nlohmann::ordered_json j;
  j["hyperparameters"] = erf::to_json(e.hp);
  j["split_mode"] = std::string(erf::to_string(e.split_mode));
  j["folds"] = e.folds;
  j["metrics"] = erf::to_json(e.metrics);
  if (!e.grid_mse.empty()) {
    auto g = nlohmann::ordered_json::array();
    for (double v : e.grid_mse) g.push_back(number(v));
    j["grid_mse"] = g;
  }
  return j;
}

DurationSweepReport duration_sweep(const std::vector<audio::ManifestEntry>& manifest,
                                   const audio::RatingLabels& labels, audio::Sex sex,
                                   const std::vector<Duration>& durations,
                                   const features::ExtractionConfig& extraction, const ModelConfig& model) {
  if (durations.empty()) throw InvalidArgument("duration sweep needs at least one duration");
  DurationSweepReport report;
  report.sex = audio::to_string(sex);
  for (const auto& d : durations) {
    DurationRow row;
    row.label = d.label();
    ModelConfig cfg = model;
    if (d.sentence()) {
      cfg.split_mode = erf::SplitMode::plain;
      cfg.folds = 5;
    }
    try {
      const auto ex = extract(manifest, labels, sex, d, extraction);
      row.samples = static_cast<std::size_t>(ex.matrix.rows());
      if (row.samples < 2 * cfg.folds) {
        row.skipped = true;
        row.note = "fewer than 2 x folds samples";
        spdlog::warn("duration {}: {} samples, skipped", row.label, row.samples);
      } else {
        row.evaluation = evaluate(ex.matrix.values, ex.matrix.labels, ex.matrix.speaker_ids, cfg);
      }
    } catch (const Error& err) {
      row.skipped = true;
      row.note = err.what();
      spdlog::warn("duration {} skipped: {}", row.label, err.what());
    }
    report.rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    if (r.skipped) continue;
    if (!report.optimal) {
      report.optimal = i;
      continue;
    }
    const auto& best = report.rows[*report.optimal].evaluation.metrics;
    const auto& m = r.evaluation.metrics;
    if (m.r_test > best.r_test || (m.r_test == best.r_test && m.r2_test > best.r2_test)) report.optimal = i;
  }
  return report;
}

nlohmann::ordered_json to_json(const DurationSweepReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchema;
  j["kind"] = "duration_sweep";
  j["sex"] = r.sex;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json rj;
    rj["duration"] = row.label;
    rj["samples"] = row.samples;
    rj["skipped"] = row.skipped;
    if (!row.note.empty()) rj["note"] = row.note;
    if (!row.skipped) rj["evaluation"] = to_json(row.evaluation);
    rows.push_back(std::move(rj));
  }
  j["rows"] = rows;
  j["optimal_duration"] = r.optimal ? nlohmann::ordered_json(r.rows[*r.optimal].label) : nlohmann::ordered_json(nullptr);
  return j;
}

stats::VifReport<double> representative_vif(const Eigen::MatrixXd& represented, const std::vector<std::string>& names) {
  if (represented.cols() < 2) {
    stats::VifReport<double> one;
    one.values = Eigen::VectorXd::Ones(represented.cols());
    one.max_vif = 1.0;
    return one;
  }
  return stats::vif(stats::correlation(represented, names));
}

ClusterSweepReport cluster_sweep(const features::FeatureMatrix& fm, const ModelConfig& model, std::size_t k_min,
                                 std::optional<std::size_t> k_max) {
  const auto n_vars = static_cast<std::size_t>(fm.cols());
  if (n_vars < 2) throw InvalidArgument("cluster sweep needs at least two measures");
  const std::size_t top = std::min(k_max.value_or(n_vars), n_vars);
  if (k_min < 1 || k_min > top) throw InvalidArgument("cluster sweep: invalid k range");

  ClusterSweepReport report;
  report.dendrogram = cluster::build_dendrogram(stats::correlation(fm.values, fm.names));
  for (std::size_t k = top; k >= k_min; --k) {
    ClusterRow row;
    row.k = k;
    row.assignment = cluster::cut(report.dendrogram, k);
    try {
      const auto rep = cluster::represent_clusters(fm.values, row.assignment);
      const auto v = representative_vif(rep.values, rep.names);
      row.vifs.assign(v.values.data(), v.values.data() + v.values.size());
      row.max_vif = v.max_vif;
      row.evaluation = evaluate(rep.values, fm.labels, fm.speaker_ids, model);
      spdlog::info("k={:2d} max VIF {:.3g} r_test {:.3f}", k, row.max_vif, row.evaluation.metrics.r_test);
    } catch (const Error& err) {
      row.failed = true;
      row.error = err.what();
      spdlog::warn("k={} failed: {}", k, err.what());
    }
    report.rows.push_back(std::move(row));
    if (k == 1) break;
  }
  try {
    report.selection = select_optimal_k(report.rows);
  } catch (const InvalidArgument& err) {
    report.selection_error = err.what();
    spdlog::warn("{}", err.what());
  }
  return report;
}

Selection select_optimal_k(const std::vector<ClusterRow>& rows, double tolerance) {
  const ClusterRow* baseline = nullptr;
  for (const auto& r : rows)
    if (!r.failed && (!baseline || r.k > baseline->k)) baseline = &r;
  if (!baseline) throw InvalidArgument("cluster sweep has no successful rows");

  Selection s;
  s.tolerance = tolerance;
  s.baseline_r_test = baseline->evaluation.metrics.r_test;
  std::optional<std::size_t> smallest_vif_ok, smallest_both;
  for (const auto& r : rows) {
    if (r.failed || !(r.max_vif < kVifLimit)) continue;
    if (!s.vif_crossing_k || r.k > *s.vif_crossing_k) s.vif_crossing_k = r.k;
    if (!smallest_vif_ok || r.k < *smallest_vif_ok) smallest_vif_ok = r.k;
    if (r.evaluation.metrics.r_test >= s.baseline_r_test - tolerance && (!smallest_both || r.k < *smallest_both)) {
      smallest_both = r.k;
    }
  }
  if (!smallest_vif_ok) {
    throw InvalidArgument("no cluster count brings every VIF below 5; inspect the VIF curve of the sweep");
  }
  s.performance_met = smallest_both.has_value();
  s.k = smallest_both.value_or(*smallest_vif_ok);
  if (!s.performance_met) spdlog::warn("no k with VIF < 5 keeps r_test within {} of the baseline", tolerance);
  return s;
}

namespace {

nlohmann::ordered_json selection_json(const Selection& s) {
  return {{"k", s.k},
          {"performance_met", s.performance_met},
          {"baseline_r_test", s.baseline_r_test},
          {"tolerance", s.tolerance},
          {"vif_crossing_k", opt_json(s.vif_crossing_k)}};
}

}  // namespace

nlohmann::ordered_json to_json(const ClusterSweepReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchema;
  j["kind"] = "cluster_sweep";
  j["dendrogram"] = cluster::to_json(r.dendrogram);
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json rj;
    rj["k"] = row.k;
    rj["failed"] = row.failed;
    if (row.failed) rj["error"] = row.error;
    rj["max_vif"] = number(row.max_vif);
    auto clusters = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < row.assignment.size(); ++c) {
      nlohmann::ordered_json cj;
      cj["name"] = row.assignment.names[c];
      cj["members"] = leaf_names(r.dendrogram, row.assignment.members[c]);
      if (c < row.vifs.size()) cj["vif"] = number(row.vifs[c]);
      clusters.push_back(std::move(cj));
    }
    rj["clusters"] = clusters;
    if (!row.failed) rj["evaluation"] = to_json(row.evaluation);
    rows.push_back(std::move(rj));
  }
  j["rows"] = rows;
  if (r.selection) {
    j["selection"] = selection_json(*r.selection);
  } else {
    j["selection"] = nullptr;
    j["selection_error"] = r.selection_error;
  }
  return j;
}

CharacterizationReport characterize(const features::FeatureMatrix& fm, std::size_t k, const ModelConfig& model) {
  const auto dendro = cluster::build_dendrogram(stats::correlation(fm.values, fm.names));
  const auto assignment = cluster::cut(dendro, k);
  const auto rep = cluster::represent_clusters(fm.values, assignment);
  const auto v = representative_vif(rep.values, rep.names);

  CharacterizationReport out;
  out.k = k;
  out.evaluation = evaluate(rep.values, fm.labels, fm.speaker_ids, model);
  out.model = erf::fit(rep.values, fm.labels, out.evaluation.hp, model.seed, rep.names, model.threads);
  const auto imp = erf::feature_importance(out.model);
  for (std::size_t c = 0; c < assignment.size(); ++c) {
    ClusterWeight w;
    w.name = assignment.names[c];
    w.members = leaf_names(dendro, assignment.members[c]);
    w.vif = v.values(static_cast<Eigen::Index>(c));
    w.importance = imp(static_cast<Eigen::Index>(c));
    if (rep.components[c]) w.explained_variance = rep.components[c]->explained_variance;
    out.clusters.push_back(std::move(w));
  }
  return out;
}

nlohmann::ordered_json to_json(const CharacterizationReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchema;
  j["kind"] = "characterization";
  j["sex"] = r.sex;
  j["duration"] = r.duration;
  j["k"] = r.k;
  j["k_from_sweep"] = r.k_from_sweep;
  if (r.selection) j["selection"] = selection_json(*r.selection);

  std::vector<std::size_t> order(r.clusters.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r.clusters[a].importance > r.clusters[b].importance; });
  std::vector<std::size_t> rank(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i + 1;

  auto clusters = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.clusters.size(); ++c) {
    const auto& w = r.clusters[c];
    nlohmann::ordered_json cj;
    cj["name"] = w.name;
    cj["members"] = w.members;
    cj["vif"] = number(w.vif);
    cj["importance"] = w.importance;
    cj["rank"] = rank[c];
    if (w.explained_variance) cj["explained_variance"] = *w.explained_variance;
    clusters.push_back(std::move(cj));
  }
  j["clusters"] = clusters;
  j["evaluation"] = to_json(r.evaluation);
  j["model_fingerprint"] = r.model.fingerprint;
  return j;
}

}  // namespace voxtrait::pipeline
