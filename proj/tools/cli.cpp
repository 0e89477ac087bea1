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

#include "cli.hpp"

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "voxtrait/error.hpp"
#include "voxtrait/pipeline.hpp"
#include "voxtrait/svg.hpp"
#include "voxtrait/synth.hpp"

namespace voxtrait::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::uint64_t seed = 42;
  unsigned threads = 0;
  std::string log_level = "warn";

  std::optional<double> pitch_floor, pitch_ceiling;
  double voicing_threshold = 0.45;
  int lpc_order = 10;
  double formant_rate = 0.0;
  double speed_of_sound = 35000.0;

  std::size_t trees = 1000;
  std::string split_mode = "per-speaker";
  std::size_t folds = 4;
  std::string grid = "full";
  std::size_t grid_folds = 10;
  std::string grid_max_depth, grid_min_samples_leaf, grid_min_samples_split, grid_max_leaf_nodes;
  std::optional<std::size_t> max_features;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::optional<std::size_t> parse_optional_count(const std::string& s) {
  if (s == "none" || s == "None" || s == "null") return std::nullopt;
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) throw InvalidArgument("expected a count or 'none', got '" + s + "'");
  return v;
}

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& s : split_list(text)) {
    auto v = parse_optional_count(s);
    if (!v) throw InvalidArgument("'none' is not allowed here");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::optional<std::size_t>> parse_optional_counts(const std::string& text) {
  std::vector<std::optional<std::size_t>> out;
  for (const auto& s : split_list(text)) out.push_back(parse_optional_count(s));
  return out;
}

features::ExtractionConfig extraction_config(const Options& o) {
  features::ExtractionConfig c;
  c.pitch_floor = o.pitch_floor;
  c.pitch_ceiling = o.pitch_ceiling;
  c.voicing_threshold = o.voicing_threshold;
  c.formant.lpc_order = o.lpc_order;
  c.formant.analysis_rate = o.formant_rate;
  c.formant.speed_of_sound = o.speed_of_sound;
  return c;
}

pipeline::ModelConfig model_config(const Options& o) {
  pipeline::ModelConfig c;
  c.base.n_estimators = o.trees;
  c.base.max_features = o.max_features;
  c.split_mode = erf::parse_split_mode(o.split_mode);
  c.folds = o.folds;
  c.grid_folds = o.grid_folds;
  c.seed = o.seed;
  c.threads = o.threads;
  if (o.grid == "none") {
    c.search = false;
  } else if (o.grid == "anchor") {
    c.grid.max_depth = {10};
    c.grid.min_samples_leaf = {2};
    c.grid.min_samples_split = {2};
    c.grid.max_leaf_nodes = {300};
  } else if (o.grid != "full") {
    throw InvalidArgument("--grid must be full, anchor or none");
  }
  if (!o.grid_max_depth.empty()) c.grid.max_depth = parse_optional_counts(o.grid_max_depth);
  if (!o.grid_min_samples_leaf.empty()) c.grid.min_samples_leaf = parse_counts(o.grid_min_samples_leaf);
  if (!o.grid_min_samples_split.empty()) c.grid.min_samples_split = parse_counts(o.grid_min_samples_split);
  if (!o.grid_max_leaf_nodes.empty()) c.grid.max_leaf_nodes = parse_optional_counts(o.grid_max_leaf_nodes);
  if (!c.search) {
    // The anchor cell doubles as the fixed configuration.
    c.base.max_depth = 10;
    c.base.min_samples_leaf = 2;
    c.base.min_samples_split = 2;
    c.base.max_leaf_nodes = 300;
  }
  return c;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::ordered_json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

struct LoadedFeatures {
  features::FeatureMatrix matrix;
  std::optional<features::Sidecar> sidecar;
};

LoadedFeatures load_features(const fs::path& path) {
  LoadedFeatures f;
  f.matrix = features::read_feature_csv(path);
  const auto side = features::sidecar_path(path);
  if (fs::exists(side)) {
    f.sidecar = features::read_sidecar(side);
    f.matrix.scale = f.sidecar->scale;
  }
  if (f.matrix.rows() < 2) throw InvalidArgument(path.string() + ": need at least two feature rows");
  return f;
}

nlohmann::ordered_json input_json(const LoadedFeatures& f) {
  nlohmann::ordered_json j;
  j["rows"] = f.matrix.rows();
  std::set<std::string> speakers(f.matrix.speaker_ids.begin(), f.matrix.speaker_ids.end());
  j["speakers"] = speakers.size();
  j["measures"] = f.matrix.names;
  j["schema_fingerprint"] = erf::schema_fingerprint(f.matrix.names);
  if (f.sidecar) {
    j["sex"] = f.sidecar->sex;
    j["duration_s"] = f.sidecar->duration_s;
  }
  return j;
}

void print_metrics(const erf::CvMetrics& m) {
  std::printf("  R2   train %.4f  test %.4f\n", m.r2_train, m.r2_test);
  std::printf("  MSE  train %.4f  test %.4f\n", m.mse_train, m.mse_test);
  std::printf("  r    train %.4f  test %.4f\n", m.r_train, m.r_test);
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  auto out = p;
  out.replace_filename(p.stem().string() + "_" + suffix + p.extension().string());
  return out;
}

int cmd_extract(const Options& o, const std::string& manifest_path, const std::string& ratings_path,
                const std::string& duration_text, const std::string& out, const std::string& sex_text) {
  const auto manifest = audio::read_manifest(manifest_path);
  const auto labels = audio::normalize_ratings(audio::read_ratings(ratings_path));
  const auto duration = pipeline::parse_duration(duration_text);
  const auto config = extraction_config(o);

  std::vector<audio::Sex> sexes;
  if (!sex_text.empty()) {
    sexes.push_back(audio::parse_sex(sex_text));
  } else {
    for (auto s : {audio::Sex::male, audio::Sex::female})
      if (std::any_of(manifest.begin(), manifest.end(), [&](const auto& e) { return e.sex == s; })) sexes.push_back(s);
  }
  if (sexes.empty()) throw InvalidArgument(manifest_path + ": manifest is empty");
  for (auto sex : sexes) {
    const fs::path path = sexes.size() == 1 ? fs::path(out) : with_suffix(out, audio::to_string(sex));
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const auto ex = pipeline::extract(manifest, labels, sex, duration, config);
    features::write_feature_csv(path, ex.matrix);
    features::write_sidecar(features::sidecar_path(path), ex.sidecar);
    std::printf("%s: %lld rows (%zu segments, %zu excluded) -> %s\n", audio::to_string(sex).c_str(),
                static_cast<long long>(ex.matrix.rows()), ex.segments, ex.sidecar.excluded_segments,
                path.string().c_str());
  }
  return 0;
}

int cmd_rate(const Options& o, const std::string& features_path, const std::string& out,
             const std::string& model_out) {
  const auto f = load_features(features_path);
  const auto config = model_config(o);
  const auto e = pipeline::evaluate(f.matrix.values, f.matrix.labels, f.matrix.speaker_ids, config);
  std::printf("%s, %zu folds, %s\n", std::string(erf::to_string(e.split_mode)).c_str(), e.folds,
              erf::describe(e.hp).c_str());
  print_metrics(e.metrics);
  if (!out.empty()) {
    nlohmann::ordered_json j;
    j["schema_version"] = pipeline::kReportSchema;
    j["kind"] = "rating";
    j["input"] = input_json(f);
    j["config"] = pipeline::to_json(config);
    j["evaluation"] = pipeline::to_json(e);
    write_json(out, j);
  }
  if (!model_out.empty()) {
    const auto forest = erf::fit(f.matrix.values, f.matrix.labels, e.hp, config.seed, f.matrix.names, config.threads);
    erf::save_model(model_out, forest);
  }
  return 0;
}

std::vector<double> column(const pipeline::ClusterSweepReport& r, double (*get)(const pipeline::ClusterRow&)) {
  std::vector<double> out;
  for (const auto& row : r.rows) out.push_back(row.failed ? std::numeric_limits<double>::quiet_NaN() : get(row));
  return out;
}

int cmd_cluster_sweep(const Options& o, const std::string& features_path, const std::string& out,
                      const std::string& dendro_svg, const std::string& vif_svg, const std::string& metrics_svg,
                      std::size_t k_min, std::optional<std::size_t> k_max) {
  const auto f = load_features(features_path);
  const auto config = model_config(o);
  const auto report = pipeline::cluster_sweep(f.matrix, config, k_min, k_max);
  auto j = pipeline::to_json(report);
  j["input"] = input_json(f);
  j["config"] = pipeline::to_json(config);
  write_json(out, j);

  std::printf("  k  max_vif   r_test\n");
  for (const auto& row : report.rows) {
    if (row.failed) {
      std::printf("%3zu  failed: %s\n", row.k, row.error.c_str());
    } else {
      std::printf("%3zu %8.3g %8.4f\n", row.k, row.max_vif, row.evaluation.metrics.r_test);
    }
  }
  if (report.selection) {
    std::printf("optimal k = %zu%s\n", report.selection->k,
                report.selection->performance_met ? "" : " (performance criterion not met)");
  } else {
    std::printf("no optimal k: %s\n", report.selection_error.c_str());
  }

  std::optional<std::size_t> cut;
  if (report.selection) cut = report.selection->k;
  if (!dendro_svg.empty()) svg::write(dendro_svg, svg::dendrogram(report.dendrogram, cut));
  std::vector<double> ks;
  for (const auto& row : report.rows) ks.push_back(static_cast<double>(row.k));
  if (!vif_svg.empty()) {
    auto vifs = column(report, [](const pipeline::ClusterRow& r) { return std::log10(r.max_vif); });
    svg::write(vif_svg, svg::line_chart("log10 max VIF", "clusters", ks, {{"log10 max VIF", vifs}}, std::log10(5.0)));
  }
  if (!metrics_svg.empty()) {
    svg::write(metrics_svg,
               svg::line_chart("cross-validated metrics", "clusters", ks,
                               {{"r_test", column(report, [](const pipeline::ClusterRow& r) { return r.evaluation.metrics.r_test; })},
                                {"r_train", column(report, [](const pipeline::ClusterRow& r) { return r.evaluation.metrics.r_train; })},
                                {"R2_test", column(report, [](const pipeline::ClusterRow& r) { return r.evaluation.metrics.r2_test; })},
                                {"R2_train", column(report, [](const pipeline::ClusterRow& r) { return r.evaluation.metrics.r2_train; })}}));
  }
  return 0;
}

int cmd_characterize(const Options& o, const std::string& features_path, const std::string& k_text,
                     const std::string& sweep_path, const std::string& out, const std::string& pie_svg,
                     const std::string& model_out) {
  const auto f = load_features(features_path);
  const auto config = model_config(o);
  std::size_t k = 0;
  std::optional<pipeline::Selection> selection;
  if (k_text == "auto") {
    if (!sweep_path.empty()) {
      const auto j = read_json(sweep_path);
      if (!j.contains("selection") || j.at("selection").is_null()) {
        throw InvalidArgument(sweep_path + ": sweep has no optimal k");
      }
      if (j.contains("input") && j.at("input").value("schema_fingerprint", "") != erf::schema_fingerprint(f.matrix.names)) {
        throw InvalidArgument(sweep_path + ": sweep was run on a different feature schema");
      }
      const auto& s = j.at("selection");
      pipeline::Selection sel;
      sel.k = s.at("k").get<std::size_t>();
      sel.performance_met = s.at("performance_met").get<bool>();
      sel.baseline_r_test = s.at("baseline_r_test").get<double>();
      sel.tolerance = s.at("tolerance").get<double>();
      if (!s.at("vif_crossing_k").is_null()) sel.vif_crossing_k = s.at("vif_crossing_k").get<std::size_t>();
      selection = sel;
    } else {
      const auto report = pipeline::cluster_sweep(f.matrix, config);
      if (!report.selection) throw InvalidArgument(report.selection_error);
      selection = report.selection;
    }
    k = selection->k;
  } else {
    k = static_cast<std::size_t>(*parse_optional_count(k_text));
  }

  auto report = pipeline::characterize(f.matrix, k, config);
  report.k_from_sweep = selection.has_value();
  report.selection = selection;
  if (f.sidecar) {
    report.sex = f.sidecar->sex;
    report.duration = pipeline::Duration{f.sidecar->duration_s > 0 ? std::optional<double>(f.sidecar->duration_s)
                                                                    : std::nullopt}
                          .label();
  }
  auto j = pipeline::to_json(report);
  j["input"] = input_json(f);
  j["config"] = pipeline::to_json(config);
  write_json(out, j);

  std::printf("k = %zu\n", k);
  for (const auto& c : report.clusters) std::printf("  %6.2f%%  %s\n", 100.0 * c.importance, c.name.c_str());
  print_metrics(report.evaluation.metrics);
  if (!pie_svg.empty()) {
    std::vector<std::string> names;
    std::vector<double> weights;
    for (const auto& c : report.clusters) {
      names.push_back(c.name);
      weights.push_back(c.importance);
    }
    svg::write(pie_svg, svg::pie("cluster importance", names, weights));
  }
  if (!model_out.empty()) erf::save_model(model_out, report.model);
  return 0;
}

int cmd_synth(const Options& o, const std::string& spec_path, const std::string& out) {
  synth::CorpusSpec spec;
  if (!spec_path.empty()) spec = synth::spec_from_json(read_json(spec_path));
  const auto corpus = synth::generate_corpus(spec, o.seed, out);
  std::printf("%zu speakers, %zu recordings, %zu ratings -> %s\n", corpus.speakers.size(), corpus.manifest.size(),
              corpus.ratings.size(), out.c_str());
  return 0;
}

int cmd_duration_sweep(const Options& o, const std::string& manifest_path, const std::string& ratings_path,
                       const std::string& sex_text, const std::string& durations_text, const std::string& out) {
  const auto manifest = audio::read_manifest(manifest_path);
  const auto labels = audio::normalize_ratings(audio::read_ratings(ratings_path));
  std::vector<pipeline::Duration> durations;
  for (const auto& d : split_list(durations_text)) durations.push_back(pipeline::parse_duration(d));
  const auto config = model_config(o);
  const auto report =
      pipeline::duration_sweep(manifest, labels, audio::parse_sex(sex_text), durations, extraction_config(o), config);
  auto j = pipeline::to_json(report);
  j["config"] = pipeline::to_json(config);
  if (!out.empty()) write_json(out, j);
  for (const auto& row : report.rows) {
    if (row.skipped) {
      std::printf("%-9s skipped (%s)\n", row.label.c_str(), row.note.c_str());
    } else {
      const auto& m = row.evaluation.metrics;
      std::printf("%-9s n=%-5zu r_test %.4f  R2_test %.4f  MSE_test %.4f\n", row.label.c_str(), row.samples, m.r_test,
                  m.r2_test, m.mse_test);
    }
  }
  if (report.optimal) std::printf("optimal duration: %s\n", report.rows[*report.optimal].label.c_str());
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"voxtrait: acoustic measures, perceived-rating regression and cluster importance"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI/TOML file of key = value settings; command-line flags override it");

  Options o;
  app.add_option("--seed", o.seed, "Master random seed")->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads for tree fitting (0 = all cores)")->capture_default_str();
  app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error or off")->capture_default_str();
  app.add_option("--pitch-floor", o.pitch_floor, "Pitch floor in Hz (default 75 male, 100 female)");
  app.add_option("--pitch-ceiling", o.pitch_ceiling, "Pitch ceiling in Hz (default 300 male, 500 female)");
  app.add_option("--voicing-threshold", o.voicing_threshold, "Autocorrelation voicing threshold")->capture_default_str();
  app.add_option("--lpc-order", o.lpc_order, "LPC order for formant analysis")->capture_default_str();
  app.add_option("--formant-rate", o.formant_rate, "Formant analysis rate in Hz (0 = 10 kHz male, 11 kHz female)")
      ->capture_default_str();
  app.add_option("--speed-of-sound", o.speed_of_sound, "Speed of sound in cm/s")->capture_default_str();
  app.add_option("--trees", o.trees, "Trees per forest")->capture_default_str();
  app.add_option("--max-features", o.max_features, "Candidate features per split (default all)");
  app.add_option("--split-mode", o.split_mode, "per-speaker, grouped or plain")->capture_default_str();
  app.add_option("--folds", o.folds, "Cross-validation folds")->capture_default_str();
  app.add_option("--grid", o.grid, "Hyperparameter grid: full, anchor or none")->capture_default_str();
  app.add_option("--grid-folds", o.grid_folds, "Folds used inside the grid search")->capture_default_str();
  app.add_option("--grid-max-depth", o.grid_max_depth, "Comma list, e.g. 5,10,20,none");
  app.add_option("--grid-min-samples-leaf", o.grid_min_samples_leaf, "Comma list");
  app.add_option("--grid-min-samples-split", o.grid_min_samples_split, "Comma list");
  app.add_option("--grid-max-leaf-nodes", o.grid_max_leaf_nodes, "Comma list, e.g. 100,300,none");

  std::string manifest, ratings, duration = "7", out, sex;
  auto* extract = app.add_subcommand("extract", "Segment recordings and write the normalized feature table");
  extract->add_option("--manifest", manifest, "speaker_id,sex,wav_path[,sentence_start,sentence_end]")->required();
  extract->add_option("--ratings", ratings, "rater_id,speaker_id,rating,scale_max")->required();
  extract->add_option("--duration", duration, "Segment length in seconds, or 'sentence'")->capture_default_str();
  extract->add_option("--sex", sex, "Only this sex class (default: each class present)");
  extract->add_option("--out", out, "Feature CSV (a .norm.json sidecar is written next to it)")->required();

  std::string features_path, model_out;
  auto* rate = app.add_subcommand("rate", "Grid-search and cross-validate the rating regressor");
  rate->add_option("--features", features_path, "Feature CSV")->required();
  rate->add_option("--out", out, "Report JSON");
  rate->add_option("--model-out", model_out, "Fit on all rows and save the model JSON");

  std::string dendro_svg, vif_svg, metrics_svg;
  std::size_t k_min = 1;
  std::optional<std::size_t> k_max;
  auto* sweep = app.add_subcommand("cluster-sweep", "Cluster the measures and evaluate every cluster count");
  sweep->add_option("--features", features_path, "Feature CSV")->required();
  sweep->add_option("--out", out, "Sweep report JSON")->required();
  sweep->add_option("--svg", dendro_svg, "Dendrogram SVG with the chosen cut");
  sweep->add_option("--vif-svg", vif_svg, "Max-VIF curve SVG");
  sweep->add_option("--metrics-svg", metrics_svg, "Metric curves SVG");
  sweep->add_option("--k-min", k_min, "Smallest cluster count")->capture_default_str();
  sweep->add_option("--k-max", k_max, "Largest cluster count (default: all measures)");

  std::string k_text = "auto", sweep_path, pie_svg;
  auto* charact = app.add_subcommand("characterize", "Weight the clusters of the measures by importance");
  charact->add_option("--features", features_path, "Feature CSV")->required();
  charact->add_option("--k", k_text, "Cluster count or 'auto'")->capture_default_str();
  charact->add_option("--sweep", sweep_path, "Reuse the selection of an earlier cluster-sweep report");
  charact->add_option("--out", out, "Report JSON")->required();
  charact->add_option("--pie-svg", pie_svg, "Importance pie chart SVG");
  charact->add_option("--model-out", model_out, "Save the fitted model JSON");

  std::string spec_path;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic rated corpus");
  synth_cmd->add_option("--spec", spec_path, "Corpus spec JSON (defaults when omitted)");
  synth_cmd->add_option("--out", out, "Output directory")->required();

  std::string durations = "1,2,5,7,10,sentence";
  auto* dsweep = app.add_subcommand("duration-sweep", "Evaluate the regressor across segment durations");
  dsweep->add_option("--manifest", manifest, "Manifest CSV")->required();
  dsweep->add_option("--ratings", ratings, "Ratings CSV")->required();
  dsweep->add_option("--sex", sex, "Sex class")->required();
  dsweep->add_option("--durations", durations, "Comma list of seconds and/or 'sentence'")->capture_default_str();
  dsweep->add_option("--out", out, "Report JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  spdlog::set_level(spdlog::level::from_str(o.log_level));
  try {
    if (*extract) return cmd_extract(o, manifest, ratings, duration, out, sex);
    if (*rate) return cmd_rate(o, features_path, out, model_out);
    if (*sweep) return cmd_cluster_sweep(o, features_path, out, dendro_svg, vif_svg, metrics_svg, k_min, k_max);
    if (*charact) return cmd_characterize(o, features_path, k_text, sweep_path, out, pie_svg, model_out);
    if (*synth_cmd) return cmd_synth(o, spec_path, out);
    if (*dsweep) return cmd_duration_sweep(o, manifest, ratings, sex, durations, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

}  // namespace voxtrait::cli
