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

#include "voxtrait/synth.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "voxtrait/error.hpp"

namespace voxtrait::synth {

namespace {

constexpr double kPi = std::numbers::pi;

// Box-Muller over mt19937_64 so the stream does not depend on the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal() {
    if (spare_) {
      spare_ = false;
      return saved_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    saved_ = r * std::sin(2.0 * kPi * u2);
    spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }
  double between(double a, double b) { return a + (b - a) * uniform(); }

 private:
  std::mt19937_64 engine_;
  bool spare_ = false;
  double saved_ = 0.0;
};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Adds a band-limited unit impulse at fractional sample position t.
void add_impulse(std::vector<double>& x, double t, double amp) {
  constexpr int half = 8;
  constexpr double cutoff = 0.9;
  const auto centre = static_cast<long>(std::floor(t));
  for (long i = centre - half + 1; i <= centre + half; ++i) {
    if (i < 0 || i >= static_cast<long>(x.size())) continue;
    const double d = static_cast<double>(i) - t;
    const double arg = kPi * cutoff * d;
    const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
    const double w = 0.5 + 0.5 * std::cos(kPi * d / half);
    x[static_cast<std::size_t>(i)] += amp * cutoff * sinc * w;
  }
}

struct Resonator {
  double y1 = 0.0, y2 = 0.0;
  double process(double v, double a1, double a2, double gain) {
    const double y = gain * v + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

std::string speaker_name(audio::Sex sex, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%03zu", sex == audio::Sex::male ? 'm' : 'f', i + 1);
  return buf;
}

}  // namespace

SexProfile default_profile(audio::Sex sex) {
  if (sex == audio::Sex::male) return {120.0, 0.15, 17.0, 0.9, 0.08};
  return {210.0, 0.13, 14.5, 0.8, 0.10};
}

std::array<double, 4> tube_formants(double tube_cm, double speed_of_sound) {
  std::array<double, 4> f{};
  for (std::size_t i = 0; i < 4; ++i) f[i] = (2.0 * static_cast<double>(i) + 1.0) * speed_of_sound / (4.0 * tube_cm);
  return f;
}

namespace {

SexProfile profile_from_json(const nlohmann::json& j, SexProfile p) {
  p.f0_hz = j.value("f0_hz", p.f0_hz);
  p.f0_spread = j.value("f0_spread", p.f0_spread);
  p.tube_cm = j.value("tube_cm", p.tube_cm);
  p.tube_sd_cm = j.value("tube_sd_cm", p.tube_sd_cm);
  p.intonation = j.value("intonation", p.intonation);
  return p;
}

nlohmann::ordered_json profile_json(const SexProfile& p) {
  return {{"f0_hz", p.f0_hz}, {"f0_spread", p.f0_spread}, {"tube_cm", p.tube_cm}, {"tube_sd_cm", p.tube_sd_cm},
          {"intonation", p.intonation}};
}

}  // namespace

CorpusSpec spec_from_json(const nlohmann::json& j) {
  CorpusSpec s;
  try {
    s.sample_rate = j.value("sample_rate", s.sample_rate);
    s.speakers_per_sex = j.value("speakers_per_sex", s.speakers_per_sex);
    if (j.contains("sexes")) {
      s.sexes.clear();
      for (const auto& x : j.at("sexes")) s.sexes.push_back(audio::parse_sex(x.get<std::string>()));
    }
    s.recordings_per_speaker = j.value("recordings_per_speaker", s.recordings_per_speaker);
    s.recording_seconds = j.value("recording_seconds", s.recording_seconds);
    s.raters = j.value("raters", s.raters);
    s.rater_noise = j.value("rater_noise", s.rater_noise);
    s.sentence_columns = j.value("sentence_columns", s.sentence_columns);
    if (j.contains("rating")) {
      const auto& r = j.at("rating");
      s.weights.f0 = r.value("f0", s.weights.f0);
      s.weights.tube = r.value("tube", s.weights.tube);
      s.weights.perturbation = r.value("perturbation", s.weights.perturbation);
      s.weights.constant = r.value("constant", s.weights.constant);
    }
    if (j.contains("male")) s.male = profile_from_json(j.at("male"), s.male);
    if (j.contains("female")) s.female = profile_from_json(j.at("female"), s.female);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("corpus spec: ") + e.what());
  }
  if (s.sample_rate < 8000) throw InvalidArgument("corpus spec: sample_rate must be at least 8000");
  if (s.speakers_per_sex < 1 || s.recordings_per_speaker < 1 || s.recording_seconds <= 1.0) {
    throw InvalidArgument("corpus spec: need speakers, recordings and more than one second of audio");
  }
  if (s.raters < 1) throw InvalidArgument("corpus spec: need at least one rater");
  return s;
}

nlohmann::ordered_json to_json(const CorpusSpec& s) {
  nlohmann::ordered_json j;
  j["sample_rate"] = s.sample_rate;
  j["speakers_per_sex"] = s.speakers_per_sex;
  auto sexes = nlohmann::ordered_json::array();
  for (auto x : s.sexes) sexes.push_back(audio::to_string(x));
  j["sexes"] = sexes;
  j["recordings_per_speaker"] = s.recordings_per_speaker;
  j["recording_seconds"] = s.recording_seconds;
  j["raters"] = s.raters;
  j["rater_noise"] = s.rater_noise;
  j["sentence_columns"] = s.sentence_columns;
  j["rating"] = {{"f0", s.weights.f0},
                 {"tube", s.weights.tube},
                 {"perturbation", s.weights.perturbation},
                 {"constant", s.weights.constant}};
  j["male"] = profile_json(s.male);
  j["female"] = profile_json(s.female);
  return j;
}

VoiceParameters voice_for(const SpeakerLatents& s, const CorpusSpec& spec) {
  const auto& p = s.sex == audio::Sex::male ? spec.male : spec.female;
  VoiceParameters v;
  v.f0_hz = p.f0_hz * std::exp(p.f0_spread * s.f0);
  v.intonation = p.intonation * std::exp(0.4 * s.variability);
  v.tube_cm = p.tube_cm + p.tube_sd_cm * s.tube;
  v.jitter = 0.006 * std::exp(0.45 * s.jitter);
  v.shimmer = 0.05 * std::exp(0.45 * s.shimmer);
  v.noise = 0.06 * std::exp(0.6 * s.breathiness);
  v.formant_offset = s.formant_dev;
  return v;
}

Synthesis synthesize(const VoiceParameters& voice, double seconds, int sample_rate, std::uint64_t seed) {
  Rng rng(seed);
  const double fs = sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * fs));
  Synthesis out;
  std::vector<double> source(n, 0.0), noise(n, 0.0);

  // Phrase layout: short lead-in, then voiced stretches separated by pauses.
  double t = rng.between(0.15, 0.3);
  while (t < seconds - 0.6) {
    const double len = std::min(rng.between(1.8, 3.2), seconds - 0.2 - t);
    out.phrases.emplace_back(t, t + len);
    t += len + rng.between(0.15, 0.35);
  }

  const double ph1 = rng.between(0.0, 2.0 * kPi), ph2 = rng.between(0.0, 2.0 * kPi);
  auto f0_at = [&](double time) {
    const double mod = 0.6 * std::sin(2.0 * kPi * 0.31 * time + ph1) + 0.4 * std::sin(2.0 * kPi * 0.83 * time + ph2);
    return voice.f0_hz * (1.0 + voice.intonation * mod);
  };

  double voiced_energy = 0.0;
  std::size_t voiced_samples = 0;
  for (const auto& [start, end] : out.phrases) {
    double tp = start;
    while (tp < end) {
      const double amp = std::exp(voice.shimmer * rng.normal());
      add_impulse(source, tp * fs, amp);
      const double period = 1.0 / f0_at(tp);
      tp += period * (1.0 + voice.jitter * rng.normal());
    }
    const auto a = static_cast<std::size_t>(start * fs), b = std::min(n, static_cast<std::size_t>(end * fs));
    for (std::size_t i = a; i < b; ++i) {
      voiced_energy += source[i] * source[i];
      noise[i] = rng.normal();
    }
    voiced_samples += b - a;
  }
  const double source_rms = voiced_samples ? std::sqrt(voiced_energy / static_cast<double>(voiced_samples)) : 0.0;
  for (std::size_t i = 0; i < n; ++i) source[i] += voice.noise * source_rms * noise[i];

  // Gentle glottal roll-off, then a cascade of slowly moving resonators.
  double prev = 0.0;
  for (auto& v : source) {
    prev = v + 0.5 * prev;
    v = prev;
  }
  const auto base = tube_formants(voice.tube_cm);
  const std::array<double, 4> bandwidth{80.0, 90.0, 120.0, 150.0};
  std::array<double, 4> phase{};
  for (auto& p : phase) p = rng.between(0.0, 2.0 * kPi);
  std::array<Resonator, 4> res{};
  constexpr std::size_t block = 80;
  std::vector<double> y(n, 0.0);
  for (std::size_t b0 = 0; b0 < n; b0 += block) {
    const double time = static_cast<double>(b0) / fs;
    std::array<double, 4> a1{}, a2{}, gain{};
    for (std::size_t k = 0; k < 4; ++k) {
      const double f = base[k] * (1.0 + voice.formant_offset[k]) * (1.0 + 0.025 * std::sin(2.0 * kPi * 0.6 * time + phase[k]));
      const double r = std::exp(-kPi * bandwidth[k] / fs);
      a1[k] = 2.0 * r * std::cos(2.0 * kPi * f / fs);
      a2[k] = -r * r;
      gain[k] = 1.0 - a1[k] - a2[k];
    }
    for (std::size_t i = b0; i < std::min(n, b0 + block); ++i) {
      double v = source[i];
      for (std::size_t k = 0; k < 4; ++k) v = res[k].process(v, a1[k], a2[k], gain[k]);
      y[i] = v;
    }
  }

  double peak = 0.0;
  for (double v : y) peak = std::max(peak, std::abs(v));
  const double scale = peak > 0.0 ? 0.7 / peak : 0.0;
  for (auto& v : y) v = v * scale + 1e-4 * rng.normal();
  out.samples = std::move(y);
  return out;
}

Corpus generate_corpus(const CorpusSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "wav");
  Corpus corpus;
  Rng latent_rng(mix(seed, 1));
  for (auto sex : spec.sexes) {
    for (std::size_t i = 0; i < spec.speakers_per_sex; ++i) {
      SpeakerLatents s;
      s.speaker_id = speaker_name(sex, i);
      s.sex = sex;
      s.f0 = latent_rng.normal();
      s.variability = latent_rng.normal();
      s.tube = latent_rng.normal();
      s.jitter = latent_rng.normal();
      s.shimmer = latent_rng.normal();
      s.breathiness = latent_rng.normal();
      for (auto& d : s.formant_dev) d = 0.02 * latent_rng.normal();
      corpus.speakers.push_back(s);
    }
  }

  for (std::size_t si = 0; si < corpus.speakers.size(); ++si) {
    const auto& s = corpus.speakers[si];
    const auto voice = voice_for(s, spec);
    for (std::size_t r = 0; r < spec.recordings_per_speaker; ++r) {
      const auto syn = synthesize(voice, spec.recording_seconds, spec.sample_rate, mix(mix(seed, 2 + si), r));
      const std::string rel = "wav/" + s.speaker_id + "_" + std::to_string(r + 1) + ".wav";
      audio::write_wav(out_dir / rel, syn.samples, spec.sample_rate);
      audio::ManifestEntry e{s.speaker_id, s.sex, rel, std::nullopt, std::nullopt};
      if (spec.sentence_columns && !syn.phrases.empty()) {
        e.sentence_start = syn.phrases.front().first;
        e.sentence_end = syn.phrases.front().second;
      }
      corpus.manifest.push_back(e);
    }
  }

  // Raters are nested in sex, each with a personal scale, gain and offset.
  const std::array<double, 3> scales{7.0, 10.0, 100.0};
  Rng rating_rng(mix(seed, 3));
  for (auto sex : spec.sexes) {
    for (std::size_t r = 0; r < spec.raters; ++r) {
      const std::string rater = std::string(sex == audio::Sex::male ? "rm" : "rf") + std::to_string(r + 1);
      const double scale_max = scales[r % scales.size()];
      const double gain = rating_rng.between(0.7, 1.3), offset = rating_rng.between(-0.5, 0.5);
      for (const auto& s : corpus.speakers) {
        if (s.sex != sex) continue;
        // Masculinity for men, femininity for women: both rise as the voice
        // moves toward its own sex's typical direction.
        const double dir = sex == audio::Sex::male ? 1.0 : -1.0;
        const double score = dir * (-spec.weights.f0 * s.f0 + spec.weights.tube * s.tube) +
                             spec.weights.perturbation * (s.jitter + s.shimmer) / std::sqrt(2.0);
        double rating = 0.5 * (1.0 + scale_max);
        if (!spec.weights.constant) {
          const double z = gain * (score + spec.rater_noise * rating_rng.normal()) + offset;
          rating = std::clamp(rating + z * (scale_max - 1.0) / 6.0, 1.0, scale_max);
        }
        corpus.ratings.push_back({rater, s.speaker_id, std::round(rating * 100.0) / 100.0, scale_max});
      }
    }
  }

  audio::write_manifest(out_dir / "manifest.csv", corpus.manifest);
  for (auto sex : spec.sexes) {
    std::vector<audio::ManifestEntry> part;
    for (const auto& e : corpus.manifest)
      if (e.sex == sex) part.push_back(e);
    audio::write_manifest(out_dir / ("manifest_" + audio::to_string(sex) + ".csv"), part);
  }
  audio::write_ratings(out_dir / "ratings.csv", corpus.ratings);

  std::ofstream lat(out_dir / "latents.csv");
  lat << "speaker_id,sex,f0,variability,tube,jitter,shimmer,breathiness\n";
  lat.precision(17);
  for (const auto& s : corpus.speakers) {
    lat << s.speaker_id << ',' << audio::to_string(s.sex) << ',' << s.f0 << ',' << s.variability << ',' << s.tube << ','
        << s.jitter << ',' << s.shimmer << ',' << s.breathiness << '\n';
  }
  std::ofstream spec_out(out_dir / "spec.json");
  spec_out << to_json(spec).dump(2) << '\n';
  spdlog::info("synthesized {} speakers, {} recordings", corpus.speakers.size(), corpus.manifest.size());
  return corpus;
}

}  // namespace voxtrait::synth
