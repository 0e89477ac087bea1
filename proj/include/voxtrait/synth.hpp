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

// Source-filter synthetic corpus: per-speaker latent factors drive pitch,
// tube length and voice-quality parameters; ratings are a noisy linear
// function of the latents.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "voxtrait/audio_io.hpp"

namespace voxtrait::synth {

struct SexProfile {
  double f0_hz = 120.0;           // population median F0
  double f0_spread = 0.15;        // log-SD of speaker F0 across speakers
  double tube_cm = 17.0;
  double tube_sd_cm = 0.9;
  double intonation = 0.08;       // mean relative F0 modulation depth
};

SexProfile default_profile(audio::Sex sex);

struct RatingWeights {
  double f0 = 0.8;     // on the negated F0 latent (low voice, high masculinity)
  double tube = 0.4;
  double perturbation = 0.0;
  bool constant = false;  // every rater gives the scale midpoint
};

struct CorpusSpec {
  int sample_rate = 16000;
  std::size_t speakers_per_sex = 40;
  std::vector<audio::Sex> sexes{audio::Sex::male, audio::Sex::female};
  std::size_t recordings_per_speaker = 2;
  double recording_seconds = 10.5;
  std::size_t raters = 5;
  double rater_noise = 0.3;
  RatingWeights weights;
  SexProfile male = default_profile(audio::Sex::male);
  SexProfile female = default_profile(audio::Sex::female);
  bool sentence_columns = true;  // mark a rated sentence span in the manifest
};

/// Independent latent factors per speaker: F0 level, F0 variability,
/// tube length, jitter, shimmer, breathiness.
inline constexpr std::size_t kFactorCount = 6;

CorpusSpec spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const CorpusSpec& spec);

struct SpeakerLatents {
  std::string speaker_id;
  audio::Sex sex = audio::Sex::male;
  double f0 = 0, variability = 0, tube = 0, jitter = 0, shimmer = 0, breathiness = 0;  // standard normal
  std::array<double, 4> formant_dev{};  // relative, a few percent
};

struct VoiceParameters {
  double f0_hz = 0;
  double intonation = 0;   // relative modulation depth
  double tube_cm = 0;
  double jitter = 0;       // relative period SD
  double shimmer = 0;      // relative amplitude SD
  double noise = 0;        // aspiration level relative to voicing
  std::array<double, 4> formant_offset{};  // small per-speaker deviations from the uniform tube
};

VoiceParameters voice_for(const SpeakerLatents& s, const CorpusSpec& spec);

/// Uniform-tube resonances (2i-1) c / (4 L).
std::array<double, 4> tube_formants(double tube_cm, double speed_of_sound = 35000.0);

struct Synthesis {
  std::vector<double> samples;
  std::vector<std::pair<double, double>> phrases;  // voiced stretches, seconds
};

Synthesis synthesize(const VoiceParameters& voice, double seconds, int sample_rate, std::uint64_t seed);

struct Corpus {
  std::vector<SpeakerLatents> speakers;
  std::vector<audio::ManifestEntry> manifest;
  std::vector<audio::RatingRow> ratings;
};

/// Writes `wav/*.wav`, `manifest.csv`, `manifest_<sex>.csv`, `ratings.csv`
/// and `latents.csv` under `out_dir`. Output is a pure function of
/// (spec, seed).
Corpus generate_corpus(const CorpusSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace voxtrait::synth
