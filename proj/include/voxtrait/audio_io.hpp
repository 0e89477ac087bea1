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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace voxtrait::audio {

enum class Sex { male, female };

std::string to_string(Sex sex);
Sex parse_sex(const std::string& text);

struct Recording {
  std::string speaker_id;
  Sex sex = Sex::male;
  std::vector<double> samples;  // mono, in [-1, 1]
  int sample_rate = 0;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

struct AudioSegment {
  std::string speaker_id;
  std::size_t segment_index = 0;
  std::vector<double> samples;
  int sample_rate = 0;
  double duration_s = 0.0;
};

/// Per-speaker label: mean of the rater-wise z-scored ratings.
using RatingLabels = std::map<std::string, double>;

/// Reads a RIFF/WAVE file. Accepts 16-bit PCM and 32-bit IEEE float, mono or
/// stereo (stereo is averaged). Throws ParseError on malformed chunks and
/// UnsupportedFormatError on anything else.
Recording load_wav(const std::filesystem::path& path);
Recording parse_wav(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");

/// Writes mono 16-bit PCM. Samples are clipped to [-1, 1] and quantized as
/// round(x * 32768), so anything read by load_wav round-trips exactly.
void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate);
std::vector<std::uint8_t> encode_wav_pcm16(std::span<const double> samples, int sample_rate);

/// ceil(seconds / L) evaluated on the sample grid.
std::size_t segment_count(std::size_t n_samples, int sample_rate, double segment_seconds);

/// Splits a recording into contiguous L-second chunks. The final chunk may be
/// shorter; if it is shorter than min_tail_seconds it is dropped.
std::vector<AudioSegment> segment(const Recording& rec, double segment_seconds,
                                  double min_tail_seconds = 0.5);

/// Sum over recordings of ceil(N_i / L); the expected sample count before
/// tail filtering.
std::size_t expected_sample_count(std::span<const Recording> recordings, double segment_seconds);

struct RatingRow {
  std::string rater_id;
  std::string speaker_id;
  double rating = 0.0;
  double scale_max = 0.0;
};

/// Z-scores every rater's ratings (population SD) and averages them per
/// speaker. Raters with fewer than two ratings or zero variance are dropped
/// with a warning.
RatingLabels normalize_ratings(std::span<const RatingRow> rows);

struct ManifestEntry {
  std::string speaker_id;
  Sex sex = Sex::male;
  std::filesystem::path wav_path;
  // Optional boundaries of the rated sentence within this recording.
  std::optional<double> sentence_start;
  std::optional<double> sentence_end;
};

/// `speaker_id,sex,wav_path[,sentence_start,sentence_end]`. Relative paths
/// are resolved against the manifest's directory. Mixed sexes for one
/// speaker are rejected.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

/// `rater_id,speaker_id,rating,scale_max`.
std::vector<RatingRow> read_ratings(const std::filesystem::path& path);
void write_ratings(const std::filesystem::path& path, std::span<const RatingRow> rows);

}  // namespace voxtrait::audio
