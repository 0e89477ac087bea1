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

#include "voxtrait/audio_io.hpp"

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "csv.hpp"
#include "voxtrait/error.hpp"

namespace voxtrait::audio {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

struct FormatChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

}  // namespace

std::string to_string(Sex sex) { return sex == Sex::male ? "male" : "female"; }

Sex parse_sex(const std::string& text) {
  std::string lower;
  std::transform(text.begin(), text.end(), std::back_inserter(lower),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "male" || lower == "m") return Sex::male;
  if (lower == "female" || lower == "f") return Sex::female;
  throw ParseError("unknown sex class '" + text + "' (expected male or female)");
}

Recording parse_wav(std::span<const std::uint8_t> bytes, const std::string& origin) {
  if (bytes.size() < 12) throw ParseError(origin + ": RIFF header truncated");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) throw ParseError(origin + ": missing RIFF chunk id");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) throw ParseError(origin + ": RIFF form type is not WAVE");

  std::optional<FormatChunk> fmt;
  std::optional<std::span<const std::uint8_t>> data;

  std::size_t pos = 12;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 8) throw ParseError(origin + ": truncated chunk header at offset " + std::to_string(pos));
    std::string id(reinterpret_cast<const char*>(bytes.data() + pos), 4);
    std::size_t size = read_u32(bytes.data() + pos + 4);
    pos += 8;
    if (size > bytes.size() - pos) {
      throw ParseError(origin + ": '" + id + "' chunk truncated (declares " + std::to_string(size) +
                       " bytes, " + std::to_string(bytes.size() - pos) + " available)");
    }
    const std::uint8_t* body = bytes.data() + pos;
    if (id == "fmt ") {
      if (size < 16) throw ParseError(origin + ": 'fmt ' chunk too short");
      FormatChunk f;
      f.format = read_u16(body);
      f.channels = read_u16(body + 2);
      f.sample_rate = read_u32(body + 4);
      f.block_align = read_u16(body + 12);
      f.bits = read_u16(body + 14);
      if (f.format == kFormatExtensible) {
        if (size < 40) throw ParseError(origin + ": 'fmt ' extensible chunk too short");
        // First two bytes of the sub-format GUID carry the actual format tag.
        f.format = read_u16(body + 24);
      }
      fmt = f;
    } else if (id == "data") {
      data = bytes.subspan(pos, size);
    }
    pos += size + (size & 1);
  }

  if (!fmt) throw ParseError(origin + ": missing 'fmt ' chunk");
  if (!data) throw ParseError(origin + ": missing 'data' chunk");
  if (fmt->channels != 1 && fmt->channels != 2) {
    throw UnsupportedFormatError(origin + ": " + std::to_string(fmt->channels) + " channels (only mono or stereo)");
  }
  const bool pcm16 = fmt->format == kFormatPcm && fmt->bits == 16;
  const bool float32 = fmt->format == kFormatFloat && fmt->bits == 32;
  if (!pcm16 && !float32) {
    throw UnsupportedFormatError(origin + ": format tag " + std::to_string(fmt->format) + " with " +
                                 std::to_string(fmt->bits) + " bits (only 16-bit PCM or 32-bit float)");
  }
  if (fmt->sample_rate == 0) throw ParseError(origin + ": 'fmt ' chunk declares zero sample rate");
  const std::size_t bytes_per_sample = fmt->bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
  if (fmt->block_align != frame_bytes) throw ParseError(origin + ": 'fmt ' block alignment inconsistent with channels and bit depth");

  const std::size_t frames = data->size() / frame_bytes;
  if (frames == 0) throw ParseError(origin + ": 'data' chunk holds no samples");
  if (data->size() % frame_bytes != 0) {
    spdlog::warn("{}: 'data' chunk ends with a partial frame; ignoring {} trailing bytes", origin,
                 data->size() % frame_bytes);
  }

  Recording rec;
  rec.sample_rate = static_cast<int>(fmt->sample_rate);
  rec.samples.resize(frames);
  const std::uint8_t* p = data->data();
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < fmt->channels; ++c) {
      const std::uint8_t* s = p + i * frame_bytes + c * bytes_per_sample;
      double v;
      if (pcm16) {
        v = static_cast<std::int16_t>(read_u16(s)) / 32768.0;
      } else {
        float f;
        std::uint32_t raw = read_u32(s);
        std::memcpy(&f, &raw, sizeof f);
        v = std::isfinite(f) ? std::clamp(static_cast<double>(f), -1.0, 1.0) : 0.0;
      }
      acc += v;
    }
    rec.samples[i] = fmt->channels == 1 ? acc : acc / fmt->channels;
  }
  return rec;
}

Recording load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_wav(bytes, path.string());
}

std::vector<std::uint8_t> encode_wav_pcm16(std::span<const double> samples, int sample_rate) {
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double x : samples) {
    double q = std::round(std::clamp(x, -1.0, 1.0) * 32768.0);
    auto v = static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate) {
  auto bytes = encode_wav_pcm16(samples, sample_rate);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::size_t segment_count(std::size_t n_samples, int sample_rate, double segment_seconds) {
  if (!(segment_seconds > 0.0)) throw InvalidArgument("segment duration must be positive");
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  if (n_samples == 0) return 0;
  const double q = static_cast<double>(n_samples) / (segment_seconds * sample_rate);
  // Absorb representation error when N is an exact multiple of L.
  return static_cast<std::size_t>(std::ceil(q * (1.0 - 1e-12)));
}

std::vector<AudioSegment> segment(const Recording& rec, double segment_seconds, double min_tail_seconds) {
  const std::size_t n = rec.samples.size();
  const std::size_t count = segment_count(n, rec.sample_rate, segment_seconds);
  const double seg_len = segment_seconds * rec.sample_rate;

  std::vector<AudioSegment> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto begin = static_cast<std::size_t>(std::floor(i * seg_len + 1e-9));
    auto end = i + 1 == count ? n : static_cast<std::size_t>(std::floor((i + 1) * seg_len + 1e-9));
    begin = std::min(begin, n);
    end = std::min(end, n);
    if (end <= begin) continue;
    const double dur = static_cast<double>(end - begin) / rec.sample_rate;
    if (i + 1 == count && dur + 1e-12 < min_tail_seconds) break;
    AudioSegment seg;
    seg.speaker_id = rec.speaker_id;
    seg.segment_index = i;
    seg.samples.assign(rec.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                       rec.samples.begin() + static_cast<std::ptrdiff_t>(end));
    seg.sample_rate = rec.sample_rate;
    seg.duration_s = dur;
    out.push_back(std::move(seg));
  }
  return out;
}

std::size_t expected_sample_count(std::span<const Recording> recordings, double segment_seconds) {
  std::size_t total = 0;
  for (const auto& r : recordings) total += segment_count(r.samples.size(), r.sample_rate, segment_seconds);
  return total;
}

RatingLabels normalize_ratings(std::span<const RatingRow> rows) {
  std::map<std::string, std::map<std::string, double>> by_rater;
  for (const auto& row : rows) {
    auto& cell = by_rater[row.rater_id];
    if (!cell.emplace(row.speaker_id, row.rating).second) {
      throw InvalidArgument("rater '" + row.rater_id + "' rated speaker '" + row.speaker_id + "' twice");
    }
  }

  std::map<std::string, std::pair<double, int>> sums;
  for (const auto& [rater, ratings] : by_rater) {
    if (ratings.size() < 2) {
      spdlog::warn("rater '{}' rated fewer than two speakers; excluded", rater);
      continue;
    }
    double mean = 0.0;
    for (const auto& [_, v] : ratings) mean += v;
    mean /= static_cast<double>(ratings.size());
    double var = 0.0;
    for (const auto& [_, v] : ratings) var += (v - mean) * (v - mean);
    var /= static_cast<double>(ratings.size());
    if (!(var > 0.0)) {
      spdlog::warn("rater '{}' gave identical ratings to every speaker; excluded", rater);
      continue;
    }
    const double sd = std::sqrt(var);
    for (const auto& [speaker, v] : ratings) {
      auto& acc = sums[speaker];
      acc.first += (v - mean) / sd;
      acc.second += 1;
    }
  }

  RatingLabels labels;
  for (const auto& [speaker, acc] : sums) labels[speaker] = acc.first / acc.second;
  return labels;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  auto table = detail::read_csv(path);
  const std::string origin = path.string();
  const auto c_speaker = table.column("speaker_id", origin);
  const auto c_sex = table.column("sex", origin);
  const auto c_path = table.column("wav_path", origin);
  const auto c_start = table.find_column("sentence_start");
  const auto c_end = table.find_column("sentence_end");
  const auto base = path.parent_path();

  std::vector<ManifestEntry> entries;
  std::map<std::string, Sex> sex_of;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = origin + ":" + std::to_string(table.line_numbers[r]);
    ManifestEntry e;
    e.speaker_id = row[c_speaker];
    if (e.speaker_id.empty()) throw ParseError(where + ": empty speaker_id");
    try {
      e.sex = parse_sex(row[c_sex]);
    } catch (const ParseError& err) {
      throw ParseError(where + ": " + err.what());
    }
    std::filesystem::path p = row[c_path];
    e.wav_path = p.is_absolute() ? p : base / p;
    if (c_start >= 0 && !row[c_start].empty()) e.sentence_start = detail::parse_double(row[c_start], where);
    if (c_end >= 0 && !row[c_end].empty()) e.sentence_end = detail::parse_double(row[c_end], where);
    auto [it, inserted] = sex_of.emplace(e.speaker_id, e.sex);
    if (!inserted && it->second != e.sex) {
      throw ParseError(where + ": speaker '" + e.speaker_id + "' listed with two sex classes");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  const bool sentences = std::any_of(entries.begin(), entries.end(),
                                     [](const ManifestEntry& e) { return e.sentence_start.has_value(); });
  out << "speaker_id,sex,wav_path" << (sentences ? ",sentence_start,sentence_end" : "") << "\n";
  for (const auto& e : entries) {
    out << e.speaker_id << ',' << to_string(e.sex) << ',' << e.wav_path.generic_string();
    if (sentences) {
      out << ',';
      if (e.sentence_start) out << *e.sentence_start;
      out << ',';
      if (e.sentence_end) out << *e.sentence_end;
    }
    out << "\n";
  }
}

std::vector<RatingRow> read_ratings(const std::filesystem::path& path) {
  auto table = detail::read_csv(path);
  const std::string origin = path.string();
  const auto c_rater = table.column("rater_id", origin);
  const auto c_speaker = table.column("speaker_id", origin);
  const auto c_rating = table.column("rating", origin);
  const auto c_scale = table.find_column("scale_max");

  std::vector<RatingRow> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = origin + ":" + std::to_string(table.line_numbers[r]);
    if (row[c_rating].empty()) continue;  // missing cell
    RatingRow rr;
    rr.rater_id = row[c_rater];
    rr.speaker_id = row[c_speaker];
    rr.rating = detail::parse_double(row[c_rating], where);
    if (c_scale >= 0 && !row[c_scale].empty()) rr.scale_max = detail::parse_double(row[c_scale], where);
    rows.push_back(std::move(rr));
  }
  return rows;
}

void write_ratings(const std::filesystem::path& path, std::span<const RatingRow> rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "rater_id,speaker_id,rating,scale_max\n";
  for (const auto& r : rows) out << fmt::format("{},{},{},{}\n", r.rater_id, r.speaker_id, r.rating, r.scale_max);
}

}  // namespace voxtrait::audio
