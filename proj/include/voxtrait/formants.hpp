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

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "voxtrait/audio_io.hpp"
#include "voxtrait/pitch.hpp"

namespace voxtrait::formants {

using Formants = std::array<double, 4>;

struct FormantConfig {
  int lpc_order = 10;
  /// Analysis sample rate in Hz; 0 picks 10 kHz for male and 11 kHz for
  /// female speakers.
  double analysis_rate = 0.0;
  double window_length = 0.025;
  double max_bandwidth = 400.0;
  double min_frequency = 90.0;
  double nyquist_margin = 50.0;
  double pre_emphasis_from = 50.0;
  double speed_of_sound = 35000.0;  // cm/s
  std::size_t min_frames = 5;
};

double analysis_rate_for(const FormantConfig& config, audio::Sex sex);

struct FormantTrack {
  std::vector<double> frame_times;
  std::vector<Formants> formants;  // only frames with four accepted candidates
  std::size_t unstable_frames = 0;
  std::size_t sparse_frames = 0;   // fewer than four candidates
};

/// Band-limited resampling with a Hann-windowed sinc kernel.
std::vector<double> resample(std::span<const double> x, double from_rate, double to_rate);

struct LpcResult {
  std::vector<double> coefficients;  // a_1..a_p of A(z) = 1 + sum a_k z^-k
  double error = 0.0;                // final prediction-error energy
  bool stable = false;
};

/// Autocorrelation-method LPC via Levinson-Durbin.
LpcResult lpc(std::span<const double> frame, int order);

/// Roots of z^p + a_1 z^(p-1) + ... + a_p.
std::vector<std::complex<double>> polynomial_roots(std::span<const double> coefficients);

struct Candidate {
  double frequency = 0.0;
  double bandwidth = 0.0;
};

/// Frequencies/bandwidths of the upper-half-plane roots that pass the
/// bandwidth and frequency-band filters, sorted ascending.
std::vector<Candidate> formant_candidates(std::span<const double> coefficients, double rate,
                                          const FormantConfig& config);

/// Per voiced frame: resample, pre-emphasize, Gaussian window, LPC, root
/// solve; the four lowest surviving candidates become F1..F4.
FormantTrack track_formants(std::span<const double> samples, int sample_rate, const pitch::PitchTrack& track,
                            double analysis_rate, const FormantConfig& config = {});
FormantTrack track_formants(const audio::AudioSegment& seg, const pitch::PitchTrack& track,
                            double analysis_rate, const FormantConfig& config = {});

/// Frame-weighted mean of F1..F4; empty with fewer than min_frames frames.
std::optional<Formants> formant_means(const FormantTrack& ft, std::size_t min_frames = 5);

/// Per-formant mean and SD over a sex-class pool, used by the formant
/// position measure.
struct PoolStats {
  Formants mean{};
  Formants sd{};
};

PoolStats pool_stats(std::span<const Formants> speaker_means);

struct VtlEstimates {
  double formant_position = 0.0;  // dimensionless
  double dispersion = 0.0;        // Hz
  double average = 0.0;           // Hz
  double geometric_mean = 0.0;    // Hz
  double fitch_vtl = 0.0;         // cm
  double spacing = 0.0;           // Hz, through-origin regression slope
};

/// Six vocal-tract-length estimators from mean formant frequencies.
/// Throws InvalidArgument if any formant is not positive.
VtlEstimates vtl_estimators(const Formants& f, const PoolStats& pool, double speed_of_sound = 35000.0);

}  // namespace voxtrait::formants
