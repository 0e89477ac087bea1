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

#include <span>
#include <vector>

#include "voxtrait/audio_io.hpp"

namespace voxtrait::pitch {

struct PitchConfig {
  double floor_hz = 75.0;
  double ceiling_hz = 300.0;
  double voicing_threshold = 0.45;
  double time_step = 0.01;
  /// Frames whose absolute peak is below this fraction of the segment peak
  /// are treated as silent.
  double silence_threshold = 0.03;
  /// Per-octave preference for shorter lags among autocorrelation candidates.
  double octave_cost = 0.01;
  /// A shorter-lag candidate within this fraction of the strongest one wins.
  double subharmonic_tolerance = 0.1;
};

/// Search-range defaults by sex class: 75-300 Hz male, 100-500 Hz female.
PitchConfig default_config(audio::Sex sex);

struct PitchTrack {
  std::vector<double> frame_times;    // seconds, frame centres
  std::vector<double> f0_hz;          // 0 when unvoiced
  std::vector<bool> voiced;
  std::vector<double> autocorr_peak;  // normalized, in [0, 1]
  double time_step = 0.0;
  double duration = 0.0;

  std::size_t size() const { return frame_times.size(); }
  std::size_t voiced_count() const;
};

struct PulseTrain {
  std::vector<double> times;       // strictly increasing, seconds
  std::vector<double> amplitudes;  // absolute peak amplitude at each pulse
  std::vector<int> run;            // voiced run each pulse belongs to

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

/// Samples needed for one analysis window (3 periods of the pitch floor).
std::size_t window_samples(const PitchConfig& config, int sample_rate);

/// Short-term autocorrelation pitch tracker. Each frame is mean-removed,
/// Hann-windowed, and its autocorrelation is divided by the window's own
/// autocorrelation; the best peak in [1/ceiling, 1/floor] (refined by
/// parabolic interpolation) decides F0 and voicing.
PitchTrack track_pitch(std::span<const double> samples, int sample_rate, const PitchConfig& config);
PitchTrack track_pitch(const audio::AudioSegment& seg, const PitchConfig& config);

/// Marks one glottal pulse per period inside each voiced run. Starting from
/// the strongest peak of the run's first frame, every next pulse is the
/// extremum of the seed's polarity in [prev + 0.8 T, prev + 1.25 T], refined
/// to sub-sample precision by band-limited interpolation.
PulseTrain extract_pulses(std::span<const double> samples, int sample_rate, const PitchTrack& track);
PulseTrain extract_pulses(const audio::AudioSegment& seg, const PitchTrack& track);

/// Windowed-sinc interpolation of x at fractional sample position t.
double sinc_interpolate(std::span<const double> x, double t, int half_width = 30);

}  // namespace voxtrait::pitch
