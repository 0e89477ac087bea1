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

#include <optional>
#include <span>
#include <vector>

#include "voxtrait/pitch.hpp"

namespace voxtrait::perturbation {

/// Empty optionals mean "not enough periods/pulses", which is distinct from 0.
struct JitterSet {
  std::optional<double> local;
  std::optional<double> local_abs;  // seconds
  std::optional<double> rap;
  std::optional<double> ppq5;
  std::optional<double> ddp;
};

struct ShimmerSet {
  std::optional<double> local;
  std::optional<double> apq3;
  std::optional<double> apq5;
  std::optional<double> apq11;
  std::optional<double> dda;
};

struct PerturbationSet {
  std::optional<double> hnr_db;
  JitterSet jitter;
  ShimmerSet shimmer;
};

/// Splits a pulse train into per-run period sequences. Intervals that
/// straddle two voiced runs are not periods.
std::vector<std::vector<double>> period_runs(const pitch::PulseTrain& pulses);
std::vector<std::vector<double>> amplitude_runs(const pitch::PulseTrain& pulses);

/// Praat-style jitter over period sequences that are each contiguous.
/// local, rap and ddp need 3 periods; ppq5 needs 5.
JitterSet jitter_from_periods(std::span<const std::vector<double>> runs);
JitterSet jitter_measures(const pitch::PulseTrain& pulses);

/// Praat-style shimmer over amplitude sequences that are each contiguous.
/// local, apq3 and dda need 3 amplitudes; apq5 needs 5, apq11 needs 11.
ShimmerSet shimmer_from_amplitudes(std::span<const std::vector<double>> runs);
ShimmerSet shimmer_measures(const pitch::PulseTrain& pulses);

/// 10 log10(r / (1 - r)) for a normalized autocorrelation peak r, clamped to
/// [1e-6, 1 - 1e-6].
double hnr_from_peak(double r);

/// Mean frame HNR over voiced frames; empty if nothing is voiced.
std::optional<double> hnr(const pitch::PitchTrack& track);

PerturbationSet measure(const pitch::PitchTrack& track, const pitch::PulseTrain& pulses);

}  // namespace voxtrait::perturbation
