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

#include "voxtrait/perturbation.hpp"

#include <algorithm>
#include <cmath>

namespace voxtrait::perturbation {

namespace {

std::vector<std::vector<double>> split_runs(const pitch::PulseTrain& pulses, bool periods) {
  std::vector<std::vector<double>> runs;
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    const bool new_run = i == 0 || pulses.run[i] != pulses.run[i - 1];
    if (new_run) runs.emplace_back();
    if (periods) {
      if (!new_run) runs.back().push_back(pulses.times[i] - pulses.times[i - 1]);
    } else {
      runs.back().push_back(pulses.amplitudes[i]);
    }
  }
  std::erase_if(runs, [](const auto& r) { return r.empty(); });
  return runs;
}

struct Totals {
  double sum = 0.0;
  std::size_t count = 0;
  void add(double v) {
    sum += v;
    ++count;
  }
  double mean() const { return sum / static_cast<double>(count); }
};

double overall_mean(std::span<const std::vector<double>> runs, std::size_t* count) {
  Totals t;
  for (const auto& r : runs)
    for (double v : r) t.add(v);
  *count = t.count;
  return t.count ? t.mean() : 0.0;
}

// Mean over every value with `half` neighbours on each side inside its run of
// |v_i - mean(v_{i-half..i+half})|.
Totals neighbourhood_deviation(std::span<const std::vector<double>> runs, std::size_t half) {
  Totals t;
  const std::size_t width = 2 * half + 1;
  for (const auto& r : runs) {
    if (r.size() < width) continue;
    for (std::size_t i = half; i + half < r.size(); ++i) {
      double s = 0.0;
      for (std::size_t j = i - half; j <= i + half; ++j) s += r[j];
      t.add(std::abs(r[i] - s / static_cast<double>(width)));
    }
  }
  return t;
}

Totals successive_difference(std::span<const std::vector<double>> runs) {
  Totals t;
  for (const auto& r : runs)
    for (std::size_t i = 1; i < r.size(); ++i) t.add(std::abs(r[i] - r[i - 1]));
  return t;
}

}  // namespace

std::vector<std::vector<double>> period_runs(const pitch::PulseTrain& pulses) { return split_runs(pulses, true); }

std::vector<std::vector<double>> amplitude_runs(const pitch::PulseTrain& pulses) {
  return split_runs(pulses, false);
}

JitterSet jitter_from_periods(std::span<const std::vector<double>> runs) {
  JitterSet j;
  std::size_t n = 0;
  const double mean_period = overall_mean(runs, &n);
  if (n < 3 || !(mean_period > 0.0)) return j;

  const Totals diff = successive_difference(runs);
  const Totals rap = neighbourhood_deviation(runs, 1);
  if (diff.count > 0) {
    j.local_abs = diff.mean();
    j.local = diff.mean() / mean_period;
  }
  if (rap.count > 0) {
    j.rap = rap.mean() / mean_period;
    j.ddp = 3.0 * *j.rap;
  }
  if (n >= 5) {
    const Totals ppq = neighbourhood_deviation(runs, 2);
    if (ppq.count > 0) j.ppq5 = ppq.mean() / mean_period;
  }
  return j;
}

JitterSet jitter_measures(const pitch::PulseTrain& pulses) {
  auto runs = period_runs(pulses);
  return jitter_from_periods(runs);
}

ShimmerSet shimmer_from_amplitudes(std::span<const std::vector<double>> runs) {
  ShimmerSet s;
  std::size_t n = 0;
  const double mean_amp = overall_mean(runs, &n);
  if (n < 3 || !(mean_amp > 0.0)) return s;

  const Totals diff = successive_difference(runs);
  const Totals apq3 = neighbourhood_deviation(runs, 1);
  if (diff.count > 0) s.local = diff.mean() / mean_amp;
  if (apq3.count > 0) {
    s.apq3 = apq3.mean() / mean_amp;
    s.dda = 3.0 * *s.apq3;
  }
  if (n >= 5) {
    const Totals apq5 = neighbourhood_deviation(runs, 2);
    if (apq5.count > 0) s.apq5 = apq5.mean() / mean_amp;
  }
  if (n >= 11) {
    const Totals apq11 = neighbourhood_deviation(runs, 5);
    if (apq11.count > 0) s.apq11 = apq11.mean() / mean_amp;
  }
  return s;
}

ShimmerSet shimmer_measures(const pitch::PulseTrain& pulses) {
  auto runs = amplitude_runs(pulses);
  return shimmer_from_amplitudes(runs);
}

double hnr_from_peak(double r) {
  constexpr double eps = 1e-6;
  r = std::clamp(r, eps, 1.0 - eps);
  return 10.0 * std::log10(r / (1.0 - r));
}

std::optional<double> hnr(const pitch::PitchTrack& track) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < track.size(); ++i) {
    if (!track.voiced[i]) continue;
    sum += hnr_from_peak(track.autocorr_peak[i]);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

PerturbationSet measure(const pitch::PitchTrack& track, const pitch::PulseTrain& pulses) {
  return {hnr(track), jitter_measures(pulses), shimmer_measures(pulses)};
}

}  // namespace voxtrait::perturbation
