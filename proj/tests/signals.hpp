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

// Closed-form test signals with known F0, pulse positions and resonances.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace voxtrait::testing {

inline std::vector<double> sine(double f0, double seconds, int fs, double amplitude = 0.5, double phase = 0.0) {
  std::vector<double> x(static_cast<std::size_t>(seconds * fs));
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = amplitude * std::sin(2.0 * std::numbers::pi * f0 * static_cast<double>(i) / fs + phase);
  }
  return x;
}

/// Band-limited sawtooth: harmonics up to max_harmonic_hz.
inline std::vector<double> sawtooth(double f0, double seconds, int fs, double amplitude = 0.4,
                                    double max_harmonic_hz = 4000.0, double delay_s = 0.0) {
  std::vector<double> x(static_cast<std::size_t>(seconds * fs), 0.0);
  const int harmonics = static_cast<int>(std::min(max_harmonic_hz, 0.45 * fs) / f0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / fs - delay_s;
    double acc = 0.0;
    for (int h = 1; h <= harmonics; ++h) acc += std::sin(2.0 * std::numbers::pi * h * f0 * t) / h;
    x[i] = amplitude * (2.0 / std::numbers::pi) * acc;
  }
  return x;
}

inline std::vector<double> impulse_train(double f0, double seconds, int fs, double amplitude = 0.8,
                                         std::size_t offset = 0) {
  std::vector<double> x(static_cast<std::size_t>(seconds * fs), 0.0);
  const double period = fs / f0;
  for (double p = static_cast<double>(offset); p < static_cast<double>(x.size()); p += period) {
    x[static_cast<std::size_t>(std::llround(p)) % x.size()] = amplitude;
  }
  return x;
}

inline std::vector<double> white_noise(double seconds, int fs, std::uint64_t seed, double sd = 0.2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sd);
  std::vector<double> x(static_cast<std::size_t>(seconds * fs));
  for (auto& v : x) v = n(rng);
  return x;
}

/// Two-pole digital resonator applied in place.
inline void resonate(std::vector<double>& x, double freq, double bandwidth, int fs) {
  const double r = std::exp(-std::numbers::pi * bandwidth / fs);
  const double a1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / fs);
  const double a2 = -r * r;
  const double gain = 1.0 - a1 - a2;
  double y1 = 0.0, y2 = 0.0;
  for (auto& v : x) {
    const double y = gain * v + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

/// Impulse train through a cascade of resonators, peak-normalized to 0.8.
inline std::vector<double> synthetic_vowel(double f0, double seconds, int fs, const std::array<double, 4>& formants,
                                           const std::array<double, 4>& bandwidths = {80.0, 90.0, 120.0, 150.0}) {
  auto x = impulse_train(f0, seconds, fs, 1.0);
  for (std::size_t i = 0; i < 4; ++i) resonate(x, formants[i], bandwidths[i], fs);
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  for (auto& v : x) v *= 0.8 / peak;
  return x;
}

}  // namespace voxtrait::testing
