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

#include "voxtrait/pitch.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "voxtrait/error.hpp"

namespace voxtrait::pitch {

namespace {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Autocorrelation r[0..max_lag] of a zero-padded real frame via FFT.
class Autocorrelator {
 public:
  explicit Autocorrelator(std::size_t nfft) : nfft_(nfft), buf_(nfft, 0.0) {}

  void compute(std::span<const double> frame, std::size_t max_lag, std::vector<double>& out) {
    std::fill(buf_.begin(), buf_.end(), 0.0);
    std::copy(frame.begin(), frame.end(), buf_.begin());
    fft_.fwd(spec_, buf_);
    for (auto& c : spec_) c = std::complex<double>(std::norm(c), 0.0);
    fft_.inv(acf_, spec_);
    out.assign(acf_.begin(), acf_.begin() + static_cast<std::ptrdiff_t>(max_lag + 1));
  }

 private:
  std::size_t nfft_;
  Eigen::FFT<double> fft_;
  std::vector<double> buf_;
  std::vector<double> acf_;
  std::vector<std::complex<double>> spec_;
};

// Maximum of f on [a, b] by golden-section search.
template <typename F>
std::pair<double, double> golden_max(F&& f, double a, double b, double tol = 1e-5) {
  constexpr double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double t = 0.5 * (a + b);
  return {t, f(t)};
}

struct Peak {
  double lag = 0.0;
  double height = 0.0;
};

// Parabolic refinement of a local maximum at integer lag k.
Peak refine_peak(const std::vector<double>& r, std::size_t k) {
  const double a = r[k - 1], b = r[k], c = r[k + 1];
  const double denom = a - 2.0 * b + c;
  if (denom >= 0.0) return {static_cast<double>(k), b};
  const double delta = 0.5 * (a - c) / denom;
  return {static_cast<double>(k) + delta, b - 0.25 * (a - c) * delta};
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

PitchConfig default_config(audio::Sex sex) {
  PitchConfig c;
  if (sex == audio::Sex::female) {
    c.floor_hz = 100.0;
    c.ceiling_hz = 500.0;
  }
  return c;
}

std::size_t PitchTrack::voiced_count() const {
  return static_cast<std::size_t>(std::count(voiced.begin(), voiced.end(), true));
}

std::size_t window_samples(const PitchConfig& config, int sample_rate) {
  return static_cast<std::size_t>(std::llround(3.0 / config.floor_hz * sample_rate));
}

PitchTrack track_pitch(std::span<const double> x, int fs, const PitchConfig& config) {
  if (!(config.floor_hz > 0.0) || !(config.floor_hz < config.ceiling_hz)) {
    throw InvalidArgument("pitch floor must be positive and below the ceiling");
  }
  if (fs <= 0) throw InvalidArgument("sample rate must be positive");
  if (config.ceiling_hz * 2.0 > fs) throw InvalidArgument("pitch ceiling must not exceed the Nyquist frequency");

  const std::size_t nw = window_samples(config, fs);
  if (x.size() < nw) {
    throw InvalidArgument("segment too short for pitch analysis: need at least " + std::to_string(nw) +
                          " samples (" + std::to_string(3.0 / config.floor_hz) + " s), got " +
                          std::to_string(x.size()));
  }
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.time_step * fs)));
  const auto min_lag = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(fs / config.ceiling_hz)));
  const auto max_lag = static_cast<std::size_t>(std::ceil(fs / config.floor_hz)) + 1;

  std::vector<double> window(nw);
  for (std::size_t i = 0; i < nw; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 1.0) / (nw + 1.0));
  }

  Autocorrelator acf(next_pow2(nw + max_lag + 1));
  std::vector<double> rw;
  acf.compute(window, max_lag + 1, rw);
  const double rw0 = rw[0];
  for (auto& v : rw) v /= rw0;

  double global_peak = 0.0;
  for (double v : x) global_peak = std::max(global_peak, std::abs(v));

  PitchTrack track;
  track.time_step = static_cast<double>(hop) / fs;
  track.duration = static_cast<double>(x.size()) / fs;

  std::vector<double> frame(nw), ra, r(max_lag + 2);
  std::vector<std::pair<Peak, double>> candidates;
  for (std::size_t start = 0; start + nw <= x.size(); start += hop) {
    const double t = (start + 0.5 * nw) / fs;
    track.frame_times.push_back(t);

    double local_peak = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < nw; ++i) {
      local_peak = std::max(local_peak, std::abs(x[start + i]));
      mean += x[start + i];
    }
    mean /= static_cast<double>(nw);

    Peak best;
    bool have = false;
    candidates.clear();
    if (global_peak > 0.0 && local_peak > config.silence_threshold * global_peak) {
      for (std::size_t i = 0; i < nw; ++i) frame[i] = (x[start + i] - mean) * window[i];
      acf.compute(frame, max_lag + 1, ra);
      if (ra[0] > 0.0) {
        for (std::size_t k = 0; k <= max_lag + 1; ++k) r[k] = ra[k] / ra[0] / rw[k];
        for (std::size_t k = min_lag; k <= max_lag; ++k) {
          if (!(r[k] > 0.0) || r[k] < r[k - 1] || r[k] < r[k + 1]) continue;
          Peak p = refine_peak(r, k);
          const double f = fs / p.lag;
          if (f < config.floor_hz || f > config.ceiling_hz) continue;
          const double strength =
              std::min(p.height, 1.0) - config.octave_cost * std::log2(config.floor_hz * p.lag / fs);
          candidates.push_back({p, strength});
        }
      }
    }
    if (!candidates.empty()) {
      double top = candidates.front().second;
      for (const auto& c : candidates) top = std::max(top, c.second);
      // Additive noise and jitter lower every multiple of the period alike,
      // so near-ties go to the shortest lag.
      for (const auto& c : candidates) {
        if (c.second >= top - config.subharmonic_tolerance * std::abs(top)) {
          best = c.first;
          have = true;
          break;
        }
      }
    }

    const double height = have ? std::clamp(best.height, 0.0, 1.0) : 0.0;
    const bool voiced = have && height >= config.voicing_threshold;
    track.voiced.push_back(voiced);
    track.f0_hz.push_back(voiced ? fs / best.lag : 0.0);
    track.autocorr_peak.push_back(height);
  }
  return track;
}

PitchTrack track_pitch(const audio::AudioSegment& seg, const PitchConfig& config) {
  return track_pitch(seg.samples, seg.sample_rate, config);
}

double sinc_interpolate(std::span<const double> x, double t, int half_width) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto centre = static_cast<std::ptrdiff_t>(std::floor(t));
  double acc = 0.0;
  for (std::ptrdiff_t k = centre - half_width + 1; k <= centre + half_width; ++k) {
    if (k < 0 || k >= n) continue;
    const double d = t - static_cast<double>(k);
    const double u = d / half_width;
    if (std::abs(u) >= 1.0) continue;
    const double w = 0.5 + 0.5 * std::cos(std::numbers::pi * u);
    acc += x[static_cast<std::size_t>(k)] * sinc(d) * w;
  }
  return acc;
}

namespace {

// Sub-sample location of the extremum of polarity * x near integer index k.
std::pair<double, double> refine_extremum(std::span<const double> x, std::size_t k, double polarity) {
  auto [t, v] = golden_max([&](double u) { return polarity * sinc_interpolate(x, u); }, static_cast<double>(k) - 1.0,
                           static_cast<double>(k) + 1.0);
  const double vk = polarity * x[k];
  if (vk >= v) return {static_cast<double>(k), vk};
  return {t, v};
}

// Index of the maximum of polarity * x over [lo, hi], or npos.
std::size_t argmax_in(std::span<const double> x, double lo, double hi, double polarity) {
  const auto n = static_cast<double>(x.size());
  lo = std::max(lo, 0.0);
  hi = std::min(hi, n - 1.0);
  if (hi < lo) return static_cast<std::size_t>(-1);
  auto i0 = static_cast<std::size_t>(std::ceil(lo));
  auto i1 = static_cast<std::size_t>(std::floor(hi));
  if (i1 < i0) return static_cast<std::size_t>(-1);
  std::size_t best = i0;
  for (std::size_t i = i0 + 1; i <= i1; ++i) {
    if (polarity * x[i] > polarity * x[best]) best = i;
  }
  return best;
}

}  // namespace

PulseTrain extract_pulses(std::span<const double> x, int fs, const PitchTrack& track) {
  PulseTrain pulses;
  const std::size_t nf = track.size();
  const double hop = track.time_step;
  constexpr auto npos = static_cast<std::size_t>(-1);

  int run_id = 0;
  std::size_t i = 0;
  while (i < nf) {
    if (!track.voiced[i]) {
      ++i;
      continue;
    }
    std::size_t i0 = i;
    while (i < nf && track.voiced[i]) ++i;
    std::size_t i1 = i - 1;

    // Run extent in samples.
    const double run_lo = (i0 == 0 ? 0.0 : track.frame_times[i0] - 0.5 * hop) * fs;
    const double run_hi =
        (i1 + 1 == nf ? static_cast<double>(x.size() - 1) : (track.frame_times[i1] + 0.5 * hop) * fs);

    auto period_at = [&](double sample_pos) {
      const double t = sample_pos / fs;
      auto k = static_cast<std::ptrdiff_t>(std::llround((t - track.frame_times[i0]) / hop)) +
               static_cast<std::ptrdiff_t>(i0);
      k = std::clamp<std::ptrdiff_t>(k, static_cast<std::ptrdiff_t>(i0), static_cast<std::ptrdiff_t>(i1));
      return fs / track.f0_hz[static_cast<std::size_t>(k)];
    };

    // Seed: strongest absolute peak within one period of the first frame centre.
    const double centre = track.frame_times[i0] * fs;
    const double t0 = period_at(centre);
    std::size_t seed = npos;
    {
      const double lo = std::max(run_lo, centre - 0.5 * t0);
      const double hi = std::min(run_hi, centre + 0.5 * t0);
      double best = -1.0;
      for (auto k = static_cast<std::size_t>(std::ceil(std::max(lo, 0.0)));
           k <= static_cast<std::size_t>(std::floor(hi)) && k < x.size(); ++k) {
        if (std::abs(x[k]) > best) {
          best = std::abs(x[k]);
          seed = k;
        }
      }
    }
    if (seed == npos || x[seed] == 0.0) {
      ++run_id;
      continue;
    }
    const double polarity = x[seed] > 0.0 ? 1.0 : -1.0;

    std::vector<std::pair<double, double>> marks;
    marks.push_back(refine_extremum(x, seed, polarity));

    // Backward from the seed.
    std::vector<std::pair<double, double>> before;
    double prev = marks.front().first;
    while (true) {
      const double period = period_at(prev);
      const double lo = prev - 1.25 * period, hi = prev - 0.8 * period;
      if (lo < run_lo) break;
      const std::size_t k = argmax_in(x, lo, hi, polarity);
      if (k == npos || polarity * x[k] <= 0.0) break;
      auto m = refine_extremum(x, k, polarity);
      if (m.first >= prev) break;
      before.push_back(m);
      prev = m.first;
    }
    // Forward from the seed.
    prev = marks.front().first;
    while (true) {
      const double period = period_at(prev);
      const double lo = prev + 0.8 * period, hi = prev + 1.25 * period;
      if (hi > run_hi) break;
      const std::size_t k = argmax_in(x, lo, hi, polarity);
      if (k == npos || polarity * x[k] <= 0.0) break;
      auto m = refine_extremum(x, k, polarity);
      if (m.first <= prev) break;
      marks.push_back(m);
      prev = m.first;
    }

    for (auto it = before.rbegin(); it != before.rend(); ++it) {
      pulses.times.push_back(it->first / fs);
      pulses.amplitudes.push_back(std::abs(it->second));
      pulses.run.push_back(run_id);
    }
    for (const auto& m : marks) {
      pulses.times.push_back(m.first / fs);
      pulses.amplitudes.push_back(std::abs(m.second));
      pulses.run.push_back(run_id);
    }
    ++run_id;
  }
  return pulses;
}

PulseTrain extract_pulses(const audio::AudioSegment& seg, const PitchTrack& track) {
  return extract_pulses(seg.samples, seg.sample_rate, track);
}

}  // namespace voxtrait::pitch
