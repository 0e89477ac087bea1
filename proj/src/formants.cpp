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

#include "voxtrait/formants.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "voxtrait/error.hpp"

namespace voxtrait::formants {

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

double analysis_rate_for(const FormantConfig& config, audio::Sex sex) {
  if (config.analysis_rate > 0.0) return config.analysis_rate;
  return sex == audio::Sex::male ? 10000.0 : 11000.0;
}

std::vector<double> resample(std::span<const double> x, double from_rate, double to_rate) {
  if (!(from_rate > 0.0) || !(to_rate > 0.0)) throw InvalidArgument("resample rates must be positive");
  if (from_rate == to_rate) return {x.begin(), x.end()};

  const double ratio = to_rate / from_rate;
  const double cutoff = std::min(1.0, ratio) * 0.95;  // relative to input Nyquist
  constexpr double kZeroCrossings = 20.0;
  const double half_width = kZeroCrossings / cutoff;  // in input samples
  const auto n_in = static_cast<std::ptrdiff_t>(x.size());
  const auto n_out = static_cast<std::size_t>(std::floor(static_cast<double>(x.size()) * ratio));

  std::vector<double> y(n_out);
  for (std::size_t m = 0; m < n_out; ++m) {
    const double p = static_cast<double>(m) / ratio;
    const auto k0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(p - half_width)));
    const auto k1 = std::min<std::ptrdiff_t>(n_in - 1, static_cast<std::ptrdiff_t>(std::floor(p + half_width)));
    double acc = 0.0;
    for (auto k = k0; k <= k1; ++k) {
      const double d = p - static_cast<double>(k);
      const double w = 0.5 + 0.5 * std::cos(std::numbers::pi * d / half_width);
      acc += x[static_cast<std::size_t>(k)] * cutoff * sinc(cutoff * d) * w;
    }
    y[m] = acc;
  }
  return y;
}

LpcResult lpc(std::span<const double> frame, int order) {
  if (order < 1) throw InvalidArgument("LPC order must be at least 1");
  const auto p = static_cast<std::size_t>(order);
  LpcResult out;
  out.coefficients.assign(p, 0.0);
  if (frame.size() <= p) return out;

  std::vector<double> r(p + 1, 0.0);
  for (std::size_t lag = 0; lag <= p; ++lag) {
    double acc = 0.0;
    for (std::size_t i = lag; i < frame.size(); ++i) acc += frame[i] * frame[i - lag];
    r[lag] = acc;
  }
  if (!(r[0] > 0.0)) return out;

  std::vector<double> a(p + 1, 0.0), prev(p + 1, 0.0);
  a[0] = 1.0;
  double err = r[0];
  for (std::size_t i = 1; i <= p; ++i) {
    double acc = r[i];
    for (std::size_t j = 1; j < i; ++j) acc += a[j] * r[i - j];
    const double k = -acc / err;
    prev = a;
    for (std::size_t j = 1; j < i; ++j) a[j] = prev[j] + k * prev[i - j];
    a[i] = k;
    err *= (1.0 - k * k);
    if (!(err > 0.0)) return out;
  }
  std::copy(a.begin() + 1, a.end(), out.coefficients.begin());
  out.error = err;
  out.stable = true;
  return out;
}

std::vector<std::complex<double>> polynomial_roots(std::span<const double> coefficients) {
  const auto p = static_cast<Eigen::Index>(coefficients.size());
  if (p == 0) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) companion(0, j) = -coefficients[static_cast<std::size_t>(j)];
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

std::vector<Candidate> formant_candidates(std::span<const double> coefficients, double rate,
                                          const FormantConfig& config) {
  std::vector<Candidate> out;
  const double nyquist = 0.5 * rate;
  for (auto z : polynomial_roots(coefficients)) {
    if (z.imag() <= 0.0) continue;
    double mag = std::abs(z);
    if (mag > 1.0) mag = 1.0 / mag;  // reflect into the unit circle
    if (!(mag > 0.0)) continue;
    const double f = std::arg(z) * rate / (2.0 * std::numbers::pi);
    const double bw = -std::log(mag) * rate / std::numbers::pi;
    if (bw >= config.max_bandwidth) continue;
    if (f <= config.min_frequency || f >= nyquist - config.nyquist_margin) continue;
    out.push_back({f, bw});
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return a.frequency < b.frequency; });
  return out;
}

FormantTrack track_formants(std::span<const double> samples, int sample_rate, const pitch::PitchTrack& track,
                            double analysis_rate, const FormantConfig& config) {
  if (!(analysis_rate > 0.0)) throw InvalidArgument("analysis rate must be positive");
  std::vector<double> y = resample(samples, sample_rate, analysis_rate);

  const double alpha = std::exp(-2.0 * std::numbers::pi * config.pre_emphasis_from / analysis_rate);
  for (std::size_t i = y.size(); i-- > 1;) y[i] -= alpha * y[i - 1];

  const auto n = static_cast<std::size_t>(std::llround(config.window_length * analysis_rate));
  std::vector<double> window(n);
  {
    const double edge = std::exp(-12.0);
    const double mid = 0.5 * (static_cast<double>(n) - 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = static_cast<double>(i) - mid;
      window[i] = (std::exp(-48.0 * d * d / ((n + 1.0) * (n + 1.0))) - edge) / (1.0 - edge);
    }
  }

  FormantTrack ft;
  std::vector<double> frame(n);
  for (std::size_t f = 0; f < track.size(); ++f) {
    if (!track.voiced[f]) continue;
    const auto centre = static_cast<std::ptrdiff_t>(std::llround(track.frame_times[f] * analysis_rate));
    const std::ptrdiff_t start = centre - static_cast<std::ptrdiff_t>(n / 2);
    if (start < 0 || static_cast<std::size_t>(start) + n > y.size()) continue;
    for (std::size_t i = 0; i < n; ++i) frame[i] = y[static_cast<std::size_t>(start) + i] * window[i];

    const LpcResult model = lpc(frame, config.lpc_order);
    if (!model.stable) {
      ++ft.unstable_frames;
      continue;
    }
    const auto cands = formant_candidates(model.coefficients, analysis_rate, config);
    if (cands.size() < 4) {
      ++ft.sparse_frames;
      continue;
    }
    ft.frame_times.push_back(track.frame_times[f]);
    ft.formants.push_back({cands[0].frequency, cands[1].frequency, cands[2].frequency, cands[3].frequency});
  }
  return ft;
}

FormantTrack track_formants(const audio::AudioSegment& seg, const pitch::PitchTrack& track, double analysis_rate,
                            const FormantConfig& config) {
  return track_formants(seg.samples, seg.sample_rate, track, analysis_rate, config);
}

std::optional<Formants> formant_means(const FormantTrack& ft, std::size_t min_frames) {
  if (ft.formants.size() < std::max<std::size_t>(min_frames, 1)) return std::nullopt;
  Formants mean{};
  for (const auto& f : ft.formants)
    for (std::size_t i = 0; i < 4; ++i) mean[i] += f[i];
  for (auto& m : mean) m /= static_cast<double>(ft.formants.size());
  return mean;
}

PoolStats pool_stats(std::span<const Formants> speaker_means) {
  PoolStats s;
  if (speaker_means.empty()) return s;
  const auto n = static_cast<double>(speaker_means.size());
  for (const auto& f : speaker_means)
    for (std::size_t i = 0; i < 4; ++i) s.mean[i] += f[i];
  for (auto& m : s.mean) m /= n;
  for (const auto& f : speaker_means)
    for (std::size_t i = 0; i < 4; ++i) s.sd[i] += (f[i] - s.mean[i]) * (f[i] - s.mean[i]);
  for (auto& v : s.sd) v = std::sqrt(v / n);
  return s;
}

VtlEstimates vtl_estimators(const Formants& f, const PoolStats& pool, double c) {
  for (double v : f) {
    if (!(v > 0.0)) throw InvalidArgument("formant frequencies must be positive");
  }
  VtlEstimates e;
  double z = 0.0;
  for (std::size_t i = 0; i < 4; ++i) z += pool.sd[i] > 0.0 ? (f[i] - pool.mean[i]) / pool.sd[i] : 0.0;
  e.formant_position = z / 4.0;
  e.dispersion = (f[3] - f[0]) / 3.0;
  e.average = (f[0] + f[1] + f[2] + f[3]) / 4.0;
  e.geometric_mean = std::pow(f[0] * f[1] * f[2] * f[3], 0.25);

  double fitch = 0.0, num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double odd = 2.0 * static_cast<double>(i + 1) - 1.0;
    fitch += odd * c / (4.0 * f[i]);
    num += f[i] * odd / 2.0;
    den += (odd / 2.0) * (odd / 2.0);
  }
  e.fitch_vtl = fitch / 4.0;
  e.spacing = num / den;
  return e;
}

}  // namespace voxtrait::formants
