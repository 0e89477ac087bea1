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

#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "signals.hpp"
#include "voxtrait/perturbation.hpp"
#include "voxtrait/pitch.hpp"

using namespace voxtrait;
using namespace voxtrait::perturbation;
namespace sig = voxtrait::testing;

namespace {

pitch::PulseTrain train_from_periods(const std::vector<double>& periods, const std::vector<double>& amps = {}) {
  pitch::PulseTrain p;
  double t = 0.1;
  p.times.push_back(t);
  for (double d : periods) p.times.push_back(t += d);
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    p.amplitudes.push_back(amps.empty() ? 0.5 : amps[i]);
    p.run.push_back(0);
  }
  return p;
}

// Random pulse train with a few voiced runs.
pitch::PulseTrain random_train(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> runs(1, 4), len(2, 40);
  std::uniform_real_distribution<double> period(0.002, 0.013), jit(-0.1, 0.1), amp(0.05, 0.9), gap(0.02, 0.2);
  pitch::PulseTrain p;
  double t = 0.0;
  const int n_runs = runs(rng);
  for (int r = 0; r < n_runs; ++r) {
    const double base = period(rng);
    t += gap(rng);
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      t += base * (1.0 + jit(rng));
      p.times.push_back(t);
      p.amplitudes.push_back(amp(rng));
      p.run.push_back(r);
    }
  }
  return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("perfectly periodic train has zero jitter") {
  const auto j = jitter_measures(train_from_periods({0.01, 0.01, 0.01, 0.01}));
  REQUIRE(j.local);
  CHECK(*j.local == doctest::Approx(0.0));
  CHECK(*j.local_abs == doctest::Approx(0.0));
  CHECK(*j.rap == doctest::Approx(0.0));
  CHECK(*j.ddp == doctest::Approx(0.0));
  CHECK_FALSE(j.ppq5);
}

TEST_CASE("jitter from three periods") {
  const std::vector<std::vector<double>> runs{{0.009, 0.010, 0.011}};
  const auto j = jitter_from_periods(runs);
  CHECK(*j.local == doctest::Approx(0.1));
  CHECK(*j.local_abs == doctest::Approx(0.001));
  CHECK(*j.rap == doctest::Approx(0.0));
}

TEST_CASE("too few periods are missing, not zero") {
  const auto j = jitter_measures(train_from_periods({0.01, 0.01}));
  CHECK_FALSE(j.local);
  CHECK_FALSE(j.rap);
  CHECK_FALSE(j.ddp);
  const auto s = shimmer_measures(train_from_periods({0.01}));
  CHECK_FALSE(s.local);
  CHECK_FALSE(s.dda);
  const auto empty = jitter_measures(pitch::PulseTrain{});
  CHECK_FALSE(empty.local_abs);
}

TEST_CASE("ppq5 and apq thresholds") {
  const std::vector<std::vector<double>> four{{1, 2, 3, 4}};
  CHECK_FALSE(jitter_from_periods(four).ppq5);
  const std::vector<std::vector<double>> five{{1, 2, 3, 4, 5}};
  CHECK(jitter_from_periods(five).ppq5);
  CHECK(shimmer_from_amplitudes(five).apq5);
  CHECK_FALSE(shimmer_from_amplitudes(five).apq11);
  const std::vector<std::vector<double>> eleven{{1, 2, 3, 4, 5, 6, 5, 4, 3, 2, 1}};
  const auto s = shimmer_from_amplitudes(eleven);
  REQUIRE(s.apq11);
  // Single window centred on the 6.
  CHECK(*s.apq11 == doctest::Approx(std::abs(6.0 - 36.0 / 11.0) / (36.0 / 11.0)));
}

TEST_CASE("shimmer examples") {
  const std::vector<std::vector<double>> flat{{0.5, 0.5, 0.5}};
  const auto s0 = shimmer_from_amplitudes(flat);
  CHECK(*s0.local == 0.0);
  CHECK(*s0.apq3 == 0.0);
  CHECK(*s0.dda == 0.0);
  const std::vector<std::vector<double>> ramp{{0.4, 0.5, 0.6}};
  CHECK(*shimmer_from_amplitudes(ramp).local == doctest::Approx(0.2));
}

TEST_CASE("periods do not straddle voiced runs") {
  auto p = train_from_periods({0.01, 0.01, 0.01});
  const double last = p.times.back();
  for (int i = 1; i <= 4; ++i) {
    p.times.push_back(last + 0.5 + 0.01 * i);
    p.amplitudes.push_back(0.5);
    p.run.push_back(1);
  }
  const auto runs = period_runs(p);
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].size() == 3);
  CHECK(runs[1].size() == 3);
  CHECK(*jitter_measures(p).local == doctest::Approx(0.0));
}

TEST_CASE("hnr from autocorrelation peak") {
  CHECK(hnr_from_peak(0.5) == doctest::Approx(0.0));
  CHECK(hnr_from_peak(0.99) == doctest::Approx(10.0 * std::log10(99.0)));
  CHECK(hnr_from_peak(0.99) == doctest::Approx(19.9563519).epsilon(1e-8));
  CHECK(hnr_from_peak(1.0) == doctest::Approx(60.0).epsilon(1e-6));
  CHECK(hnr_from_peak(0.0) == doctest::Approx(-60.0).epsilon(1e-6));

  pitch::PitchTrack t;
  t.frame_times = {0.0, 0.01, 0.02};
  t.f0_hz = {100, 0, 100};
  t.voiced = {true, false, true};
  t.autocorr_peak = {0.99, 0.2, 0.5};
  CHECK(*hnr(t) == doctest::Approx(0.5 * 10.0 * std::log10(99.0)));
  t.voiced = {false, false, false};
  CHECK_FALSE(hnr(t));
}

TEST_CASE("ddp and dda against second-difference definitions") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = random_train(rng);
    const auto j = jitter_measures(p);
    const auto s = shimmer_measures(p);
    if (j.rap) {
      REQUIRE(j.ddp);
      CHECK(*j.ddp == 3.0 * *j.rap);
      // Mean |(T[i+1]-T[i]) - (T[i]-T[i-1])| over the mean period.
      double sum = 0.0, total = 0.0;
      std::size_t n = 0, m = 0;
      for (const auto& r : period_runs(p)) {
        for (double v : r) total += v, ++m;
        for (std::size_t i = 1; i + 1 < r.size(); ++i) sum += std::abs(r[i + 1] - 2.0 * r[i] + r[i - 1]), ++n;
      }
      CHECK(rel(*j.ddp, (sum / static_cast<double>(n)) / (total / static_cast<double>(m))) < 1e-12);
    }
    if (s.apq3) {
      REQUIRE(s.dda);
      CHECK(*s.dda == 3.0 * *s.apq3);
    }
    if (j.local) CHECK(*j.local >= 0.0);
    if (s.local) CHECK(*s.local >= 0.0);
  }
}

TEST_CASE("perturbation is scale invariant on a real signal") {
  const int fs = 16000;
  auto x = sig::synthetic_vowel(125.0, 1.0, fs, {650, 1100, 2500, 3400});
  const auto noise = sig::white_noise(1.0, fs, 8, 0.02);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += noise[i];
  const auto cfg = pitch::default_config(audio::Sex::male);
  const auto t0 = pitch::track_pitch(x, fs, cfg);
  const auto base = measure(t0, pitch::extract_pulses(x, fs, t0));
  REQUIRE(base.hnr_db);
  REQUIRE(base.jitter.ppq5);
  REQUIRE(base.shimmer.apq11);
  for (double c : {0.3, 1.9}) {
    auto y = x;
    for (auto& v : y) v *= c;
    const auto t1 = pitch::track_pitch(y, fs, cfg);
    const auto m = measure(t1, pitch::extract_pulses(y, fs, t1));
    CHECK(rel(*m.hnr_db, *base.hnr_db) < 1e-10);
    CHECK(rel(*m.jitter.local, *base.jitter.local) < 1e-10);
    CHECK(rel(*m.jitter.ppq5, *base.jitter.ppq5) < 1e-10);
    CHECK(rel(*m.shimmer.local, *base.shimmer.local) < 1e-10);
    CHECK(rel(*m.shimmer.apq11, *base.shimmer.apq11) < 1e-10);
  }
}

TEST_CASE("jitter grows with period noise") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> unit(400);
  for (auto& v : unit) v = z(rng);
  double previous = -1.0;
  for (double level : {0.0, 0.002, 0.005, 0.01, 0.02}) {
    std::vector<double> periods;
    for (double v : unit) periods.push_back(0.008 * (1.0 + level * v));
    const double local = *jitter_measures(train_from_periods(periods)).local;
    CHECK(local >= previous);
    previous = local;
  }
}
