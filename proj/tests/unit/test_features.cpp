// Copyright 2026 The vgskws Authors
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


#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "test_support.hpp"
#include "vgskws/error.hpp"
#include "vgskws/features.hpp"
#include "vgskws/rng.hpp"
#include "vgskws/wav.hpp"

using namespace vgskws;
using Eigen::MatrixXd;

namespace {

std::vector<double> chirp(double seconds, double f0, double f1, int rate = 16000) {
  const auto n = static_cast<std::size_t>(seconds * rate);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double phase = 2.0 * std::numbers::pi * (f0 * t + 0.5 * (f1 - f0) / seconds * t * t);
    x[i] = 0.5 * std::sin(phase) + 0.01 * std::cos(2.0 * std::numbers::pi * 3000.0 * t);
  }
  return x;
}

// Reference cepstra: direct O(N^2) DFT, filterbank built from mel-space
// triangle corners, DCT-II via explicit sums.
MatrixXd reference_cepstra(const std::vector<double>& x, int rate) {
  const int win = 400, hop = 160, nfft = 512, nfilt = 26, nceps = 13;
  const int frames = 1 + (static_cast<int>(x.size()) - win) / hop;
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - (i ? 0.97 * x[i - 1] : 0.0);

  auto mel = [](double f) { return 1127.0 * std::log(1.0 + f / 700.0); };
  const double m_lo = mel(20.0), m_hi = mel(8000.0);
  std::vector<std::vector<double>> weights(nfilt, std::vector<double>(nfft / 2 + 1, 0.0));
  for (int m = 0; m < nfilt; ++m) {
    const double a = m_lo + (m_hi - m_lo) * m / (nfilt + 1.0);
    const double b = m_lo + (m_hi - m_lo) * (m + 1) / (nfilt + 1.0);
    const double c = m_lo + (m_hi - m_lo) * (m + 2) / (nfilt + 1.0);
    for (int k = 0; k <= nfft / 2; ++k) {
      const double hz = k * static_cast<double>(rate) / nfft;
      const double fa = 700.0 * std::expm1(a / 1127.0), fb = 700.0 * std::expm1(b / 1127.0),
                   fc = 700.0 * std::expm1(c / 1127.0);
      const double w = hz <= fb ? (hz - fa) / (fb - fa) : (fc - hz) / (fc - fb);
      if (hz > fa && hz < fc) weights[m][k] = std::max(0.0, w);
    }
  }

  MatrixXd out(frames, nceps);
  for (int t = 0; t < frames; ++t) {
    std::vector<double> seg(nfft, 0.0);
    for (int n = 0; n < win; ++n)
      seg[n] = y[static_cast<std::size_t>(t * hop + n)] *
               (0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (win - 1)));
    std::vector<double> power(nfft / 2 + 1);
    for (int k = 0; k <= nfft / 2; ++k) {
      std::complex<double> acc = 0.0;
      for (int n = 0; n < nfft; ++n) acc += seg[n] * std::polar(1.0, -2.0 * std::numbers::pi * k * n / nfft);
      power[k] = std::norm(acc);
    }
    std::vector<double> logmel(nfilt);
    for (int m = 0; m < nfilt; ++m) {
      double e = 0.0;
      for (int k = 0; k <= nfft / 2; ++k) e += weights[m][k] * power[k];
      logmel[m] = std::log(std::max(e, 1e-10));
    }
    for (int i = 0; i < nceps; ++i) {
      double s = 0.0;
      for (int m = 0; m < nfilt; ++m) s += logmel[m] * std::cos(std::numbers::pi * i * (2 * m + 1) / (2.0 * nfilt));
      out(t, i) = s * std::sqrt((i == 0 ? 1.0 : 2.0) / nfilt);
    }
  }
  return out;
}

MatrixXd reference_deltas(const MatrixXd& c) {
  MatrixXd d(c.rows(), c.cols());
  const auto last = c.rows() - 1;
  auto at = [&](Eigen::Index t) { return c.row(std::clamp<Eigen::Index>(t, 0, last)); };
  for (Eigen::Index t = 0; t < c.rows(); ++t) d.row(t) = ((at(t + 1) - at(t - 1)) + 2.0 * (at(t + 2) - at(t - 2))) / 10.0;
  return d;
}

double rms(const MatrixXd& a) { return std::sqrt(a.array().square().mean()); }

}  // namespace

TEST_CASE("one second of silence") {
  const std::vector<double> zeros(16000, 0.0);
  const FeatureSequence f = compute_mfcc(zeros, 16000);
  CHECK(f.frames() >= 96);
  CHECK(f.frames() <= 100);
  CHECK(f.dims() == 39);
  CHECK(f.values.allFinite());
  CHECK(f.values.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(f.frame_hop_s == doctest::Approx(0.010));
}

TEST_CASE("tone features are deterministic") {
  std::vector<double> tone(8000);
  for (std::size_t i = 0; i < tone.size(); ++i) tone[i] = std::sin(2.0 * std::numbers::pi * 440.0 * i / 16000.0);
  const FeatureSequence a = compute_mfcc(tone, 16000);
  const FeatureSequence b = compute_mfcc(tone, 16000);
  CHECK(a.values == b.values);
  CHECK(a.values.allFinite());
}

TEST_CASE("raw cepstra match a direct-DFT reference") {
  const auto x = chirp(0.3, 200.0, 6000.0);
  MfccConfig cfg;
  cfg.add_deltas = false;
  cfg.normalise = false;
  const FeatureSequence f = compute_mfcc(x, 16000, cfg);
  const MatrixXd ref = reference_cepstra(x, 16000);
  REQUIRE(f.frames() == ref.rows());
  REQUIRE(f.dims() == 13);
  CHECK(rms(f.values - ref) < 1e-4);
}

TEST_CASE("normalised 39-dim features match the reference pipeline") {
  const auto x = chirp(0.3, 300.0, 5000.0);
  const FeatureSequence f = compute_mfcc(x, 16000);
  const MatrixXd c = reference_cepstra(x, 16000);
  const MatrixXd d1 = reference_deltas(c);
  MatrixXd full(c.rows(), 39);
  full << c, d1, reference_deltas(d1);
  for (Eigen::Index j = 0; j < full.cols(); ++j) {
    full.col(j).array() -= full.col(j).mean();
    const double sd = std::sqrt(full.col(j).array().square().mean());
    if (sd > 1e-10) full.col(j) /= sd;
  }
  CHECK(rms(f.values - full) < 1e-4);
}

TEST_CASE("mfcc input validation") {
  CHECK_THROWS_AS(compute_mfcc({}, 16000), RangeError);
  CHECK_THROWS_AS(compute_mfcc({0.0, NAN}, 16000), RangeError);
  CHECK_THROWS_AS(compute_mfcc(std::vector<double>(800, 0.0), 8000), RangeError);
}

TEST_CASE("feature files round trip at float precision") {
  vgskws::testing::TempDir dir;
  FeatureSequence f;
  f.values = MatrixXd::Random(17, 39);
  write_features(f, dir / "a.feat");
  const FeatureHeader h = read_feature_header(dir / "a.feat");
  CHECK(h.frames == 17);
  CHECK(h.dims == 39);
  const FeatureSequence g = read_features(dir / "a.feat");
  CHECK((g.values - f.values).cwiseAbs().maxCoeff() < 1e-6);
  vgskws::testing::write_text(dir / "bad.feat", "nope");
  CHECK_THROWS_AS(read_features(dir / "bad.feat"), ParseError);
}

TEST_CASE("wav round trip") {
  vgskws::testing::TempDir dir;
  Waveform w;
  w.samples = chirp(0.1, 100.0, 2000.0);
  write_wav_pcm16(w, dir / "a.wav");
  const Waveform r = read_wav(dir / "a.wav");
  REQUIRE(r.samples.size() == w.samples.size());
  CHECK(r.sample_rate == 16000);
  double err = 0.0;
  for (std::size_t i = 0; i < w.samples.size(); ++i) err = std::max(err, std::abs(r.samples[i] - w.samples[i]));
  CHECK(err < 1.0 / 16000.0);
  CHECK(wav_duration_s(dir / "a.wav") == doctest::Approx(0.1));
}

TEST_CASE("spec augment with no masks is the identity") {
  FeatureSequence f;
  f.values = MatrixXd::Random(50, 39);
  SpecAugmentConfig cfg;
  cfg.num_freq_masks = 0;
  cfg.num_time_masks = 0;
  Rng rng(1);
  CHECK(spec_augment(f, cfg, rng).values == f.values);
}

TEST_CASE("one time mask covers at most a tenth of the frames") {
  SpecAugmentConfig cfg;
  cfg.num_freq_masks = 0;
  cfg.num_time_masks = 1;
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const auto mask = spec_augment_mask(100, 39, cfg, rng);
    int rows = 0;
    for (Eigen::Index t = 0; t < 100; ++t) {
      if (mask.row(t).all()) ++rows;
      else CHECK_FALSE(mask.row(t).any());
    }
    CHECK(rows >= 0);
    CHECK(rows <= 10);
  }
}

TEST_CASE("masked-cell fraction matches its exact expectation") {
  const int T = 100, F = 39;
  const SpecAugmentConfig cfg;

  // Per-position probability that one mask of width U{0..max} placed at
  // U{0..n-w} covers it.
  auto coverage = [](int n, int max_w) {
    std::vector<double> p(n, 0.0);
    for (int w = 0; w <= max_w; ++w) {
      for (int s = 0; s <= n - w; ++s) {
        for (int i = s; i < s + w; ++i) p[i] += 1.0 / (max_w + 1) / (n - w + 1);
      }
    }
    return p;
  };
  const auto pf = coverage(F, cfg.max_freq_width);
  const auto pt = coverage(T, static_cast<int>(std::floor(cfg.max_time_fraction * T)));
  double expected = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int d = 0; d < F; ++d) {
      const double free_f = std::pow(1.0 - pf[d], cfg.num_freq_masks);
      const double free_t = std::pow(1.0 - pt[t], cfg.num_time_masks);
      expected += 1.0 - free_f * free_t;
    }
  }
  expected /= T * F;

  Rng rng(11);
  double masked = 0.0;
  const int reps = 1000;
  for (int rep = 0; rep < reps; ++rep) masked += spec_augment_mask(T, F, cfg, rng).cast<double>().mean();
  CHECK(masked / reps == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("spec augment rejects unsupported settings") {
  Rng rng(1);
  SpecAugmentConfig warp;
  warp.time_warp = true;
  CHECK_THROWS_AS(spec_augment_mask(10, 5, warp, rng), ConfigError);
  SpecAugmentConfig many;
  many.num_time_masks = 3;
  CHECK_THROWS_AS(spec_augment_mask(10, 5, many, rng), ConfigError);
}
