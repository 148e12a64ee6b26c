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

#include "vgskws/features.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "vgskws/error.hpp"

namespace vgskws {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "feature files assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'V', 'G', 'S', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const fs::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError(path.string(), 0, "truncated feature file");
  return v;
}

FeatureHeader read_header(std::istream& in, const fs::path& path) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ParseError(path.string(), 0, "bad feature file magic");
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion)
    throw ParseError(path.string(), 0, "unsupported feature file version " + std::to_string(version));
  FeatureHeader h;
  h.frames = get<std::uint32_t>(in, path);
  h.dims = get<std::uint32_t>(in, path);
  h.frame_hop_s = get<double>(in, path);
  h.frame_window_s = get<double>(in, path);
  return h;
}

}  // namespace

void validate_features(const FeatureSequence& f) {
  if (f.frames() < 1) throw RangeError("features", "feature sequence has no frames");
  if (!f.values.allFinite()) throw RangeError("features", "feature sequence has non-finite entries");
}

void write_features(const FeatureSequence& f, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("features", "cannot write " + path.string());
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(f.frames()));
  put(out, static_cast<std::uint32_t>(f.dims()));
  put(out, f.frame_hop_s);
  put(out, f.frame_window_s);
  std::vector<float> row(static_cast<std::size_t>(f.dims()));
  for (Eigen::Index t = 0; t < f.frames(); ++t) {
    for (Eigen::Index d = 0; d < f.dims(); ++d) row[static_cast<std::size_t>(d)] = static_cast<float>(f.values(t, d));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

FeatureHeader read_feature_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("features", "cannot open " + path.string());
  return read_header(in, path);
}

FeatureSequence read_features(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("features", "cannot open " + path.string());
  const FeatureHeader h = read_header(in, path);
  FeatureSequence f;
  f.frame_hop_s = h.frame_hop_s;
  f.frame_window_s = h.frame_window_s;
  f.values.resize(h.frames, h.dims);
  std::vector<float> row(h.dims);
  for (std::uint32_t t = 0; t < h.frames; ++t) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw ParseError(path.string(), 0, "truncated feature data");
    for (std::uint32_t d = 0; d < h.dims; ++d) f.values(t, d) = row[d];
  }
  return f;
}

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// num_filters x (fft_size / 2 + 1) triangular weights.
Eigen::MatrixXd mel_filterbank(const MfccConfig& cfg, int sample_rate) {
  const int bins = cfg.fft_size / 2 + 1;
  const double high = std::min(cfg.high_hz, sample_rate / 2.0);
  const double mlo = hz_to_mel(cfg.low_hz), mhi = hz_to_mel(high);
  std::vector<double> edges(static_cast<std::size_t>(cfg.num_filters + 2));
  for (int i = 0; i < cfg.num_filters + 2; ++i)
    edges[static_cast<std::size_t>(i)] = mel_to_hz(mlo + (mhi - mlo) * i / (cfg.num_filters + 1));
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.num_filters, bins);
  for (int m = 0; m < cfg.num_filters; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)], mid = edges[static_cast<std::size_t>(m + 1)],
                 hi = edges[static_cast<std::size_t>(m + 2)];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / cfg.fft_size;
      if (f > lo && f <= mid)
        fb(m, k) = (f - lo) / (mid - lo);
      else if (f > mid && f < hi)
        fb(m, k) = (hi - f) / (hi - mid);
    }
  }
  return fb;
}

Eigen::MatrixXd regression_deltas(const Eigen::MatrixXd& c, int window) {
  const Eigen::Index T = c.rows();
  double denom = 0.0;
  for (int n = 1; n <= window; ++n) denom += 2.0 * n * n;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(T, c.cols());
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int n = 1; n <= window; ++n) {
      const Eigen::Index ahead = std::min<Eigen::Index>(t + n, T - 1);
      const Eigen::Index behind = std::max<Eigen::Index>(t - n, 0);
      d.row(t) += n * (c.row(ahead) - c.row(behind));
    }
  }
  return d / denom;
}

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

FeatureSequence compute_mfcc(const std::vector<double>& samples, int sample_rate, const MfccConfig& cfg) {
  if (samples.empty()) throw RangeError("features", "empty waveform");
  for (double s : samples) {
    if (!std::isfinite(s)) throw RangeError("features", "waveform has non-finite samples");
  }
  if (sample_rate != cfg.sample_rate)
    throw RangeError("features", "expected " + std::to_string(cfg.sample_rate) + " Hz audio, got " +
                                     std::to_string(sample_rate) + " Hz; resample upstream");

  const auto frame_len = static_cast<std::size_t>(std::lround(cfg.window_s * sample_rate));
  const auto hop = static_cast<std::size_t>(std::lround(cfg.hop_s * sample_rate));
  if (frame_len > static_cast<std::size_t>(cfg.fft_size))
    throw ConfigError("fft_size smaller than the analysis window");
  const std::size_t n_frames = samples.size() < frame_len ? 1 : 1 + (samples.size() - frame_len) / hop;

  std::vector<double> emph(samples.size());
  emph[0] = samples[0];
  for (std::size_t i = 1; i < samples.size(); ++i) emph[i] = samples[i] - cfg.preemphasis * samples[i - 1];

  std::vector<double> window(frame_len);
  for (std::size_t n = 0; n < frame_len; ++n)
    window[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / (frame_len - 1));

  const Eigen::MatrixXd fb = mel_filterbank(cfg, sample_rate);
  const int bins = cfg.fft_size / 2 + 1;
  const int M = cfg.num_filters;

  Eigen::MatrixXd dct(cfg.num_ceps, M);
  for (int i = 0; i < cfg.num_ceps; ++i) {
    const double scale = i == 0 ? std::sqrt(1.0 / M) : std::sqrt(2.0 / M);
    for (int m = 0; m < M; ++m) dct(i, m) = scale * std::cos(std::numbers::pi * i * (m + 0.5) / M);
  }

  double* in = fftw_alloc_real(static_cast<std::size_t>(cfg.fft_size));
  fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(bins));
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(cfg.fft_size, in, out, FFTW_ESTIMATE);
  }

  Eigen::MatrixXd ceps(static_cast<Eigen::Index>(n_frames), cfg.num_ceps);
  Eigen::VectorXd power(bins);
  for (std::size_t t = 0; t < n_frames; ++t) {
    std::fill(in, in + cfg.fft_size, 0.0);
    for (std::size_t n = 0; n < frame_len; ++n) {
      const std::size_t i = t * hop + n;
      in[n] = i < emph.size() ? emph[i] * window[n] : 0.0;
    }
    fftw_execute(plan);
    for (int k = 0; k < bins; ++k) power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    Eigen::VectorXd logmel = (fb * power).array().max(1e-10).log().matrix();
    ceps.row(static_cast<Eigen::Index>(t)) = (dct * logmel).transpose();
  }

  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);

  Eigen::MatrixXd values = ceps;
  if (cfg.add_deltas) {
    const Eigen::MatrixXd d1 = regression_deltas(ceps, cfg.delta_window);
    const Eigen::MatrixXd d2 = regression_deltas(d1, cfg.delta_window);
    values.resize(ceps.rows(), 3 * cfg.num_ceps);
    values << ceps, d1, d2;
  }
  if (cfg.normalise) {
    const Eigen::RowVectorXd mean = values.colwise().mean();
    values.rowwise() -= mean;
    const Eigen::RowVectorXd sd = (values.array().square().colwise().mean()).sqrt().matrix();
    for (Eigen::Index d = 0; d < values.cols(); ++d) {
      if (sd[d] > 1e-10) values.col(d) /= sd[d];
    }
  }

  FeatureSequence f;
  f.values = std::move(values);
  f.frame_hop_s = static_cast<double>(hop) / sample_rate;
  f.frame_window_s = static_cast<double>(frame_len) / sample_rate;
  return f;
}

Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> spec_augment_mask(Eigen::Index frames, Eigen::Index dims,
                                                                     const SpecAugmentConfig& cfg, Rng& rng) {
  if (cfg.time_warp) throw ConfigError("spec_augment: time warping is not supported");
  if (cfg.num_freq_masks < 0 || cfg.num_freq_masks > 2 || cfg.num_time_masks < 0 || cfg.num_time_masks > 2)
    throw ConfigError("spec_augment: at most 2 frequency and 2 time masks");
  if (cfg.max_freq_width < 0 || cfg.max_freq_width > 8)
    throw ConfigError("spec_augment: frequency mask width must be in [0, 8]");
  if (cfg.max_time_fraction < 0.0 || cfg.max_time_fraction > 0.1)
    throw ConfigError("spec_augment: time mask fraction must be in [0, 0.1]");

  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(frames, dims, false);
  if (frames < 4) return mask;
  const int F = static_cast<int>(dims);
  const int T = static_cast<int>(frames);
  for (int i = 0; i < cfg.num_freq_masks; ++i) {
    const int w = uniform_int(rng, 0, std::min(cfg.max_freq_width, F));
    const int f0 = uniform_int(rng, 0, F - w);
    if (w > 0) mask.middleCols(f0, w) = true;
  }
  const int max_t = static_cast<int>(std::floor(cfg.max_time_fraction * T));
  for (int i = 0; i < cfg.num_time_masks; ++i) {
    const int w = uniform_int(rng, 0, max_t);
    const int t0 = uniform_int(rng, 0, T - w);
    if (w > 0) mask.middleRows(t0, w) = true;
  }
  return mask;
}

FeatureSequence spec_augment(const FeatureSequence& f, const SpecAugmentConfig& cfg, Rng& rng) {
  const auto mask = spec_augment_mask(f.frames(), f.dims(), cfg, rng);
  FeatureSequence out = f;
  const Eigen::RowVectorXd mean = f.values.colwise().mean();
  for (Eigen::Index d = 0; d < f.dims(); ++d) {
    for (Eigen::Index t = 0; t < f.frames(); ++t) {
      if (mask(t, d)) out.values(t, d) = mean[d];
    }
  }
  return out;
}

}  // namespace vgskws
