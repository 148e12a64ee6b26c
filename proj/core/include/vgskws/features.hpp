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

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "vgskws/rng.hpp"

namespace vgskws {

/// T x F time-frequency matrix; row t is frame t.
struct FeatureSequence {
  Eigen::MatrixXd values;
  double frame_hop_s = 0.010;
  double frame_window_s = 0.025;

  Eigen::Index frames() const { return values.rows(); }
  Eigen::Index dims() const { return values.cols(); }
  double duration_s() const { return static_cast<double>(frames()) * frame_hop_s; }
};

/// Throws RangeError on T = 0 or any non-finite entry.
void validate_features(const FeatureSequence& f);

/// Binary feature file: "VGSF" magic, u32 version, u32 T, u32 F, f64 hop,
/// f64 window, then T*F little-endian float32 values in row-major order.
void write_features(const FeatureSequence& f, const std::filesystem::path& path);
FeatureSequence read_features(const std::filesystem::path& path);

struct FeatureHeader {
  std::uint32_t frames = 0;
  std::uint32_t dims = 0;
  double frame_hop_s = 0.0;
  double frame_window_s = 0.0;
};
FeatureHeader read_feature_header(const std::filesystem::path& path);

struct MfccConfig {
  int sample_rate = 16000;
  double window_s = 0.025;
  double hop_s = 0.010;
  int fft_size = 512;
  int num_filters = 26;
  int num_ceps = 13;
  double low_hz = 20.0;
  double high_hz = 8000.0;
  double preemphasis = 0.97;
  int delta_window = 2;
  bool add_deltas = true;       // 13 + delta + delta-delta = 39
  bool normalise = true;        // per-utterance mean/variance per coefficient
};

/// Hamming-windowed power spectrum -> triangular mel filterbank -> log ->
/// orthonormal DCT-II, then regression deltas and per-utterance MVN.
FeatureSequence compute_mfcc(const std::vector<double>& samples, int sample_rate,
                             const MfccConfig& cfg = {});

struct SpecAugmentConfig {
  int num_freq_masks = 2;     // at most 2
  int max_freq_width = 8;     // coefficients
  int num_time_masks = 2;     // at most 2
  double max_time_fraction = 0.1;
  bool time_warp = false;     // not implemented; must stay false
};

/// Cell mask (T x F, true = masked) drawn from `rng`.  Mask widths are
/// uniform over [0, max]; positions uniform over valid offsets.
Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> spec_augment_mask(
    Eigen::Index frames, Eigen::Index dims, const SpecAugmentConfig& cfg, Rng& rng);

/// Replaces masked cells with the per-coefficient mean of `f`.
FeatureSequence spec_augment(const FeatureSequence& f, const SpecAugmentConfig& cfg, Rng& rng);

}  // namespace vgskws
