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

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vgskws/features.hpp"
#include "vgskws/model.hpp"

namespace vgskws {

enum class LocMethod { kGradCam, kScoreAgg, kAttention, kMaskedIn, kMaskedOut };
std::string to_string(LocMethod m);
LocMethod parse_loc_method(const std::string& text);
/// Whether `m` can be applied to models of architecture `a`.
bool supports(Architecture a, LocMethod m);

/// Per-keyword score track.  times_s[i] is the time assigned to score i and
/// is non-decreasing in i.
struct LocalisationScores {
  LocMethod method = LocMethod::kAttention;
  std::size_t keyword = 0;
  std::vector<double> scores;
  std::vector<double> times_s;
  /// Masked methods only: (start, end) of each scored segment, seconds.
  std::vector<std::pair<double, double>> spans_s;

  double time_of(std::size_t i) const { return times_s.at(i); }
};

struct MaskedConfig {
  double min_width_s = 0.2;
  double max_width_s = 0.6;
  double width_step_s = 0.1;
  double overlap_s = 0.03;  // stride = width - overlap
};

/// Segment in frames, [start, end).
struct Segment {
  Eigen::Index start = 0;
  Eigen::Index end = 0;
  bool operator==(const Segment&) const = default;
};

/// Segments of every width on the grid.  For each width, consecutive
/// segments overlap by cfg.overlap_s; a final partial segment is kept when
/// at least min_width_s long, otherwise a full-width segment ending at the
/// utterance end is used so the union covers the utterance.  Sorted by
/// midpoint, then width.  Throws RangeError when the utterance is shorter
/// than min_width_s.
std::vector<Segment> masking_segments(Eigen::Index frames, double frame_hop_s, const MaskedConfig& cfg);

LocalisationScores locate_attention(const ForwardTrace& trace, std::size_t w);
LocalisationScores locate_score_agg(const ForwardTrace& trace, std::size_t w);

/// Mean gradient of y_hat[w] over time, per encoder channel (length E).
Eigen::VectorXd gradcam_weights(const Model& model, const Eigen::MatrixXd& H, std::size_t w);
LocalisationScores locate_gradcam(const Model& model, const FeatureSequence& f, std::size_t w);
LocalisationScores locate_gradcam(const Model& model, const ForwardTrace& trace, std::size_t w);

enum class MaskMode { kIn, kOut };
LocalisationScores locate_masked(const Model& model, const FeatureSequence& f, std::size_t w,
                                 MaskMode mode, const MaskedConfig& cfg = {});
/// One pass per segment, scores for every keyword.
std::vector<LocalisationScores> locate_masked_all(const Model& model, const FeatureSequence& f,
                                                  MaskMode mode, const MaskedConfig& cfg = {});

/// Index of the highest score, earliest on ties.
std::size_t argmax_index(const LocalisationScores& scores);
/// time_of(argmax_index).
double argmax_location(const LocalisationScores& scores);

/// All keywords of one utterance with `method`.  Throws ConfigError when
/// the method does not apply to the model's architecture.
std::vector<LocalisationScores> localise_all(const Model& model, const FeatureSequence& f,
                                             const ForwardTrace& trace, LocMethod method,
                                             const MaskedConfig& mcfg = {});

/// One line of a score dump.
struct ScoreRecord {
  std::string utt_id;
  std::string keyword;
  std::string method;
  double detection_score = 0.0;
  std::vector<double> scores;
  std::vector<double> times_s;
  bool operator==(const ScoreRecord&) const = default;
};

void write_score_dump(const std::vector<ScoreRecord>& records, const std::filesystem::path& path);
std::vector<ScoreRecord> read_score_dump(const std::filesystem::path& path);

}  // namespace vgskws
