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

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vgskws/corpus.hpp"

namespace vgskws {

enum class TargetKind { kVisual, kBow };
std::string to_string(TargetKind kind);
TargetKind parse_target_kind(const std::string& text);

/// V per-keyword occurrence probabilities.
struct SupervisionTarget {
  Eigen::VectorXd probs;
  TargetKind kind = TargetKind::kBow;
};

/// probs[w] = 1 iff keyword w occurs in the transcript (case-folded exact
/// match; multiplicity ignored).
SupervisionTarget bow_targets(const std::vector<std::string>& transcript, const Vocabulary& vocab);

/// Reads a keyword -> probability JSON object.  Missing keywords default to
/// 0; unknown keywords and values outside [0, 1] are rejected.
SupervisionTarget load_visual_targets(const std::filesystem::path& path, const Vocabulary& vocab);
void save_visual_targets(const SupervisionTarget& target, const Vocabulary& vocab,
                         const std::filesystem::path& path);

/// Target of the requested kind for a manifest record.
SupervisionTarget resolve_target(const UtteranceRecord& record, const Vocabulary& vocab,
                                 TargetKind kind);

}  // namespace vgskws
