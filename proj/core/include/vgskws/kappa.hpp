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

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vgskws {

/// Normalised Cohen kappa of two binary vectors.
struct KappaResult {
  double p_o = 0.0;
  double p_e = 0.0;
  double p_max = 0.0;
  double kappa = 0.0;
  double kappa_max = 0.0;
  double kappa_norm = 0.0;
  /// p_e = 1 or kappa_max = 0; the kappa fields that divide by zero are NaN.
  bool degenerate = false;
};

/// Throws ShapeError on length mismatch or empty input.
KappaResult normalised_kappa(const std::vector<bool>& a, const std::vector<bool>& b);

struct PresenceTable {
  std::vector<std::string> ids;       // sample ids (rows)
  std::vector<std::string> keywords;  // columns
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> present;  // ids x keywords
};

struct CooccurrenceResult {
  std::vector<std::string> row_keywords;
  std::vector<std::string> col_keywords;
  Eigen::MatrixXd kappa_norm;  // NaN where degenerate
  /// Square matrices only: mean diagonal, mean off-diagonal (finite
  /// entries) and the fraction of rows whose maximum lies on the diagonal.
  double diagonal_mean = 0.0;
  double off_diagonal_mean = 0.0;
  double diagonal_argmax_fraction = 0.0;
};

/// Entry (i, j) = normalised kappa of a's keyword i and b's keyword j over
/// the shared sample ids (rows are matched by id).  Throws ShapeError when
/// the id sets differ.
CooccurrenceResult cooccurrence_matrix(const PresenceTable& a, const PresenceTable& b);

}  // namespace vgskws
