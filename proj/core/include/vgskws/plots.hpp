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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace vgskws {

/// Static SVG figures.  Undefined bar values are drawn as an "n/a" label.
void write_bar_chart_svg(const std::filesystem::path& path, const std::string& title,
                         const std::vector<std::string>& labels,
                         const std::vector<std::optional<double>>& values,
                         const std::string& y_label);

/// Localisation score track with the ground-truth intervals shaded and
/// the predicted location marked.
void write_track_svg(const std::filesystem::path& path, const std::string& title,
                     const std::vector<double>& times_s, const std::vector<double>& scores,
                     const std::vector<std::pair<double, double>>& intervals, double tau,
                     double duration_s);

void write_heatmap_svg(const std::filesystem::path& path, const std::string& title,
                       const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels, const Eigen::MatrixXd& values);

}  // namespace vgskws
