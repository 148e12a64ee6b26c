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

#include "vgskws/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vgskws/error.hpp"

namespace vgskws {

namespace {

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

void save(const std::filesystem::path& path, const std::string& body, int width, int height) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("plot", "cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body << "</svg>\n";
}

}  // namespace

void write_bar_chart_svg(const std::filesystem::path& path, const std::string& title,
                         const std::vector<std::string>& labels, const std::vector<std::optional<double>>& values,
                         const std::string& y_label) {
  if (labels.size() != values.size()) throw ShapeError("plot", "labels and values differ in length");
  const int left = 50, top = 30, plot_h = 220, bar_w = 18, gap = 6;
  const int width = left + 20 + static_cast<int>(labels.size()) * (bar_w + gap);
  const int height = top + plot_h + 90;
  std::ostringstream b;
  b << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << esc(title) << "</text>\n";
  b << "<text x=\"12\" y=\"" << top + plot_h / 2 << "\" transform=\"rotate(-90 12 " << top + plot_h / 2
    << ")\" text-anchor=\"middle\">" << esc(y_label) << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double y = top + plot_h - plot_h * k / 4.0;
    b << "<line x1=\"" << left << "\" x2=\"" << width - 10 << "\" y1=\"" << num(y) << "\" y2=\"" << num(y)
      << "\" stroke=\"#ddd\"/>\n";
    b << "<text x=\"" << left - 4 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << num(k / 4.0) << "</text>\n";
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int x = left + 10 + static_cast<int>(i) * (bar_w + gap);
    if (values[i]) {
      const double v = std::clamp(*values[i], 0.0, 1.0);
      const double h = v * plot_h;
      b << "<rect x=\"" << x << "\" y=\"" << num(top + plot_h - h) << "\" width=\"" << bar_w << "\" height=\""
        << num(h) << "\" fill=\"#4477aa\"/>\n";
    } else {
      b << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << top + plot_h - 4 << "\" text-anchor=\"middle\" fill=\"#999\">-</text>\n";
    }
    const int ly = top + plot_h + 8;
    b << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << ly << "\" transform=\"rotate(60 " << x + bar_w / 2 << ' ' << ly
      << ")\">" << esc(labels[i]) << "</text>\n";
  }
  save(path, b.str(), width, height);
}

void write_track_svg(const std::filesystem::path& path, const std::string& title, const std::vector<double>& times_s,
                     const std::vector<double>& scores, const std::vector<std::pair<double, double>>& intervals,
                     double tau, double duration_s) {
  if (times_s.size() != scores.size()) throw ShapeError("plot", "times and scores differ in length");
  const int left = 50, top = 30, plot_w = 600, plot_h = 180;
  const int width = left + plot_w + 20, height = top + plot_h + 40;
  const double dur = duration_s > 0.0 ? duration_s : 1.0;
  double lo = 0.0, hi = 1e-12;
  for (double s : scores) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const auto X = [&](double t) { return left + plot_w * std::clamp(t / dur, 0.0, 1.0); };
  const auto Y = [&](double s) { return top + plot_h - plot_h * (s - lo) / (hi - lo); };
  std::ostringstream b;
  b << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << esc(title) << "</text>\n";
  for (const auto& [s, e] : intervals) {
    b << "<rect x=\"" << num(X(s)) << "\" y=\"" << top << "\" width=\"" << num(X(e) - X(s)) << "\" height=\"" << plot_h
      << "\" fill=\"#cce5cc\"/>\n";
  }
  b << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
    << "\" fill=\"none\" stroke=\"#333\"/>\n";
  if (!scores.empty()) {
    b << "<polyline fill=\"none\" stroke=\"#aa3377\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < scores.size(); ++i) b << (i ? " " : "") << num(X(times_s[i])) << ',' << num(Y(scores[i]));
    b << "\"/>\n";
  }
  if (std::isfinite(tau)) {
    b << "<line x1=\"" << num(X(tau)) << "\" x2=\"" << num(X(tau)) << "\" y1=\"" << top << "\" y2=\"" << top + plot_h
      << "\" stroke=\"#222\" stroke-dasharray=\"4 3\"/>\n";
  }
  b << "<text x=\"" << left << "\" y=\"" << top + plot_h + 16 << "\">0 s</text>\n";
  b << "<text x=\"" << left + plot_w << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"end\">" << num(dur)
    << " s</text>\n";
  save(path, b.str(), width, height);
}

void write_heatmap_svg(const std::filesystem::path& path, const std::string& title,
                       const std::vector<std::string>& row_labels, const std::vector<std::string>& col_labels,
                       const Eigen::MatrixXd& values) {
  if (values.rows() != static_cast<Eigen::Index>(row_labels.size()) ||
      values.cols() != static_cast<Eigen::Index>(col_labels.size()))
    throw ShapeError("plot", "heatmap labels do not match the matrix");
  const int cell = 16, left = 110, top = 110;
  const int width = left + cell * static_cast<int>(values.cols()) + 20;
  const int height = top + cell * static_cast<int>(values.rows()) + 20;
  std::ostringstream b;
  b << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << esc(title) << "</text>\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    b << "<text x=\"" << left - 4 << "\" y=\"" << top + cell * i + 12 << "\" text-anchor=\"end\">"
      << esc(row_labels[static_cast<std::size_t>(i)]) << "</text>\n";
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const double v = values(i, j);
      std::string fill = "#eeeeee";
      if (std::isfinite(v)) {
        const double c = std::clamp(v, -1.0, 1.0);
        const int r = c >= 0 ? static_cast<int>(255 - 200 * c) : 255;
        const int g = static_cast<int>(255 - 200 * std::abs(c));
        const int bl = c <= 0 ? static_cast<int>(255 + 200 * c) : 255;
        std::ostringstream f;
        f << "rgb(" << r << ',' << g << ',' << bl << ')';
        fill = f.str();
      }
      b << "<rect x=\"" << left + cell * j << "\" y=\"" << top + cell * i << "\" width=\"" << cell << "\" height=\""
        << cell << "\" fill=\"" << fill << "\"/>\n";
    }
  }
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const int x = left + cell * static_cast<int>(j) + 12;
    b << "<text x=\"" << x << "\" y=\"" << top - 4 << "\" transform=\"rotate(-60 " << x << ' ' << top - 4 << ")\">"
      << esc(col_labels[static_cast<std::size_t>(j)]) << "</text>\n";
  }
  save(path, b.str(), width, height);
}

}  // namespace vgskws
