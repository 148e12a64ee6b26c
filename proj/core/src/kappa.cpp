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

#include "vgskws/kappa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "vgskws/error.hpp"

namespace vgskws {

KappaResult normalised_kappa(const std::vector<bool>& a, const std::vector<bool>& b) {
  if (a.size() != b.size())
    throw ShapeError("kappa", "vectors differ in length (" + std::to_string(a.size()) + " vs " +
                                  std::to_string(b.size()) + ")");
  if (a.empty()) throw ShapeError("kappa", "empty vectors");
  const double n = static_cast<double>(a.size());
  std::size_t agree = 0, ones_a = 0, ones_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    agree += a[i] == b[i] ? 1 : 0;
    ones_a += a[i] ? 1 : 0;
    ones_b += b[i] ? 1 : 0;
  }
  const double p1a = static_cast<double>(ones_a) / n;
  const double p1b = static_cast<double>(ones_b) / n;
  KappaResult r;
  r.p_o = static_cast<double>(agree) / n;
  r.p_e = p1a * p1b + (1.0 - p1a) * (1.0 - p1b);
  r.p_max = std::min(p1a, p1b) + std::min(1.0 - p1a, 1.0 - p1b);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (r.p_e >= 1.0) {
    r.degenerate = true;
    r.kappa = r.kappa_max = r.kappa_norm = nan;
    return r;
  }
  r.kappa = (r.p_o - r.p_e) / (1.0 - r.p_e);
  r.kappa_max = (r.p_max - r.p_e) / (1.0 - r.p_e);
  if (r.kappa_max == 0.0) {
    r.degenerate = true;
    r.kappa_norm = nan;
  } else {
    r.kappa_norm = r.kappa / r.kappa_max;
  }
  return r;
}

CooccurrenceResult cooccurrence_matrix(const PresenceTable& a, const PresenceTable& b) {
  if (a.present.rows() != static_cast<Eigen::Index>(a.ids.size()) ||
      a.present.cols() != static_cast<Eigen::Index>(a.keywords.size()) ||
      b.present.rows() != static_cast<Eigen::Index>(b.ids.size()) ||
      b.present.cols() != static_cast<Eigen::Index>(b.keywords.size()))
    throw ShapeError("kappa", "presence table shape does not match its ids and keywords");
  if (a.ids.size() != b.ids.size()) throw ShapeError("kappa", "presence tables cover different sample ids");
  std::unordered_map<std::string, Eigen::Index> row_b;
  for (std::size_t i = 0; i < b.ids.size(); ++i) row_b.emplace(b.ids[i], static_cast<Eigen::Index>(i));
  std::vector<Eigen::Index> match(a.ids.size());
  for (std::size_t i = 0; i < a.ids.size(); ++i) {
    auto it = row_b.find(a.ids[i]);
    if (it == row_b.end()) throw ShapeError("kappa", "sample id '" + a.ids[i] + "' missing from the second table");
    match[i] = it->second;
  }

  CooccurrenceResult r;
  r.row_keywords = a.keywords;
  r.col_keywords = b.keywords;
  const auto I = a.present.cols();
  const auto J = b.present.cols();
  r.kappa_norm.resize(I, J);
  std::vector<std::vector<bool>> cols_a(static_cast<std::size_t>(I)), cols_b(static_cast<std::size_t>(J));
  for (Eigen::Index i = 0; i < I; ++i) {
    for (std::size_t n = 0; n < a.ids.size(); ++n) cols_a[static_cast<std::size_t>(i)].push_back(a.present(static_cast<Eigen::Index>(n), i));
  }
  for (Eigen::Index j = 0; j < J; ++j) {
    for (std::size_t n = 0; n < a.ids.size(); ++n) cols_b[static_cast<std::size_t>(j)].push_back(b.present(match[n], j));
  }
  for (Eigen::Index i = 0; i < I; ++i) {
    for (Eigen::Index j = 0; j < J; ++j)
      r.kappa_norm(i, j) = normalised_kappa(cols_a[static_cast<std::size_t>(i)], cols_b[static_cast<std::size_t>(j)]).kappa_norm;
  }

  if (I == J && I > 0) {
    double diag = 0.0, off = 0.0;
    std::size_t nd = 0, no = 0, wins = 0, rows = 0;
    for (Eigen::Index i = 0; i < I; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      Eigen::Index arg = -1;
      for (Eigen::Index j = 0; j < J; ++j) {
        const double v = r.kappa_norm(i, j);
        if (!std::isfinite(v)) continue;
        if (i == j) {
          diag += v;
          ++nd;
        } else {
          off += v;
          ++no;
        }
        if (v > best) {
          best = v;
          arg = j;
        }
      }
      if (arg >= 0) {
        ++rows;
        wins += arg == i ? 1 : 0;
      }
    }
    r.diagonal_mean = nd ? diag / static_cast<double>(nd) : 0.0;
    r.off_diagonal_mean = no ? off / static_cast<double>(no) : 0.0;
    r.diagonal_argmax_fraction = rows ? static_cast<double>(wins) / static_cast<double>(rows) : 0.0;
  }
  return r;
}

}  // namespace vgskws
