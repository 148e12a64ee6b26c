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

#include "doctest.h"
#include "oracles.hpp"
#include "vgskws/error.hpp"
#include "vgskws/kappa.hpp"
#include "vgskws/rng.hpp"

using namespace vgskws;

namespace {

std::vector<bool> random_bits(std::size_t n, double p, Rng& rng) {
  std::vector<bool> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = uniform01(rng) < p;
  return v;
}

PresenceTable random_table(std::size_t samples, std::size_t keywords, Rng& rng) {
  PresenceTable t;
  t.present.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(keywords));
  for (std::size_t i = 0; i < samples; ++i) {
    t.ids.push_back("s" + std::to_string(i));
    for (std::size_t k = 0; k < keywords; ++k)
      t.present(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = uniform01(rng) < 0.3;
  }
  for (std::size_t k = 0; k < keywords; ++k) t.keywords.push_back("k" + std::to_string(k));
  return t;
}

}  // namespace

TEST_CASE("perfect agreement gives normalised kappa one") {
  const auto r = normalised_kappa({true, false, true}, {true, false, true});
  CHECK(r.kappa_norm == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.p_o == 1.0);
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("total disagreement is negative") {
  const auto r = normalised_kappa({true, false}, {false, true});
  CHECK(r.p_o == 0.0);
  CHECK(r.kappa < 0.0);
  CHECK(r.kappa_norm < 0.0);
}

TEST_CASE("constant vectors are degenerate") {
  const auto r = normalised_kappa({true, true, true}, {true, true, true});
  CHECK(r.degenerate);
  CHECK(std::isnan(r.kappa_norm));
  CHECK_THROWS_AS(normalised_kappa({true}, {true, false}), ShapeError);
}

TEST_CASE("kappa matches the contingency-table formula") {
  Rng rng(30);
  for (int rep = 0; rep < 200; ++rep) {
    const auto a = random_bits(500, 0.1 + 0.8 * uniform01(rng), rng);
    auto b = random_bits(500, 0.1 + 0.8 * uniform01(rng), rng);
    if (rep % 3 == 0) {
      for (std::size_t i = 0; i < b.size(); ++i) {
        if (uniform01(rng) < 0.7) b[i] = a[i];
      }
    }
    const auto lib = normalised_kappa(a, b);
    const auto ref = oracle::kappa_reference(a, b);
    CHECK(std::abs(lib.kappa - ref.kappa) < 1e-12);
    CHECK(std::abs(lib.kappa_norm - ref.kappa_norm) < 1e-12);
  }
}

TEST_CASE("independent random vectors have kappa near zero") {
  Rng rng(31);
  double sum = 0.0;
  for (int rep = 0; rep < 200; ++rep) sum += normalised_kappa(random_bits(500, 0.3, rng), random_bits(500, 0.3, rng)).kappa;
  CHECK(std::abs(sum / 200.0) < 0.05);
}

TEST_CASE("identical tables give a unit diagonal") {
  Rng rng(32);
  const auto t = random_table(200, 6, rng);
  const auto r = cooccurrence_matrix(t, t);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(r.kappa_norm(i, i) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.diagonal_mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.diagonal_argmax_fraction == 1.0);
  CHECK(r.off_diagonal_mean < 0.2);
}

TEST_CASE("independent tables have near-zero off-diagonal agreement") {
  Rng rng(33);
  const auto a = random_table(500, 8, rng);
  const auto b = random_table(500, 8, rng);
  const auto r = cooccurrence_matrix(a, b);
  CHECK(std::abs(r.off_diagonal_mean) < 0.05);
}

TEST_CASE("rows are matched by sample id") {
  Rng rng(34);
  const auto a = random_table(100, 4, rng);
  PresenceTable b = a;
  std::reverse(b.ids.begin(), b.ids.end());
  b.present = a.present.colwise().reverse().eval();
  const auto r = cooccurrence_matrix(a, b);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(r.kappa_norm(i, i) == doctest::Approx(1.0).epsilon(1e-12));
  b.ids[0] = "other";
  CHECK_THROWS_AS(cooccurrence_matrix(a, b), ShapeError);
}

TEST_CASE("a translation that keeps most keywords favours the diagonal") {
  Rng rng(35);
  const auto en = random_table(400, 6, rng);
  PresenceTable yo = en;
  for (Eigen::Index i = 0; i < yo.present.rows(); ++i) {
    for (Eigen::Index k = 0; k < yo.present.cols(); ++k) {
      if (uniform01(rng) < 0.15) yo.present(i, k) = !yo.present(i, k);
    }
  }
  const auto r = cooccurrence_matrix(en, yo);
  CHECK(r.diagonal_mean > r.off_diagonal_mean);
  CHECK(r.diagonal_argmax_fraction == 1.0);
}
