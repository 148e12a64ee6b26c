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
#include <random>
#include <string_view>

namespace vgskws {

using Rng = std::mt19937_64;

/// Derives an independent, reproducible random stream from a base seed and
/// a sequence of labels.  Two calls with the same arguments yield generators
/// in identical states regardless of call order or thread.
class SeedSequence {
 public:
  explicit SeedSequence(std::uint64_t seed) : state_(mix(seed ^ 0x6a09e667f3bcc908ULL)) {}

  SeedSequence& with(std::uint64_t v) {
    state_ = mix(state_ ^ mix(v + 0x9e3779b97f4a7c15ULL));
    return *this;
  }
  SeedSequence& with(std::string_view s);

  std::uint64_t value() const { return state_; }
  Rng rng() const { return Rng(state_); }

 private:
  static std::uint64_t mix(std::uint64_t z);
  std::uint64_t state_;
};

/// Uniform double in [0, 1) built from 53 random bits.
double uniform01(Rng& rng);

/// Uniform integer in [lo, hi], inclusive.
int uniform_int(Rng& rng, int lo, int hi);

/// Standard normal draw (Box-Muller), stable across standard libraries.
double standard_normal(Rng& rng);

}  // namespace vgskws
