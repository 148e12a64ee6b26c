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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vgskws/rng.hpp"

namespace vgskws::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Named, ordered parameter tensors (stored as matrices).
class ParameterStore {
 public:
  std::size_t add(std::string name, Index rows, Index cols);

  std::size_t size() const { return values_.size(); }
  Matrix& operator[](std::size_t i) { return values_[i]; }
  const Matrix& operator[](std::size_t i) const { return values_[i]; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t find(const std::string& name) const;  // throws if absent

  std::size_t scalar_count() const;
  /// Zero-filled tensors with matching shapes.
  std::vector<Matrix> zeros_like() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

using Gradients = std::vector<Matrix>;

void add_into(Gradients& acc, const Gradients& g);
void scale(Gradients& g, double s);

/// Uniform with variance gain^2 / fan_in; gain sqrt(2) suits ReLU layers.
void init_uniform_fan_in(Matrix& m, Index fan_in, double gain, Rng& rng);

/// 1-D convolution over time, stride 1.  Activations are channels x time.
struct Conv1d {
  Index in_channels = 0;
  Index out_channels = 0;
  Index kernel = 1;
  Index padding = 0;
  std::size_t weight = 0;  // out x (in * kernel), column c * kernel + j
  std::size_t bias = 0;    // out x 1

  Index output_length(Index t) const { return t + 2 * padding - kernel + 1; }

  Matrix forward(const ParameterStore& p, const Matrix& x, Matrix* cols_cache) const;
  /// Accumulates weight/bias gradients; returns d loss / d x.
  Matrix backward(const ParameterStore& p, const Matrix& cols, Index input_length,
                  const Matrix& dy, Gradients& g) const;
};

/// Fully connected layer applied column-wise: y = W x + b.
struct Linear {
  Index in_features = 0;
  Index out_features = 0;
  std::size_t weight = 0;
  std::size_t bias = 0;

  Matrix forward(const ParameterStore& p, const Matrix& x) const;
  Matrix backward(const ParameterStore& p, const Matrix& x, const Matrix& dy, Gradients& g) const;
};

/// Max pooling over `width` steps with ceil semantics, restricted to the
/// first `valid` columns.  Columns past ceil(valid / width) are zero.
Matrix max_pool_time(const Matrix& x, Index valid, Index width, std::vector<Index>* argmax);
Matrix max_pool_time_backward(const Matrix& dy, const std::vector<Index>& argmax,
                              Index input_length, Index valid_out);

inline Index ceil_div(Index a, Index b) { return (a + b - 1) / b; }

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

/// (1/r) log mean_t exp(r * row), per row, with max subtraction.
Vector log_mean_exp_rows(const Matrix& h, double r);
/// d out_e / d h_{e,t}: softmax_t(r * h_e).
Matrix log_mean_exp_rows_grad(const Matrix& h, double r);

/// Row-wise softmax.
Matrix softmax_rows(const Matrix& scores);

}  // namespace vgskws::nn
