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

#include "vgskws/layers.hpp"

#include <cmath>
#include <limits>

#include "vgskws/error.hpp"

namespace vgskws::nn {

std::size_t ParameterStore::add(std::string name, Index rows, Index cols) {
  names_.push_back(std::move(name));
  values_.push_back(Matrix::Zero(rows, cols));
  return values_.size() - 1;
}

std::size_t ParameterStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw ShapeError("model", "no parameter named '" + name + "'");
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

std::vector<Matrix> ParameterStore::zeros_like() const {
  std::vector<Matrix> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.push_back(Matrix::Zero(v.rows(), v.cols()));
  return out;
}

void add_into(Gradients& acc, const Gradients& g) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

void scale(Gradients& g, double s) {
  for (auto& m : g) m *= s;
}

void init_uniform_fan_in(Matrix& m, Index fan_in, double gain, Rng& rng) {
  const double bound = gain * std::sqrt(3.0 / static_cast<double>(std::max<Index>(fan_in, 1)));
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = bound * (2.0 * uniform01(rng) - 1.0);
  }
}

Matrix Conv1d::forward(const ParameterStore& p, const Matrix& x, Matrix* cols_cache) const {
  const Index T = x.cols();
  const Index Tout = output_length(T);
  Matrix cols = Matrix::Zero(in_channels * kernel, Tout);
  for (Index c = 0; c < in_channels; ++c) {
    for (Index j = 0; j < kernel; ++j) {
      const Index row = c * kernel + j;
      // cols(row, t) = x(c, t + j - padding) where in range.
      const Index t_lo = std::max<Index>(0, padding - j);
      const Index t_hi = std::min<Index>(Tout, T + padding - j);
      if (t_hi > t_lo) cols.row(row).segment(t_lo, t_hi - t_lo) = x.row(c).segment(t_lo + j - padding, t_hi - t_lo);
    }
  }
  Matrix y = p[weight] * cols;
  y.colwise() += p[bias].col(0);
  if (cols_cache) *cols_cache = std::move(cols);
  return y;
}

Matrix Conv1d::backward(const ParameterStore& p, const Matrix& cols, Index input_length, const Matrix& dy,
                        Gradients& g) const {
  g[weight].noalias() += dy * cols.transpose();
  g[bias].col(0) += dy.rowwise().sum();
  const Matrix dcols = p[weight].transpose() * dy;
  const Index Tout = dy.cols();
  Matrix dx = Matrix::Zero(in_channels, input_length);
  for (Index c = 0; c < in_channels; ++c) {
    for (Index j = 0; j < kernel; ++j) {
      const Index row = c * kernel + j;
      const Index t_lo = std::max<Index>(0, padding - j);
      const Index t_hi = std::min<Index>(Tout, input_length + padding - j);
      if (t_hi > t_lo) dx.row(c).segment(t_lo + j - padding, t_hi - t_lo) += dcols.row(row).segment(t_lo, t_hi - t_lo);
    }
  }
  return dx;
}

Matrix Linear::forward(const ParameterStore& p, const Matrix& x) const {
  Matrix y = p[weight] * x;
  y.colwise() += p[bias].col(0);
  return y;
}

Matrix Linear::backward(const ParameterStore& p, const Matrix& x, const Matrix& dy, Gradients& g) const {
  g[weight].noalias() += dy * x.transpose();
  g[bias].col(0) += dy.rowwise().sum();
  return p[weight].transpose() * dy;
}

Matrix max_pool_time(const Matrix& x, Index valid, Index width, std::vector<Index>* argmax) {
  const Index out_len = ceil_div(x.cols(), width);
  const Index out_valid = ceil_div(valid, width);
  Matrix y = Matrix::Zero(x.rows(), out_len);
  if (argmax) argmax->assign(static_cast<std::size_t>(x.rows() * out_valid), 0);
  for (Index j = 0; j < out_valid; ++j) {
    const Index lo = j * width;
    const Index hi = std::min(lo + width, valid);
    for (Index c = 0; c < x.rows(); ++c) {
      Index best = lo;
      for (Index t = lo + 1; t < hi; ++t) {
        if (x(c, t) > x(c, best)) best = t;
      }
      y(c, j) = x(c, best);
      if (argmax) (*argmax)[static_cast<std::size_t>(j * x.rows() + c)] = best;
    }
  }
  return y;
}

Matrix max_pool_time_backward(const Matrix& dy, const std::vector<Index>& argmax, Index input_length,
                              Index valid_out) {
  Matrix dx = Matrix::Zero(dy.rows(), input_length);
  for (Index j = 0; j < valid_out; ++j) {
    for (Index c = 0; c < dy.rows(); ++c) dx(c, argmax[static_cast<std::size_t>(j * dy.rows() + c)]) += dy(c, j);
  }
  return dx;
}

Vector log_mean_exp_rows(const Matrix& h, double r) {
  const Vector mx = h.rowwise().maxCoeff();
  Vector out(h.rows());
  const double log_t = std::log(static_cast<double>(h.cols()));
  for (Index e = 0; e < h.rows(); ++e) {
    const double s = (r * (h.row(e).array() - mx[e])).exp().sum();
    out[e] = mx[e] + (std::log(s) - log_t) / r;
  }
  return out;
}

Matrix log_mean_exp_rows_grad(const Matrix& h, double r) {
  return softmax_rows(r * h);
}

Matrix softmax_rows(const Matrix& scores) {
  Matrix out(scores.rows(), scores.cols());
  for (Index i = 0; i < scores.rows(); ++i) {
    const double mx = scores.row(i).maxCoeff();
    out.row(i) = (scores.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

}  // namespace vgskws::nn
