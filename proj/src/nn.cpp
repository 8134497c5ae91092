// Copyright 2026 The MCLRec Authors.
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

#include "mclrec/nn.hpp"

#include <cmath>

namespace mclrec::nn {

LinearParams LinearParams::normal(std::size_t in, std::size_t out, double stddev, Rng& rng) {
  LinearParams p{Matrix(in, out), Matrix::Zero(1, out)};
  for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = stddev * standard_normal(rng);
  return p;
}

LinearParams LinearParams::uniform(std::size_t in, std::size_t out, double bound, Rng& rng) {
  LinearParams p{Matrix(in, out), Matrix(1, out)};
  for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = bound * (2.0 * uniform01(rng) - 1.0);
  for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias.data()[i] = bound * (2.0 * uniform01(rng) - 1.0);
  return p;
}

LinearParams LinearParams::zeros_like() const {
  return {Matrix::Zero(weight.rows(), weight.cols()), Matrix::Zero(bias.rows(), bias.cols())};
}

void LinearParams::append_to(TensorList& list, const std::string& prefix) {
  list.emplace_back(prefix + ".weight", &weight);
  list.emplace_back(prefix + ".bias", &bias);
}

LayerNormParams LayerNormParams::identity(std::size_t d) {
  return {Matrix::Ones(1, d), Matrix::Zero(1, d)};
}

LayerNormParams LayerNormParams::zeros_like() const {
  return {Matrix::Zero(gamma.rows(), gamma.cols()), Matrix::Zero(beta.rows(), beta.cols())};
}

void LayerNormParams::append_to(TensorList& list, const std::string& prefix) {
  list.emplace_back(prefix + ".gamma", &gamma);
  list.emplace_back(prefix + ".beta", &beta);
}

Matrix linear(const Matrix& x, const LinearParams& p) {
  Matrix y = x * p.weight;
  y.rowwise() += p.bias.row(0);
  return y;
}

Matrix linear_backward(const Matrix& x, const Matrix& dy, const LinearParams& p, LinearParams* grad) {
  if (grad != nullptr) {
    grad->weight.noalias() += x.transpose() * dy;
    grad->bias += dy.colwise().sum();
  }
  return dy * p.weight.transpose();
}

Matrix layer_norm(const Matrix& x, const LayerNormParams& p, double eps, LayerNormCache* cache) {
  const auto d = static_cast<double>(x.cols());
  Matrix normalized(x.rows(), x.cols());
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / d;
    const auto centered = (x.row(r).array() - mean).matrix();
    const double var = centered.squaredNorm() / d;
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    normalized.row(r) = centered * inv_std(r);
  }
  Matrix y = normalized.array().rowwise() * p.gamma.row(0).array();
  y.rowwise() += p.beta.row(0);
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const LayerNormParams& p, const LayerNormCache& cache,
                           LayerNormParams* grad) {
  const auto d = static_cast<double>(dy.cols());
  if (grad != nullptr) {
    grad->gamma += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
    grad->beta += dy.colwise().sum();
  }
  Matrix dnorm = dy.array().rowwise() * p.gamma.row(0).array();
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dnorm.row(r).sum() / d;
    const double mean_dx = dnorm.row(r).dot(cache.normalized.row(r)) / d;
    dx.row(r) = cache.inv_std(r) *
                (dnorm.row(r).array() - mean_d - cache.normalized.row(r).array() * mean_dx).matrix();
  }
  return dx;
}

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

Matrix gelu(const Matrix& x) {
  return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); });
}

Matrix gelu_backward(const Matrix& x, const Matrix& dy) {
  Matrix dx(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
    dx.data()[i] = dy.data()[i] * (cdf + v * pdf);
  }
  return dx;
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  Matrix mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  // Same test as uniform01(rng) < rate, on the raw 53-bit draw.
  const double threshold = rate * 0x1.0p53;
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    const bool keep = static_cast<double>(rng() >> 11) >= threshold;
    mask.data()[i] = keep_scale * static_cast<double>(keep);  // branch-free
  }
  return mask;
}

}  // namespace mclrec::nn
