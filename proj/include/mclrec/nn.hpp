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

// Dense layers with explicit backward passes. Activations are row-major
// [rows x features]; every backward accumulates into a gradient struct of the
// same shape as the parameters.

#pragma once

#include <string>

#include "mclrec/common.hpp"

namespace mclrec::nn {

struct LinearParams {
  Matrix weight;  // [in x out]
  Matrix bias;    // [1 x out]

  static LinearParams normal(std::size_t in, std::size_t out, double stddev, Rng& rng);
  static LinearParams uniform(std::size_t in, std::size_t out, double bound, Rng& rng);
  LinearParams zeros_like() const;
  void append_to(TensorList& list, const std::string& prefix);
};

struct LayerNormParams {
  Matrix gamma;  // [1 x d]
  Matrix beta;   // [1 x d]

  static LayerNormParams identity(std::size_t d);
  LayerNormParams zeros_like() const;
  void append_to(TensorList& list, const std::string& prefix);
};

struct LayerNormCache {
  Matrix normalized;
  Eigen::VectorXd inv_std;
};

Matrix linear(const Matrix& x, const LinearParams& p);
// Returns dL/dx; adds dL/dW, dL/db into `grad` when non-null.
Matrix linear_backward(const Matrix& x, const Matrix& dy, const LinearParams& p, LinearParams* grad);

Matrix layer_norm(const Matrix& x, const LayerNormParams& p, double eps, LayerNormCache* cache);
Matrix layer_norm_backward(const Matrix& dy, const LayerNormParams& p, const LayerNormCache& cache,
                           LayerNormParams* grad);

// Exact (erf) GELU.
Matrix gelu(const Matrix& x);
Matrix gelu_backward(const Matrix& x, const Matrix& dy);

// Inverted dropout mask: entries are 0 or 1 / (1 - rate).
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng);

}  // namespace mclrec::nn
