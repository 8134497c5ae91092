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

// Learnable model-level augmenters: two 3-layer MLPs (d -> d -> d -> d, GELU
// between layers, linear output) mapping data-augmented sequence
// representations h to model-augmented views z.

#pragma once

#include <array>

#include "mclrec/common.hpp"
#include "mclrec/nn.hpp"

namespace mclrec {

struct MlpParams {
  std::array<nn::LinearParams, 3> layers;

  MlpParams zeros_like() const;
  void append_to(TensorList& list, const std::string& prefix);
};

struct MlpTape {
  Matrix input;
  Matrix pre1, act1, pre2, act2;
};

Matrix mlp_forward(const MlpParams& p, const Matrix& x, MlpTape* tape = nullptr);
// Returns dL/dx; accumulates parameter gradients into `grad` when non-null.
Matrix mlp_backward(const MlpParams& p, const MlpTape& tape, const Matrix& dz, MlpParams* grad);

// phi1 and phi2. With `shared` set, phi2 is phi1: `net(2)` returns the first
// network and only one parameter set is exposed, so gradients from both
// branches land in the same storage.
struct AugmenterParams {
  std::size_t dim = 0;
  bool shared = false;
  MlpParams first;
  MlpParams second;

  const MlpParams& net(int which) const { return which == 2 && !shared ? second : first; }
  MlpParams& net(int which) { return which == 2 && !shared ? second : first; }

  AugmenterParams zeros_like() const;
  TensorList tensors();
  ConstTensorList tensors() const;
};

// Uniform(-1/sqrt(d), 1/sqrt(d)) weights and biases; phi1 and phi2 use
// separate seed streams derived from `seed`.
AugmenterParams init_augmenters(std::size_t d, bool share, std::uint64_t seed);

struct ViewQuadruple {
  Matrix h1, h2;  // data-augmentation views
  Matrix z1, z2;  // model-augmentation views
};

struct AugmenterTapes {
  MlpTape first;
  MlpTape second;
};

ViewQuadruple augment_views(const Matrix& h1, const Matrix& h2, const AugmenterParams& params,
                            AugmenterTapes* tapes = nullptr);

// Backpropagates dL/dz1, dL/dz2. Adds the resulting dL/dh contributions into
// dh1/dh2 (when non-null) and augmenter gradients into `grads` (when non-null).
void augment_views_backward(const AugmenterParams& params, const AugmenterTapes& tapes, const Matrix& dz1,
                            const Matrix& dz2, Matrix* dh1, Matrix* dh2, AugmenterParams* grads);

}  // namespace mclrec
