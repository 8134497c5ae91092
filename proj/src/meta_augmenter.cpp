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

#include "mclrec/meta_augmenter.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mclrec {

MlpParams MlpParams::zeros_like() const {
  return {{layers[0].zeros_like(), layers[1].zeros_like(), layers[2].zeros_like()}};
}

void MlpParams::append_to(TensorList& list, const std::string& prefix) {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].append_to(list, prefix + ".layer" + std::to_string(i));
}

Matrix mlp_forward(const MlpParams& p, const Matrix& x, MlpTape* tape) {
  if (x.cols() != p.layers[0].weight.rows()) {
    throw std::invalid_argument("augmenter: input width " + std::to_string(x.cols()) + " != " +
                                std::to_string(p.layers[0].weight.rows()));
  }
  Matrix pre1 = nn::linear(x, p.layers[0]);
  Matrix act1 = nn::gelu(pre1);
  Matrix pre2 = nn::linear(act1, p.layers[1]);
  Matrix act2 = nn::gelu(pre2);
  Matrix z = nn::linear(act2, p.layers[2]);
  if (tape != nullptr) *tape = {x, std::move(pre1), std::move(act1), std::move(pre2), std::move(act2)};
  return z;
}

Matrix mlp_backward(const MlpParams& p, const MlpTape& tape, const Matrix& dz, MlpParams* grad) {
  Matrix d_act2 = nn::linear_backward(tape.act2, dz, p.layers[2], grad ? &grad->layers[2] : nullptr);
  Matrix d_pre2 = nn::gelu_backward(tape.pre2, d_act2);
  Matrix d_act1 = nn::linear_backward(tape.act1, d_pre2, p.layers[1], grad ? &grad->layers[1] : nullptr);
  Matrix d_pre1 = nn::gelu_backward(tape.pre1, d_act1);
  return nn::linear_backward(tape.input, d_pre1, p.layers[0], grad ? &grad->layers[0] : nullptr);
}

AugmenterParams AugmenterParams::zeros_like() const {
  AugmenterParams g;
  g.dim = dim;
  g.shared = shared;
  g.first = first.zeros_like();
  if (!shared) g.second = second.zeros_like();
  return g;
}

TensorList AugmenterParams::tensors() {
  TensorList list;
  first.append_to(list, "phi1");
  if (!shared) second.append_to(list, "phi2");
  return list;
}

ConstTensorList AugmenterParams::tensors() const {
  return mclrec::as_const(const_cast<AugmenterParams*>(this)->tensors());
}

AugmenterParams init_augmenters(std::size_t d, bool share, std::uint64_t seed) {
  if (d == 0) throw std::invalid_argument("init_augmenters: d must be >= 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  auto make = [&](std::uint64_t stream) {
    Rng rng(derive_seed(seed, stream));
    MlpParams p;
    for (auto& layer : p.layers) layer = nn::LinearParams::uniform(d, d, bound, rng);
    return p;
  };
  AugmenterParams params;
  params.dim = d;
  params.shared = share;
  params.first = make(1);
  if (!share) params.second = make(2);
  return params;
}

ViewQuadruple augment_views(const Matrix& h1, const Matrix& h2, const AugmenterParams& params,
                            AugmenterTapes* tapes) {
  if (h1.rows() != h2.rows() || h1.cols() != h2.cols()) {
    throw std::invalid_argument("augment_views: h1 and h2 shapes differ");
  }
  ViewQuadruple v;
  v.h1 = h1;
  v.h2 = h2;
  v.z1 = mlp_forward(params.net(1), h1, tapes ? &tapes->first : nullptr);
  v.z2 = mlp_forward(params.net(2), h2, tapes ? &tapes->second : nullptr);
  return v;
}

void augment_views_backward(const AugmenterParams& params, const AugmenterTapes& tapes, const Matrix& dz1,
                            const Matrix& dz2, Matrix* dh1, Matrix* dh2, AugmenterParams* grads) {
  Matrix g1 = mlp_backward(params.net(1), tapes.first, dz1, grads ? &grads->net(1) : nullptr);
  Matrix g2 = mlp_backward(params.net(2), tapes.second, dz2, grads ? &grads->net(2) : nullptr);
  if (dh1 != nullptr) *dh1 += g1;
  if (dh2 != nullptr) *dh2 += g2;
}

}  // namespace mclrec
