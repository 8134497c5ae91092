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

// Loss terms. Every gradient-producing overload *adds* scale * dL/dinput into
// the supplied buffers, so composite objectives can share accumulators.
// All losses are batch means.

#pragma once

#include <span>
#include <vector>

#include "json.hpp"
#include "mclrec/common.hpp"
#include "mclrec/meta_augmenter.hpp"

namespace mclrec {

struct LossWeights {
  double lambda = 0.1;       // L_cl1
  double beta = 0.1;         // L_cl2
  double gamma = 0.01;       // R
  double temperature = 1.0;  // InfoNCE tau

  void validate() const;
  nlohmann::json to_json() const;
};

struct LossBreakdown {
  double rec = 0.0;
  double cl1 = 0.0;
  double cl2 = 0.0;
  double reg = 0.0;
  double stage1_total = 0.0;  // L0
  double stage2_total = 0.0;  // L1

  nlohmann::json to_json() const;
  LossBreakdown& operator+=(const LossBreakdown& o);
  LossBreakdown& operator/=(double s);
};

// Cross-entropy over real items; target id g is logits column g - 1.
double rec_loss(const Matrix& logits, std::span<const ItemId> targets);
double rec_loss(const Matrix& logits, std::span<const ItemId> targets, Matrix& d_logits, double scale = 1.0);

// Symmetric in-batch InfoNCE. For row b the positive pair is (x1[b], x2[b]);
// anchor x1[b] is contrasted against x1[b'] and x2[b'] for every b' != b, and
// symmetrically for anchor x2[b]. Similarity is <a, c> / tau.
double info_nce(const Matrix& x1, const Matrix& x2, double tau);
double info_nce(const Matrix& x1, const Matrix& x2, double tau, Matrix* d1, Matrix* d2, double scale = 1.0);

struct ViewGrads {
  Matrix h1, h2, z1, z2;
  static ViewGrads zeros_like(const ViewQuadruple& v);
};

// info_nce(h1, h2)
double cl1_loss(const ViewQuadruple& views, double tau, ViewGrads* grads = nullptr, double scale = 1.0);
// info_nce(z1, z2) + info_nce(h1, z2) + info_nce(h2, z1)
double cl2_loss(const ViewQuadruple& views, double tau, ViewGrads* grads = nullptr, double scale = 1.0);

struct ScoreSplit {
  std::vector<double> positives;  // diagonal of z1 z2^T
  std::vector<double> negatives;  // off-diagonal entries, row-major
};

ScoreSplit contrast_split(const Matrix& z1, const Matrix& z2);

double contrastive_reg(const ScoreSplit& split);
// Subgradient w.r.t. the split scores ([a]_+ has slope 0 at a = 0).
void contrastive_reg_grad(const ScoreSplit& split, std::vector<double>& d_pos, std::vector<double>& d_neg);
double contrastive_reg(const Matrix& z1, const Matrix& z2, Matrix* d1, Matrix* d2, double scale = 1.0);

// Values of every term plus L0 = rec + lambda*cl1 + beta*cl2 + gamma*R and
// L1 = cl2 + gamma*R. R is computed on (z1, z2).
LossBreakdown stage_losses(const ViewQuadruple& views, const Matrix& logits, std::span<const ItemId> targets,
                           const LossWeights& weights);

// L0 with gradients w.r.t. logits and all four views.
LossBreakdown stage1_objective(const ViewQuadruple& views, const Matrix& logits, std::span<const ItemId> targets,
                               const LossWeights& weights, Matrix& d_logits, ViewGrads& grads);

// L1 = cl2_weight * cl2 + gamma * R with gradients w.r.t. the views.
// cl2_weight is 1 except for the ablation without L_cl2.
LossBreakdown stage2_objective(const ViewQuadruple& views, const LossWeights& weights, double cl2_weight,
                               ViewGrads& grads);

}  // namespace mclrec
