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

// Loop-based reference implementations. They are deliberately naive: scalar
// loops, no shared helpers with the library, no vectorization.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mclrec/common.hpp"

namespace mclrec::oracle {

inline double dot(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
  return s;
}

// One anchor's term: -log(exp(pos) / (exp(pos) + sum exp(negs))).
inline double nce_term(double pos, const std::vector<double>& negs) {
  double denom = std::exp(pos);
  for (double n : negs) denom += std::exp(n);
  return -std::log(std::exp(pos) / denom);
}

// Symmetric in-batch InfoNCE, mean over rows. Anchor x1[b]: positive x2[b],
// negatives x1[b'] and x2[b'] for b' != b; anchor x2[b] symmetrically.
inline double info_nce(const Matrix& x1, const Matrix& x2, double tau) {
  const Eigen::Index n = x1.rows();
  double total = 0.0;
  for (Eigen::Index b = 0; b < n; ++b) {
    std::vector<double> neg1, neg2;
    for (Eigen::Index o = 0; o < n; ++o) {
      if (o == b) continue;
      neg1.push_back(dot(x1, b, x1, o) / tau);
      neg1.push_back(dot(x1, b, x2, o) / tau);
      neg2.push_back(dot(x2, b, x2, o) / tau);
      neg2.push_back(dot(x2, b, x1, o) / tau);
    }
    if (neg1.empty()) continue;  // batch 1: log 1 = 0 for both anchors
    total += nce_term(dot(x1, b, x2, b) / tau, neg1) + nce_term(dot(x2, b, x1, b) / tau, neg2);
  }
  return total / static_cast<double>(n);
}

inline double cl2(const Matrix& h1, const Matrix& h2, const Matrix& z1, const Matrix& z2, double tau) {
  return info_nce(z1, z2, tau) + info_nce(h1, z2, tau) + info_nce(h2, z1, tau);
}

// Scalar evaluation of the cut-off regularizer on explicit score sets.
inline double regularizer(const std::vector<double>& pos, const std::vector<double>& neg) {
  const double min_pos = *std::min_element(pos.begin(), pos.end());
  double o_min = min_pos, o_max = min_pos;
  if (!neg.empty()) {
    const double max_neg = *std::max_element(neg.begin(), neg.end());
    o_min = std::min(min_pos, max_neg);
    o_max = std::max(min_pos, max_neg);
  }
  double a = 0.0;
  for (double s : pos) a += std::max(s - o_min, 0.0);
  a /= static_cast<double>(pos.size());
  double b = 0.0;
  if (!neg.empty()) {
    for (double s : neg) b += std::max(o_max - s, 0.0);
    b /= static_cast<double>(neg.size());
  }
  return a + b;
}

// Rank of target column (1-based id g) by sorting all items by descending
// logit; among equal logits the target is placed last.
inline std::size_t sorted_rank(const std::vector<double>& logits, std::size_t g) {
  std::vector<std::size_t> order(logits.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t target = g - 1;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (logits[a] != logits[b]) return logits[a] > logits[b];
    if ((a == target) != (b == target)) return b == target;
    return a < b;
  });
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), target) - order.begin()) + 1;
}

struct TopK {
  double hr = 0.0;
  double ndcg = 0.0;
};

inline TopK topk(const std::vector<std::size_t>& ranks, std::size_t k) {
  TopK out;
  for (std::size_t r : ranks) {
    if (r <= k) {
      out.hr += 1.0;
      out.ndcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
    }
  }
  out.hr /= static_cast<double>(ranks.size());
  out.ndcg /= static_cast<double>(ranks.size());
  return out;
}

}  // namespace mclrec::oracle
