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

#include "mclrec/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mclrec {

void LossWeights::validate() const {
  if (lambda < 0 || beta < 0 || gamma < 0) throw std::invalid_argument("loss weights must be >= 0");
  if (!(temperature > 0)) throw std::invalid_argument("temperature must be > 0");
}

nlohmann::json LossWeights::to_json() const {
  return {{"lambda", lambda}, {"beta", beta}, {"gamma", gamma}, {"temperature", temperature}};
}

nlohmann::json LossBreakdown::to_json() const {
  return {{"rec", rec}, {"cl1", cl1}, {"cl2", cl2}, {"reg", reg}, {"L0", stage1_total}, {"L1", stage2_total}};
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  rec += o.rec;
  cl1 += o.cl1;
  cl2 += o.cl2;
  reg += o.reg;
  stage1_total += o.stage1_total;
  stage2_total += o.stage2_total;
  return *this;
}

LossBreakdown& LossBreakdown::operator/=(double s) {
  rec /= s;
  cl1 /= s;
  cl2 /= s;
  reg /= s;
  stage1_total /= s;
  stage2_total /= s;
  return *this;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Row-wise log-sum-exp; optionally returns the softmax.
Eigen::VectorXd row_logsumexp(const Matrix& m, Matrix* softmax) {
  const Eigen::VectorXd mx = m.rowwise().maxCoeff();
  const Matrix e = (m.colwise() - mx).array().exp().matrix();
  const Eigen::VectorXd sum = e.rowwise().sum();
  if (softmax != nullptr) *softmax = e.array().colwise() / sum.array();
  return mx.array() + sum.array().log();
}

}  // namespace

double rec_loss(const Matrix& logits, std::span<const ItemId> targets) {
  Matrix grads;  // untouched when scale is 0
  return rec_loss(logits, targets, grads, 0.0);
}

double rec_loss(const Matrix& logits, std::span<const ItemId> targets, Matrix& d_logits, double scale) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size()) {
    throw std::invalid_argument("rec_loss: batch/targets mismatch");
  }
  for (ItemId g : targets) {
    if (g < 1 || g > logits.cols()) throw std::out_of_range("rec_loss: target " + std::to_string(g) + " out of range");
  }
  const auto batch = static_cast<double>(logits.rows());
  Matrix probs;
  const auto lse = row_logsumexp(logits, scale != 0.0 ? &probs : nullptr);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < logits.rows(); ++b) loss += lse(b) - logits(b, targets[static_cast<std::size_t>(b)] - 1);
  if (scale != 0.0) {
    for (Eigen::Index b = 0; b < logits.rows(); ++b) probs(b, targets[static_cast<std::size_t>(b)] - 1) -= 1.0;
    d_logits += (scale / batch) * probs;
  }
  return loss / batch;
}

double info_nce(const Matrix& x1, const Matrix& x2, double tau) {
  return info_nce(x1, x2, tau, nullptr, nullptr, 0.0);
}

double info_nce(const Matrix& x1, const Matrix& x2, double tau, Matrix* d1, Matrix* d2, double scale) {
  if (x1.rows() != x2.rows() || x1.cols() != x2.cols()) throw std::invalid_argument("info_nce: shape mismatch");
  const Eigen::Index batch = x1.rows();
  if (batch == 0) throw std::invalid_argument("info_nce: empty batch");
  const double inv_tau = 1.0 / tau;

  const Matrix s12 = inv_tau * (x1 * x2.transpose());
  Matrix s11 = inv_tau * (x1 * x1.transpose());
  Matrix s22 = inv_tau * (x2 * x2.transpose());
  s11.diagonal().setConstant(kNegInf);
  s22.diagonal().setConstant(kNegInf);

  // Anchor x1[b]: candidates x2[*] then x1[b' != b]. Anchor x2[b]: x1[*] then x2[b' != b].
  Matrix cand1(batch, 2 * batch);
  cand1 << s12, s11;
  Matrix cand2(batch, 2 * batch);
  cand2 << s12.transpose(), s22;

  const bool want_grad = scale != 0.0 && (d1 != nullptr || d2 != nullptr);
  Matrix p1, p2;
  const auto lse1 = row_logsumexp(cand1, want_grad ? &p1 : nullptr);
  const auto lse2 = row_logsumexp(cand2, want_grad ? &p2 : nullptr);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) loss += (lse1(b) - s12(b, b)) + (lse2(b) - s12(b, b));
  loss /= static_cast<double>(batch);

  if (want_grad) {
    const double c = scale * inv_tau / static_cast<double>(batch);
    Matrix ds12 = p1.leftCols(batch) + p2.leftCols(batch).transpose();
    ds12.diagonal().array() -= 2.0;
    const Matrix ds11 = p1.rightCols(batch);  // diagonal is exactly 0
    const Matrix ds22 = p2.rightCols(batch);
    if (d1 != nullptr) *d1 += c * (ds12 * x2 + (ds11 + ds11.transpose()) * x1);
    if (d2 != nullptr) *d2 += c * (ds12.transpose() * x1 + (ds22 + ds22.transpose()) * x2);
  }
  return loss;
}

ViewGrads ViewGrads::zeros_like(const ViewQuadruple& v) {
  return {Matrix::Zero(v.h1.rows(), v.h1.cols()), Matrix::Zero(v.h2.rows(), v.h2.cols()),
          Matrix::Zero(v.z1.rows(), v.z1.cols()), Matrix::Zero(v.z2.rows(), v.z2.cols())};
}

double cl1_loss(const ViewQuadruple& views, double tau, ViewGrads* grads, double scale) {
  return info_nce(views.h1, views.h2, tau, grads ? &grads->h1 : nullptr, grads ? &grads->h2 : nullptr, scale);
}

double cl2_loss(const ViewQuadruple& views, double tau, ViewGrads* grads, double scale) {
  auto g = [&](Matrix ViewGrads::*member) { return grads ? &(grads->*member) : nullptr; };
  return info_nce(views.z1, views.z2, tau, g(&ViewGrads::z1), g(&ViewGrads::z2), scale) +
         info_nce(views.h1, views.z2, tau, g(&ViewGrads::h1), g(&ViewGrads::z2), scale) +
         info_nce(views.h2, views.z1, tau, g(&ViewGrads::h2), g(&ViewGrads::z1), scale);
}

ScoreSplit contrast_split(const Matrix& z1, const Matrix& z2) {
  if (z1.rows() != z2.rows() || z1.cols() != z2.cols()) throw std::invalid_argument("contrast_split: shape mismatch");
  const Matrix s = z1 * z2.transpose();
  ScoreSplit split;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      (i == j ? split.positives : split.negatives).push_back(s(i, j));
    }
  }
  return split;
}

namespace {

struct RegPivots {
  std::size_t min_pos = 0;  // argmin of positives
  std::size_t max_neg = 0;  // argmax of negatives
  double o_min = 0.0;
  double o_max = 0.0;
  bool o_min_is_pos = true;
};

RegPivots pivots(const ScoreSplit& split) {
  if (split.positives.empty()) throw std::invalid_argument("contrastive_reg: no positive scores");
  RegPivots p;
  const auto& pos = split.positives;
  const auto& neg = split.negatives;
  p.min_pos = static_cast<std::size_t>(std::min_element(pos.begin(), pos.end()) - pos.begin());
  if (neg.empty()) {
    p.o_min = p.o_max = pos[p.min_pos];
    return p;
  }
  p.max_neg = static_cast<std::size_t>(std::max_element(neg.begin(), neg.end()) - neg.begin());
  const double a = pos[p.min_pos];
  const double b = neg[p.max_neg];
  p.o_min_is_pos = a <= b;
  p.o_min = std::min(a, b);
  p.o_max = std::max(a, b);
  return p;
}

}  // namespace

double contrastive_reg(const ScoreSplit& split) {
  const auto p = pivots(split);
  double pos_term = 0.0;
  for (double s : split.positives) pos_term += std::max(s - p.o_min, 0.0);
  pos_term /= static_cast<double>(split.positives.size());
  if (split.negatives.empty()) return pos_term;
  double neg_term = 0.0;
  for (double s : split.negatives) neg_term += std::max(p.o_max - s, 0.0);
  neg_term /= static_cast<double>(split.negatives.size());
  return pos_term + neg_term;
}

void contrastive_reg_grad(const ScoreSplit& split, std::vector<double>& d_pos, std::vector<double>& d_neg) {
  const auto p = pivots(split);
  d_pos.assign(split.positives.size(), 0.0);
  d_neg.assign(split.negatives.size(), 0.0);
  const double inv_p = 1.0 / static_cast<double>(split.positives.size());
  double d_omin = 0.0;
  for (std::size_t i = 0; i < split.positives.size(); ++i) {
    if (split.positives[i] - p.o_min > 0.0) {
      d_pos[i] += inv_p;
      d_omin -= inv_p;
    }
  }
  if (split.negatives.empty()) {
    d_pos[p.min_pos] += d_omin;
    return;
  }
  const double inv_n = 1.0 / static_cast<double>(split.negatives.size());
  double d_omax = 0.0;
  for (std::size_t j = 0; j < split.negatives.size(); ++j) {
    if (p.o_max - split.negatives[j] > 0.0) {
      d_neg[j] -= inv_n;
      d_omax += inv_n;
    }
  }
  if (p.o_min_is_pos) {
    d_pos[p.min_pos] += d_omin;
    d_neg[p.max_neg] += d_omax;
  } else {
    d_neg[p.max_neg] += d_omin;
    d_pos[p.min_pos] += d_omax;
  }
}

double contrastive_reg(const Matrix& z1, const Matrix& z2, Matrix* d1, Matrix* d2, double scale) {
  const auto split = contrast_split(z1, z2);
  const double value = contrastive_reg(split);
  if (scale != 0.0 && (d1 != nullptr || d2 != nullptr)) {
    std::vector<double> d_pos, d_neg;
    contrastive_reg_grad(split, d_pos, d_neg);
    const Eigen::Index batch = z1.rows();
    Matrix ds(batch, batch);
    std::size_t pi = 0, ni = 0;
    for (Eigen::Index i = 0; i < batch; ++i)
      for (Eigen::Index j = 0; j < batch; ++j) ds(i, j) = scale * (i == j ? d_pos[pi++] : d_neg[ni++]);
    if (d1 != nullptr) *d1 += ds * z2;
    if (d2 != nullptr) *d2 += ds.transpose() * z1;
  }
  return value;
}

LossBreakdown stage_losses(const ViewQuadruple& views, const Matrix& logits, std::span<const ItemId> targets,
                           const LossWeights& weights) {
  LossBreakdown out;
  out.rec = rec_loss(logits, targets);
  out.cl1 = cl1_loss(views, weights.temperature);
  out.cl2 = cl2_loss(views, weights.temperature);
  out.reg = contrastive_reg(contrast_split(views.z1, views.z2));
  out.stage1_total = out.rec + weights.lambda * out.cl1 + weights.beta * out.cl2 + weights.gamma * out.reg;
  out.stage2_total = out.cl2 + weights.gamma * out.reg;
  return out;
}

LossBreakdown stage1_objective(const ViewQuadruple& views, const Matrix& logits, std::span<const ItemId> targets,
                               const LossWeights& weights, Matrix& d_logits, ViewGrads& grads) {
  LossBreakdown out;
  const double tau = weights.temperature;
  out.rec = rec_loss(logits, targets, d_logits, 1.0);
  out.cl1 = cl1_loss(views, tau, &grads, weights.lambda);
  out.cl2 = cl2_loss(views, tau, &grads, weights.beta);
  out.reg = contrastive_reg(views.z1, views.z2, &grads.z1, &grads.z2, weights.gamma);
  out.stage1_total = out.rec + weights.lambda * out.cl1 + weights.beta * out.cl2 + weights.gamma * out.reg;
  out.stage2_total = out.cl2 + weights.gamma * out.reg;
  return out;
}

LossBreakdown stage2_objective(const ViewQuadruple& views, const LossWeights& weights, double cl2_weight,
                               ViewGrads& grads) {
  LossBreakdown out;
  out.cl2 = cl2_loss(views, weights.temperature, &grads, cl2_weight);
  out.reg = contrastive_reg(views.z1, views.z2, &grads.z1, &grads.z2, weights.gamma);
  out.stage2_total = cl2_weight * out.cl2 + weights.gamma * out.reg;
  return out;
}

}  // namespace mclrec
