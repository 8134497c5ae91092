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

#include "mclrec/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace mclrec {

Adam::Adam(AdamConfig config, const ConstTensorList& params) : config_(config) {
  for (const auto& [name, tensor] : params) {
    names_.push_back(name);
    m_.push_back(Matrix::Zero(tensor->rows(), tensor->cols()));
    v_.push_back(Matrix::Zero(tensor->rows(), tensor->cols()));
  }
}

void Adam::step(const TensorList& params, const ConstTensorList& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("Adam::step: parameter group size changed");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < m_.size(); ++i) {
    Matrix& p = *params[i].second;
    const Matrix& g = *grads[i].second;
    if (p.rows() != m_[i].rows() || p.cols() != m_[i].cols() || g.rows() != p.rows() || g.cols() != p.cols()) {
      throw std::invalid_argument("Adam::step: shape mismatch for " + names_[i]);
    }
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    p.array() -= config_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.eps);
  }
}

TensorList Adam::state() {
  TensorList out;
  for (std::size_t i = 0; i < m_.size(); ++i) {
    out.emplace_back("m/" + names_[i], &m_[i]);
    out.emplace_back("v/" + names_[i], &v_[i]);
  }
  return out;
}

ConstTensorList Adam::state() const { return mclrec::as_const(const_cast<Adam*>(this)->state()); }

}  // namespace mclrec
