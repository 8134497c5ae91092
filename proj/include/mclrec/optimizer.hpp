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

#pragma once

#include <cstddef>
#include <vector>

#include "mclrec/common.hpp"

namespace mclrec {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. One instance owns the moments of exactly one
// parameter group; the tensor lists passed to step() must keep the order and
// shapes given at construction.
class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig config, const ConstTensorList& params);

  void step(const TensorList& params, const ConstTensorList& grads);

  const AdamConfig& config() const { return config_; }
  std::size_t steps() const { return steps_; }
  void set_steps(std::size_t t) { steps_ = t; }

  // Moments as named tensors ("m/<name>", "v/<name>") for checkpointing.
  TensorList state();
  ConstTensorList state() const;

 private:
  AdamConfig config_;
  std::vector<std::string> names_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::size_t steps_ = 0;
};

}  // namespace mclrec
