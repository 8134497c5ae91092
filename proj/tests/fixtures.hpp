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

// Small corpora and configurations that keep trainer-level tests fast.

#pragma once

#include <sstream>

#include "mclrec/corpus.hpp"
#include "mclrec/synthetic.hpp"
#include "mclrec/trainer.hpp"

namespace mclrec::testing {

inline Corpus tiny_corpus(std::size_t users = 80, std::size_t items = 30, std::uint64_t seed = 3) {
  SyntheticSpec spec;
  spec.users = users;
  spec.items = items;
  spec.min_length = 5;
  spec.max_length = 9;
  spec.successors = 2;
  spec.seed = seed;
  std::istringstream in(make_synthetic_corpus(spec));
  return parse_corpus(in, 1);
}

inline TrainConfig tiny_config() {
  TrainConfig c;
  c.model.max_len = 10;
  c.model.dim = 8;
  c.model.blocks = 1;
  c.model.heads = 2;
  c.model.dropout = 0.2;
  c.batch_size = 32;
  c.epochs = 2;
  c.patience = 10;
  c.seed = 11;
  return c;
}

}  // namespace mclrec::testing
