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

// Synthetic corpus with learnable sequential structure: an order-k Markov
// chain whose context (the last k items) selects a sparse successor row.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace mclrec {

struct SyntheticSpec {
  std::size_t users = 2000;
  std::size_t items = 500;
  std::size_t order = 1;
  std::size_t min_length = 5;
  std::size_t max_length = 15;
  std::size_t successors = 4;  // candidate next items per context
  double noise = 0.15;         // probability of a uniform random next item
  std::uint64_t seed = 7;

  void validate() const;
};

// Lines "u<i> i<id> i<id> ...", one per user. Byte-identical for a fixed spec.
std::string make_synthetic_corpus(const SyntheticSpec& spec);
void write_synthetic_corpus(const std::filesystem::path& path, const SyntheticSpec& spec);

}  // namespace mclrec
