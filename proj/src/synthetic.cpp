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

#include "mclrec/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "mclrec/common.hpp"

namespace mclrec {

void SyntheticSpec::validate() const {
  if (users == 0 || items < 2) throw std::invalid_argument("synthetic: need users >= 1 and items >= 2");
  if (order == 0) throw std::invalid_argument("synthetic: order must be >= 1");
  if (min_length < 3 || max_length < min_length) throw std::invalid_argument("synthetic: need 3 <= min <= max length");
  if (successors == 0 || successors > items) throw std::invalid_argument("synthetic: successors must be in [1, items]");
  if (noise < 0.0 || noise > 1.0) throw std::invalid_argument("synthetic: noise must be in [0, 1]");
}

std::string make_synthetic_corpus(const SyntheticSpec& spec) {
  spec.validate();
  // Transition table: one row per context bucket, `successors` entries each,
  // with geometrically decaying preference (1, 1/2, 1/4, ...).
  const std::size_t rows = spec.items;
  Rng table_rng(derive_seed(spec.seed, 1));
  std::vector<std::vector<std::size_t>> next(rows);
  for (auto& row : next) {
    for (std::size_t j = 0; j < spec.successors; ++j) row.push_back(uniform_index(table_rng, spec.items));
  }
  std::vector<double> cumulative(spec.successors);
  double total = 0.0;
  for (std::size_t j = 0; j < spec.successors; ++j) {
    total += 1.0 / static_cast<double>(1ULL << j);
    cumulative[j] = total;
  }

  Rng rng(derive_seed(spec.seed, 2));
  std::ostringstream out;
  std::vector<std::size_t> seq;
  for (std::size_t u = 0; u < spec.users; ++u) {
    const std::size_t len = spec.min_length + uniform_index(rng, spec.max_length - spec.min_length + 1);
    seq.clear();
    seq.push_back(uniform_index(rng, spec.items));
    while (seq.size() < len) {
      if (uniform01(rng) < spec.noise) {
        seq.push_back(uniform_index(rng, spec.items));
        continue;
      }
      // Context bucket: hash of the last `order` items.
      std::uint64_t h = 0;
      const std::size_t k = std::min(spec.order, seq.size());
      for (std::size_t i = seq.size() - k; i < seq.size(); ++i) h = derive_seed(h, seq[i]);
      const auto& row = next[spec.order == 1 ? seq.back() : h % rows];
      const double r = uniform01(rng) * total;
      std::size_t j = 0;
      while (j + 1 < row.size() && r >= cumulative[j]) ++j;
      seq.push_back(row[j]);
    }
    out << 'u' << u;
    for (std::size_t item : seq) out << " i" << item;
    out << '\n';
  }
  return out.str();
}

void write_synthetic_corpus(const std::filesystem::path& path, const SyntheticSpec& spec) {
  const auto text = make_synthetic_corpus(spec);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

}  // namespace mclrec
