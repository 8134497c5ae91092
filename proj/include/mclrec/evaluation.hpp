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

// Full-catalogue ranking metrics, test-time noise injection and per-group
// evaluation. Augmenters play no part at inference time.

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mclrec/common.hpp"
#include "mclrec/corpus.hpp"
#include "mclrec/encoder.hpp"

namespace mclrec {

struct RankingMetrics {
  std::map<std::size_t, double> hr;
  std::map<std::size_t, double> ndcg;
  std::size_t n_users = 0;

  nlohmann::json to_json() const;
  static RankingMetrics from_json(const nlohmann::json& j);
};

// 1 + number of other real items whose logit is >= the target's logit.
// Ties therefore rank the target last among equals.
std::vector<std::size_t> rank_target(const Matrix& logits, std::span<const ItemId> targets);

RankingMetrics compute_metrics(std::span<const std::size_t> ranks, std::span<const std::size_t> ks);

// Count-weighted average of per-part metrics (all parts must share ks).
RankingMetrics merge_metrics(std::span<const RankingMetrics> parts);

struct EvalConfig {
  std::vector<std::size_t> ks{5, 10, 20};
  std::size_t batch_size = 256;
};

std::vector<std::size_t> evaluate_ranks(const EncoderParams& params, std::span<const Example> examples,
                                        std::size_t batch_size = 256);
RankingMetrics evaluate(const EncoderParams& params, std::span<const Example> examples, const EvalConfig& cfg);

struct NoiseSpec {
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

// Inserts ceil(ratio * L) distinct items that are neither in `items` nor in
// `exclude`, each at a uniform slot of the growing sequence. Draws are made
// one injection at a time, so with the same rng state a larger ratio yields a
// superset of a smaller ratio's insertions.
std::vector<ItemId> inject_noise(std::span<const ItemId> items, double ratio, const ItemVocab& vocab, Rng& rng,
                                 std::span<const ItemId> exclude = {});
InteractionSequence inject_noise(const InteractionSequence& seq, const NoiseSpec& spec, const ItemVocab& vocab,
                                 Rng& rng);

// Noisy copies of evaluation examples. Each example gets its own rng stream
// derived from (spec.seed, example.user); the target is never injected.
std::vector<Example> inject_noise(std::span<const Example> examples, const NoiseSpec& spec, const ItemVocab& vocab);

std::map<LengthRange, RankingMetrics> evaluate_groups(const EncoderParams& params,
                                                      const std::map<LengthRange, std::vector<Example>>& groups,
                                                      const EvalConfig& cfg);

// Aligned text table: one row per label with HR@k then NDCG@k columns.
std::string format_metrics_table(const std::vector<std::pair<std::string, RankingMetrics>>& rows);

}  // namespace mclrec
