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

#include "mclrec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace mclrec {

nlohmann::json RankingMetrics::to_json() const {
  nlohmann::json j;
  j["n_users"] = n_users;
  for (const auto& [k, v] : hr) j["HR@" + std::to_string(k)] = v;
  for (const auto& [k, v] : ndcg) j["NDCG@" + std::to_string(k)] = v;
  return j;
}

RankingMetrics RankingMetrics::from_json(const nlohmann::json& j) {
  RankingMetrics m;
  m.n_users = j.at("n_users").get<std::size_t>();
  for (const auto& [key, value] : j.items()) {
    if (key.rfind("HR@", 0) == 0) m.hr[std::stoul(key.substr(3))] = value.get<double>();
    if (key.rfind("NDCG@", 0) == 0) m.ndcg[std::stoul(key.substr(5))] = value.get<double>();
  }
  return m;
}

std::vector<std::size_t> rank_target(const Matrix& logits, std::span<const ItemId> targets) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size()) {
    throw std::invalid_argument("rank_target: batch/targets mismatch");
  }
  std::vector<std::size_t> ranks(targets.size());
  for (Eigen::Index b = 0; b < logits.rows(); ++b) {
    const ItemId g = targets[static_cast<std::size_t>(b)];
    if (g < 1 || g > logits.cols()) throw std::out_of_range("rank_target: target out of range");
    const double target = logits(b, g - 1);
    std::size_t above = 0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      if (j != g - 1 && logits(b, j) >= target) ++above;
    }
    ranks[static_cast<std::size_t>(b)] = above + 1;
  }
  return ranks;
}

RankingMetrics compute_metrics(std::span<const std::size_t> ranks, std::span<const std::size_t> ks) {
  if (ranks.empty()) throw std::invalid_argument("compute_metrics: no ranks");
  RankingMetrics m;
  m.n_users = ranks.size();
  for (std::size_t k : ks) {
    double hits = 0.0, gain = 0.0;
    for (std::size_t r : ranks) {
      if (r == 0) throw std::invalid_argument("compute_metrics: ranks are 1-based");
      if (r <= k) {
        hits += 1.0;
        gain += 1.0 / std::log2(static_cast<double>(r) + 1.0);
      }
    }
    m.hr[k] = hits / static_cast<double>(ranks.size());
    m.ndcg[k] = gain / static_cast<double>(ranks.size());
  }
  return m;
}

RankingMetrics merge_metrics(std::span<const RankingMetrics> parts) {
  RankingMetrics out;
  for (const auto& p : parts) out.n_users += p.n_users;
  if (out.n_users == 0) throw std::invalid_argument("merge_metrics: no users");
  for (const auto& p : parts) {
    const double w = static_cast<double>(p.n_users) / static_cast<double>(out.n_users);
    for (const auto& [k, v] : p.hr) out.hr[k] += w * v;
    for (const auto& [k, v] : p.ndcg) out.ndcg[k] += w * v;
  }
  return out;
}

std::vector<std::size_t> evaluate_ranks(const EncoderParams& params, std::span<const Example> examples,
                                        std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("evaluate: batch_size must be >= 1");
  std::vector<std::size_t> ranks;
  ranks.reserve(examples.size());
  Rng unused(0);  // dropout is off, so no draws happen
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const auto chunk = examples.subspan(start, std::min(batch_size, examples.size() - start));
    const SequenceBatch batch = pad_batch(chunk, params.config.max_len);
    const auto rep = encode(batch, params, false, unused);
    const auto r = rank_target(score_items(rep.final, params), batch.targets);
    ranks.insert(ranks.end(), r.begin(), r.end());
  }
  return ranks;
}

RankingMetrics evaluate(const EncoderParams& params, std::span<const Example> examples, const EvalConfig& cfg) {
  const auto ranks = evaluate_ranks(params, examples, cfg.batch_size);
  return compute_metrics(ranks, cfg.ks);
}

std::vector<ItemId> inject_noise(std::span<const ItemId> items, double ratio, const ItemVocab& vocab, Rng& rng,
                                 std::span<const ItemId> exclude) {
  if (ratio < 0.0 || ratio > 1.0) throw std::invalid_argument("inject_noise: ratio must be in [0, 1]");
  std::vector<ItemId> out(items.begin(), items.end());
  const std::size_t count = ceil_count(ratio, items.size());
  if (count == 0) return out;
  std::unordered_set<ItemId> taken(items.begin(), items.end());
  taken.insert(exclude.begin(), exclude.end());
  std::size_t blocked = 0;
  for (ItemId id : taken) blocked += vocab.is_real(id) ? 1 : 0;
  if (vocab.size < blocked + count) {
    throw std::runtime_error("inject_noise: need " + std::to_string(count) + " negative items but only " +
                             std::to_string(vocab.size - blocked) + " are available");
  }
  for (std::size_t i = 0; i < count; ++i) {
    ItemId neg;
    do {
      neg = static_cast<ItemId>(1 + uniform_index(rng, vocab.size));
    } while (taken.contains(neg));
    taken.insert(neg);
    const std::size_t slot = uniform_index(rng, out.size() + 1);
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(slot), neg);
  }
  return out;
}

InteractionSequence inject_noise(const InteractionSequence& seq, const NoiseSpec& spec, const ItemVocab& vocab,
                                 Rng& rng) {
  return {seq.user_id, inject_noise(seq.items, spec.ratio, vocab, rng)};
}

std::vector<Example> inject_noise(std::span<const Example> examples, const NoiseSpec& spec, const ItemVocab& vocab) {
  std::vector<Example> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    Rng rng(derive_seed(spec.seed, ex.user));
    const ItemId target[] = {ex.target};
    out.push_back({ex.user, inject_noise(ex.input, spec.ratio, vocab, rng, target), ex.target});
  }
  return out;
}

std::map<LengthRange, RankingMetrics> evaluate_groups(const EncoderParams& params,
                                                      const std::map<LengthRange, std::vector<Example>>& groups,
                                                      const EvalConfig& cfg) {
  std::map<LengthRange, RankingMetrics> out;
  for (const auto& [range, examples] : groups) {
    if (!examples.empty()) out.emplace(range, evaluate(params, examples, cfg));
  }
  return out;
}

std::string format_metrics_table(const std::vector<std::pair<std::string, RankingMetrics>>& rows) {
  if (rows.empty()) return {};
  std::size_t label_width = 5;
  for (const auto& [label, _] : rows) label_width = std::max(label_width, label.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_width)) << "model";
  for (const auto& [k, _] : rows.front().second.hr) out << "  " << std::setw(8) << ("HR@" + std::to_string(k));
  for (const auto& [k, _] : rows.front().second.ndcg) out << "  " << std::setw(8) << ("NDCG@" + std::to_string(k));
  out << "\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& [label, m] : rows) {
    out << std::left << std::setw(static_cast<int>(label_width)) << label;
    for (const auto& [_, v] : m.hr) out << "  " << std::setw(8) << v;
    for (const auto& [_, v] : m.ndcg) out << "  " << std::setw(8) << v;
    out << "\n";
  }
  return out.str();
}

}  // namespace mclrec
