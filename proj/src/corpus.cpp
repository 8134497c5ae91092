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

#include "mclrec/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace mclrec {

nlohmann::json CorpusStats::to_json() const {
  return {{"users", users},
          {"items", items},
          {"actions", actions},
          {"avg_length", avg_length},
          {"sparsity", sparsity}};
}

CorpusStats compute_stats(std::span<const InteractionSequence> seqs, std::size_t num_items) {
  CorpusStats s;
  s.users = seqs.size();
  s.items = num_items;
  for (const auto& seq : seqs) s.actions += seq.items.size();
  if (s.users > 0) s.avg_length = static_cast<double>(s.actions) / static_cast<double>(s.users);
  if (s.users > 0 && s.items > 0) {
    s.sparsity = 1.0 - static_cast<double>(s.actions) /
                           (static_cast<double>(s.users) * static_cast<double>(s.items));
  }
  return s;
}

std::size_t filter_to_fixpoint(std::vector<InteractionSequence>& seqs, std::size_t min_interactions) {
  std::size_t passes = 0;
  while (true) {
    std::unordered_map<ItemId, std::size_t> counts;
    for (const auto& seq : seqs)
      for (ItemId id : seq.items) ++counts[id];

    bool changed = false;
    for (auto& seq : seqs) {
      const auto before = seq.items.size();
      std::erase_if(seq.items, [&](ItemId id) { return counts[id] < min_interactions; });
      changed |= seq.items.size() != before;
    }
    const auto users_before = seqs.size();
    std::erase_if(seqs, [&](const InteractionSequence& s) { return s.items.size() < min_interactions; });
    changed |= seqs.size() != users_before;

    if (!changed) break;
    ++passes;
  }
  return passes;
}

namespace {

// Re-assigns dense ids in first-seen order and returns the old->new map
// inverse as a token table.
ItemVocab densify(std::vector<InteractionSequence>& seqs, const std::vector<std::string>& raw_tokens) {
  std::unordered_map<ItemId, ItemId> remap;
  ItemVocab vocab;
  for (auto& seq : seqs) {
    for (ItemId& id : seq.items) {
      auto [it, inserted] = remap.try_emplace(id, static_cast<ItemId>(remap.size() + 1));
      if (inserted) {
        vocab.tokens.push_back(raw_tokens.empty() ? std::to_string(id)
                                                  : raw_tokens[static_cast<std::size_t>(id - 1)]);
      }
      id = it->second;
    }
  }
  vocab.size = remap.size();
  return vocab;
}

}  // namespace

Corpus parse_corpus(std::istream& in, std::size_t min_interactions) {
  std::vector<InteractionSequence> seqs;
  std::vector<std::string> raw_tokens;
  std::unordered_map<std::string, ItemId> token_ids;
  std::unordered_set<std::string> users;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string user;
    if (!(fields >> user)) continue;  // blank line
    InteractionSequence seq;
    seq.user_id = user;
    std::string token;
    while (fields >> token) {
      auto [it, inserted] = token_ids.try_emplace(token, static_cast<ItemId>(token_ids.size() + 1));
      if (inserted) raw_tokens.push_back(token);
      seq.items.push_back(it->second);
    }
    if (seq.items.empty()) {
      throw CorpusError("line " + std::to_string(line_no) + ": user '" + user + "' has no items");
    }
    if (!users.insert(user).second) {
      throw CorpusError("line " + std::to_string(line_no) + ": duplicate user '" + user + "'");
    }
    seqs.push_back(std::move(seq));
  }

  filter_to_fixpoint(seqs, min_interactions);
  if (seqs.empty()) {
    throw CorpusError("corpus is empty after filtering with min_interactions=" +
                      std::to_string(min_interactions));
  }

  Corpus corpus;
  corpus.vocab = densify(seqs, raw_tokens);
  corpus.sequences = std::move(seqs);
  corpus.stats = compute_stats(corpus.sequences, corpus.vocab.size);
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, std::size_t min_interactions) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path.string());
  return parse_corpus(in, min_interactions);
}

Corpus make_corpus(std::vector<InteractionSequence> seqs, std::size_t num_items) {
  Corpus corpus;
  corpus.vocab.size = num_items;
  for (std::size_t i = 1; i <= num_items; ++i) corpus.vocab.tokens.push_back(std::to_string(i));
  for (const auto& seq : seqs) {
    for (ItemId id : seq.items) {
      if (!corpus.vocab.is_real(id)) {
        throw CorpusError("user '" + seq.user_id + "': item id " + std::to_string(id) + " out of range");
      }
    }
  }
  corpus.sequences = std::move(seqs);
  corpus.stats = compute_stats(corpus.sequences, num_items);
  return corpus;
}

DatasetSplit split_leave_one_out(std::span<const InteractionSequence> seqs) {
  DatasetSplit split;
  split.train.reserve(seqs.size());
  split.valid.reserve(seqs.size());
  split.test.reserve(seqs.size());
  for (std::size_t u = 0; u < seqs.size(); ++u) {
    const auto& items = seqs[u].items;
    if (items.size() < 3) {
      throw CorpusError("user '" + seqs[u].user_id + "' has " + std::to_string(items.size()) +
                        " items; leave-one-out needs at least 3");
    }
    const auto n = items.size();
    InteractionSequence train{seqs[u].user_id, {items.begin(), items.end() - 2}};
    split.valid.push_back({u, train.items, items[n - 2]});
    split.test.push_back({u, {items.begin(), items.end() - 1}, items[n - 1]});
    split.train.push_back(std::move(train));
  }
  return split;
}

std::vector<Example> training_examples(const DatasetSplit& split) {
  std::vector<Example> out;
  for (std::size_t u = 0; u < split.train.size(); ++u) {
    const auto& items = split.train[u].items;
    for (std::size_t j = 1; j < items.size(); ++j) {
      out.push_back({u, {items.begin(), items.begin() + static_cast<std::ptrdiff_t>(j)}, items[j]});
    }
  }
  return out;
}

std::vector<ItemId> pad_row(std::span<const ItemId> items, std::size_t n) {
  std::vector<ItemId> row(n, kPadId);
  const std::size_t keep = std::min(n, items.size());
  std::copy(items.end() - static_cast<std::ptrdiff_t>(keep), items.end(),
            row.begin() + static_cast<std::ptrdiff_t>(n - keep));
  return row;
}

std::vector<ItemId> strip_padding(std::span<const ItemId> row) {
  auto first = std::find_if(row.begin(), row.end(), [](ItemId id) { return id != kPadId; });
  return {first, row.end()};
}

SequenceBatch pad_batch(std::span<const Example> examples, std::size_t n) {
  SequenceBatch batch;
  batch.ids = IdMatrix::Constant(static_cast<Eigen::Index>(examples.size()), static_cast<Eigen::Index>(n),
                                 kPadId);
  for (std::size_t b = 0; b < examples.size(); ++b) {
    const auto& ex = examples[b];
    const std::size_t keep = std::min(n, ex.input.size());
    for (std::size_t k = 0; k < keep; ++k) {
      batch.ids(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(n - keep + k)) =
          ex.input[ex.input.size() - keep + k];
    }
    batch.lengths.push_back(keep);
    batch.targets.push_back(ex.target);
    batch.users.push_back(ex.user);
  }
  return batch;
}

std::vector<SequenceBatch> make_batches(std::span<const Example> examples, std::size_t batch_size,
                                        std::size_t n, std::uint64_t shuffle_seed) {
  if (batch_size == 0 || n == 0) throw std::invalid_argument("make_batches: batch_size and n must be >= 1");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(shuffle_seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

  std::vector<SequenceBatch> batches;
  std::vector<Example> chunk;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    chunk.clear();
    for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
      chunk.push_back(examples[order[i]]);
    }
    batches.push_back(pad_batch(chunk, n));
  }
  return batches;
}

std::vector<SequenceBatch> make_batches(const DatasetSplit& split, std::size_t batch_size, std::size_t n,
                                        std::uint64_t shuffle_seed) {
  const auto examples = training_examples(split);
  return make_batches(examples, batch_size, n, shuffle_seed);
}

std::string LengthRange::label() const {
  if (max && *max == min) return "=" + std::to_string(min);
  if (!max) return ">" + std::to_string(min == 0 ? 0 : min - 1);
  return std::to_string(min) + "-" + std::to_string(*max);
}

LengthRange parse_length_range(const std::string& text) {
  auto number = [&](const std::string& s) -> std::size_t {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw std::invalid_argument("bad length range '" + text + "'");
    }
    return std::stoul(s);
  };
  if (text.empty()) throw std::invalid_argument("empty length range");
  if (text[0] == '>') return {number(text.substr(1)) + 1, std::nullopt};
  if (text[0] == '=') {
    const auto v = number(text.substr(1));
    return {v, v};
  }
  const auto dash = text.find('-');
  if (dash == std::string::npos) {
    const auto v = number(text);
    return {v, v};
  }
  LengthRange r{number(text.substr(0, dash)), std::nullopt};
  if (dash + 1 < text.size()) r.max = number(text.substr(dash + 1));
  if (r.max && *r.max < r.min) throw std::invalid_argument("inverted length range '" + text + "'");
  return r;
}

std::map<LengthRange, std::vector<InteractionSequence>> group_by_length(
    std::span<const InteractionSequence> seqs, std::span<const LengthRange> bounds) {
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    for (std::size_t j = i + 1; j < bounds.size(); ++j) {
      const auto& a = bounds[i];
      const auto& b = bounds[j];
      const bool disjoint = (a.max && *a.max < b.min) || (b.max && *b.max < a.min);
      if (!disjoint) throw std::invalid_argument("length ranges " + a.label() + " and " + b.label() + " overlap");
    }
  }
  std::map<LengthRange, std::vector<InteractionSequence>> groups;
  for (const auto& r : bounds) groups[r];
  std::vector<std::size_t> uncovered;
  for (const auto& seq : seqs) {
    auto it = std::find_if(bounds.begin(), bounds.end(),
                           [&](const LengthRange& r) { return r.contains(seq.items.size()); });
    if (it == bounds.end()) {
      uncovered.push_back(seq.items.size());
      continue;
    }
    groups[*it].push_back(seq);
  }
  if (!uncovered.empty()) {
    std::sort(uncovered.begin(), uncovered.end());
    uncovered.erase(std::unique(uncovered.begin(), uncovered.end()), uncovered.end());
    std::string msg = "sequence lengths not covered by any group:";
    for (auto len : uncovered) msg += " " + std::to_string(len);
    throw std::invalid_argument(msg);
  }
  return groups;
}

}  // namespace mclrec
