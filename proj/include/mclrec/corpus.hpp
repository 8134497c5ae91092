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

// Interaction corpus: ingestion, k-core filtering, leave-one-out splits and
// padded batches.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mclrec/common.hpp"

namespace mclrec {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Real items occupy [1, size]; 0 is padding and size + 1 is the mask token.
struct ItemVocab {
  std::size_t size = 0;
  // tokens[id - 1] is the raw token of real item `id`.
  std::vector<std::string> tokens;

  ItemId pad_id() const { return kPadId; }
  ItemId mask_id() const { return static_cast<ItemId>(size + 1); }
  bool is_real(ItemId id) const { return id >= 1 && static_cast<std::size_t>(id) <= size; }
  // Rows of the embedding table: real items plus pad and mask.
  std::size_t table_rows() const { return size + 2; }
};

struct InteractionSequence {
  std::string user_id;
  std::vector<ItemId> items;
};

struct CorpusStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t actions = 0;
  double avg_length = 0.0;
  double sparsity = 0.0;

  nlohmann::json to_json() const;
};

struct Corpus {
  std::vector<InteractionSequence> sequences;
  ItemVocab vocab;
  CorpusStats stats;
};

CorpusStats compute_stats(std::span<const InteractionSequence> seqs, std::size_t num_items);

// Iterated min-interaction filter: drops items seen fewer than
// `min_interactions` times and users with fewer than `min_interactions`
// items until nothing changes. Returns the number of passes that changed
// something.
std::size_t filter_to_fixpoint(std::vector<InteractionSequence>& seqs, std::size_t min_interactions);

// One user per line: "user_id item_1 item_2 ...". Item tokens get dense ids in
// first-seen order after filtering.
Corpus parse_corpus(std::istream& in, std::size_t min_interactions);
Corpus load_corpus(const std::filesystem::path& path, std::size_t min_interactions);

// Builds a corpus directly from id sequences (ids must already be dense).
Corpus make_corpus(std::vector<InteractionSequence> seqs, std::size_t num_items);

// One prediction instance: the model reads `input` and must rank `target`.
struct Example {
  std::size_t user = 0;  // index into the source sequence list
  std::vector<ItemId> input;
  ItemId target = kPadId;
};

struct DatasetSplit {
  std::vector<InteractionSequence> train;  // full sequence minus last two items
  std::vector<Example> valid;              // (train items, second-to-last)
  std::vector<Example> test;               // (full minus last, last)
};

DatasetSplit split_leave_one_out(std::span<const InteractionSequence> seqs);

// Every (prefix, next item) pair of each training sequence.
std::vector<Example> training_examples(const DatasetSplit& split);

struct SequenceBatch {
  IdMatrix ids;                     // [batch x n], left-padded with kPadId
  std::vector<std::size_t> lengths;
  std::vector<ItemId> targets;
  std::vector<std::size_t> users;

  std::size_t size() const { return lengths.size(); }
};

// Left-pads (and truncates to the most recent n items) a set of examples.
SequenceBatch pad_batch(std::span<const Example> examples, std::size_t n);
std::vector<ItemId> pad_row(std::span<const ItemId> items, std::size_t n);
// Non-pad suffix of a padded row.
std::vector<ItemId> strip_padding(std::span<const ItemId> row);

// Shuffles with `shuffle_seed` and cuts into batches; the final partial batch
// is kept.
std::vector<SequenceBatch> make_batches(std::span<const Example> examples, std::size_t batch_size,
                                        std::size_t n, std::uint64_t shuffle_seed);
std::vector<SequenceBatch> make_batches(const DatasetSplit& split, std::size_t batch_size,
                                        std::size_t n, std::uint64_t shuffle_seed);

// Inclusive length range; `max` empty means unbounded.
struct LengthRange {
  std::size_t min = 0;
  std::optional<std::size_t> max;

  bool contains(std::size_t len) const { return len >= min && (!max || len <= *max); }
  std::string label() const;
  auto operator<=>(const LengthRange&) const = default;
};

// Accepts "5", "6-8", "9-" and ">8".
LengthRange parse_length_range(const std::string& text);

std::map<LengthRange, std::vector<InteractionSequence>> group_by_length(
    std::span<const InteractionSequence> seqs, std::span<const LengthRange> bounds);

}  // namespace mclrec
