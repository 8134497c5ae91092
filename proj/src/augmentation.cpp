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

#include "mclrec/augmentation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "mclrec/corpus.hpp"

namespace mclrec {

std::string to_string(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::crop: return "crop";
    case AugmentKind::mask: return "mask";
    case AugmentKind::reorder: return "reorder";
  }
  return "?";
}

AugmentKind parse_augment_kind(const std::string& name) {
  if (name == "crop") return AugmentKind::crop;
  if (name == "mask") return AugmentKind::mask;
  if (name == "reorder") return AugmentKind::reorder;
  throw std::invalid_argument("unknown augmentation '" + name + "' (expected crop|mask|reorder)");
}

std::vector<AugmentOp> AugmentConfig::operators() const {
  std::vector<AugmentOp> out;
  for (auto kind : ops) {
    double ratio = 0.0;
    switch (kind) {
      case AugmentKind::crop: ratio = crop_ratio; break;
      case AugmentKind::mask: ratio = mask_ratio; break;
      case AugmentKind::reorder: ratio = reorder_ratio; break;
    }
    if (!(ratio > 0.0 && ratio <= 1.0)) {
      throw std::invalid_argument(to_string(kind) + " ratio must be in (0, 1], got " + std::to_string(ratio));
    }
    out.push_back({kind, ratio});
  }
  return out;
}

namespace {

std::size_t window_length(double ratio, std::size_t len) {
  return std::max<std::size_t>(1, floor_count(ratio, len));
}

void require_nonempty(std::span<const ItemId> items, const char* op) {
  if (items.empty()) throw std::invalid_argument(std::string(op) + ": empty sequence");
}

}  // namespace

std::vector<ItemId> crop(std::span<const ItemId> items, double ratio, Rng& rng) {
  require_nonempty(items, "crop");
  const std::size_t w = window_length(ratio, items.size());
  const std::size_t start = uniform_index(rng, items.size() - w + 1);
  return {items.begin() + static_cast<std::ptrdiff_t>(start),
          items.begin() + static_cast<std::ptrdiff_t>(start + w)};
}

std::vector<ItemId> mask(std::span<const ItemId> items, double ratio, ItemId mask_id, Rng& rng) {
  require_nonempty(items, "mask");
  std::vector<ItemId> out(items.begin(), items.end());
  const std::size_t count = std::min(items.size(), floor_count(ratio, items.size()));
  std::vector<std::size_t> positions(items.size());
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `count` slots are a uniform draw without replacement.
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(positions[i], positions[i + uniform_index(rng, positions.size() - i)]);
    out[positions[i]] = mask_id;
  }
  return out;
}

std::vector<ItemId> reorder(std::span<const ItemId> items, double ratio, Rng& rng) {
  require_nonempty(items, "reorder");
  std::vector<ItemId> out(items.begin(), items.end());
  const std::size_t w = window_length(ratio, items.size());
  const std::size_t start = uniform_index(rng, items.size() - w + 1);
  for (std::size_t i = w; i > 1; --i) {
    std::swap(out[start + i - 1], out[start + uniform_index(rng, i)]);
  }
  return out;
}

std::vector<ItemId> apply(const AugmentOp& op, std::span<const ItemId> items, ItemId mask_id, Rng& rng) {
  switch (op.kind) {
    case AugmentKind::crop: return crop(items, op.ratio, rng);
    case AugmentKind::mask: return mask(items, op.ratio, mask_id, rng);
    case AugmentKind::reorder: return reorder(items, op.ratio, rng);
  }
  throw std::logic_error("unreachable");
}

AugmentedPairSeqs sample_pair(std::span<const ItemId> row, std::span<const AugmentOp> ops, ItemId mask_id,
                              Rng& rng) {
  if (ops.empty()) throw std::invalid_argument("sample_pair: empty operator set");
  const auto items = strip_padding(row);
  const AugmentOp& g1 = ops[uniform_index(rng, ops.size())];
  const AugmentOp& g2 = ops[uniform_index(rng, ops.size())];
  AugmentedPairSeqs pair;
  pair.kind1 = g1.kind;
  pair.kind2 = g2.kind;
  pair.view1 = pad_row(apply(g1, items, mask_id, rng), row.size());
  pair.view2 = pad_row(apply(g2, items, mask_id, rng), row.size());
  return pair;
}

AugmentedBatch augment_batch(const IdMatrix& ids, std::span<const AugmentOp> ops, ItemId mask_id, Rng& rng) {
  AugmentedBatch out{IdMatrix(ids.rows(), ids.cols()), IdMatrix(ids.rows(), ids.cols())};
  for (Eigen::Index b = 0; b < ids.rows(); ++b) {
    std::span<const ItemId> row(ids.row(b).data(), static_cast<std::size_t>(ids.cols()));
    const auto pair = sample_pair(row, ops, mask_id, rng);
    for (Eigen::Index k = 0; k < ids.cols(); ++k) {
      out.view1(b, k) = pair.view1[static_cast<std::size_t>(k)];
      out.view2(b, k) = pair.view2[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

}  // namespace mclrec
