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

// Stochastic sequence-level augmentation (crop / mask / reorder).
//
// The operators act on the unpadded item list; the row-level entry points
// strip left padding first and re-pad to the original row width afterwards,
// so padding never ends up inside a crop or reorder window.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "mclrec/common.hpp"

namespace mclrec {

enum class AugmentKind { crop, mask, reorder };

std::string to_string(AugmentKind kind);
AugmentKind parse_augment_kind(const std::string& name);

struct AugmentOp {
  AugmentKind kind = AugmentKind::crop;
  double ratio = 0.6;  // in (0, 1]
};

struct AugmentConfig {
  std::vector<AugmentKind> ops{AugmentKind::crop, AugmentKind::mask, AugmentKind::reorder};
  double crop_ratio = 0.6;
  double mask_ratio = 0.3;
  double reorder_ratio = 0.2;

  std::vector<AugmentOp> operators() const;
};

// Contiguous window of length max(1, floor(ratio * L)).
std::vector<ItemId> crop(std::span<const ItemId> items, double ratio, Rng& rng);
// floor(ratio * L) distinct positions replaced by `mask_id`.
std::vector<ItemId> mask(std::span<const ItemId> items, double ratio, ItemId mask_id, Rng& rng);
// A window of length max(1, floor(ratio * L)) is shuffled in place.
std::vector<ItemId> reorder(std::span<const ItemId> items, double ratio, Rng& rng);

std::vector<ItemId> apply(const AugmentOp& op, std::span<const ItemId> items, ItemId mask_id, Rng& rng);

struct AugmentedPairSeqs {
  std::vector<ItemId> view1;  // padded to the source row width
  std::vector<ItemId> view2;
  AugmentKind kind1 = AugmentKind::crop;
  AugmentKind kind2 = AugmentKind::crop;
};

// Draws g1, g2 independently and uniformly from `ops` (with replacement) and
// applies both to the same padded source row.
AugmentedPairSeqs sample_pair(std::span<const ItemId> row, std::span<const AugmentOp> ops, ItemId mask_id,
                              Rng& rng);

struct AugmentedBatch {
  IdMatrix view1;
  IdMatrix view2;
};

AugmentedBatch augment_batch(const IdMatrix& ids, std::span<const AugmentOp> ops, ItemId mask_id, Rng& rng);

}  // namespace mclrec
