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
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace mclrec {

using ItemId = std::int32_t;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IdMatrix = Eigen::Matrix<ItemId, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Rng = std::mt19937_64;

inline constexpr ItemId kPadId = 0;

// A list of named, mutable tensors. Every parameter container exposes one so
// that optimizers, checkpoints and checksums can walk parameters uniformly.
using TensorList = std::vector<std::pair<std::string, Matrix*>>;
using ConstTensorList = std::vector<std::pair<std::string, const Matrix*>>;

// Portable random helpers. std::*_distribution output is implementation
// defined, these are not.
std::size_t uniform_index(Rng& rng, std::size_t n);
double uniform01(Rng& rng);
double standard_normal(Rng& rng);

// splitmix64 mix of (base, stream); used to derive independent seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// FNV-1a over the raw bytes of every tensor, in list order.
std::uint64_t checksum(const ConstTensorList& tensors);
std::uint64_t checksum(const Matrix& m);

// floor/ceil of ratio * length with a small tolerance so that, e.g.,
// 0.29 * 100 counts as 29 rather than 28.
std::size_t floor_count(double ratio, std::size_t length);
std::size_t ceil_count(double ratio, std::size_t length);

ConstTensorList as_const(const TensorList& tensors);

}  // namespace mclrec
