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

#include "mclrec/common.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace mclrec {

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  const std::uint64_t range = n;
  // Rejection sampling on the top of the 64-bit range.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % range);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(Rng& rng) {
  // Box-Muller, one value per call.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

}  // namespace

std::uint64_t checksum(const ConstTensorList& tensors) {
  std::uint64_t h = kFnvOffset;
  for (const auto& [name, m] : tensors) {
    h = fnv1a(m->data(), sizeof(double) * static_cast<std::size_t>(m->size()), h);
  }
  return h;
}

std::uint64_t checksum(const Matrix& m) {
  return fnv1a(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()), kFnvOffset);
}

std::size_t floor_count(double ratio, std::size_t length) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(length) + 1e-9));
}

std::size_t ceil_count(double ratio, std::size_t length) {
  const double v = std::ceil(ratio * static_cast<double>(length) - 1e-9);
  return v <= 0.0 ? 0 : static_cast<std::size_t>(v);
}

ConstTensorList as_const(const TensorList& tensors) {
  ConstTensorList out;
  out.reserve(tensors.size());
  for (const auto& [name, m] : tensors) out.emplace_back(name, m);
  return out;
}

}  // namespace mclrec
