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

// Binary archive of named tensors plus a JSON metadata block.
//
// Layout (host byte order):
//   "MCLRCKPT" | u32 version | u64 meta_len | meta (JSON text)
//   u64 count | count x { u32 name_len | name | i64 rows | i64 cols | f64[rows*cols] }
// Tensors are stored row-major, so a save/load round trip is bit-exact.

#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "mclrec/common.hpp"

namespace mclrec {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  nlohmann::json meta;
  std::map<std::string, Matrix> tensors;

  // Copies every tensor named `prefix + name` into the matching destination.
  // Missing tensors and shape mismatches throw CheckpointError.
  void restore(const std::string& prefix, const TensorList& dst) const;
};

// Writes to a temporary sibling and renames, so readers never observe a
// partially written file.
void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta, const ConstTensorList& tensors);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Prepends `prefix` to every name.
ConstTensorList with_prefix(const std::string& prefix, const ConstTensorList& tensors);

}  // namespace mclrec
