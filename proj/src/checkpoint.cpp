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

#include "mclrec/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <system_error>

namespace mclrec {

namespace {

constexpr char kMagic[8] = {'M', 'C', 'L', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw CheckpointError("truncated checkpoint: " + path.string());
  return value;
}

std::string get_string(std::istream& in, std::uint64_t len, const std::filesystem::path& path) {
  if (len > (1ULL << 32)) throw CheckpointError("corrupt checkpoint (string length): " + path.string());
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw CheckpointError("truncated checkpoint: " + path.string());
  return s;
}

}  // namespace

void Checkpoint::restore(const std::string& prefix, const TensorList& dst) const {
  for (const auto& [name, target] : dst) {
    auto it = tensors.find(prefix + name);
    if (it == tensors.end()) throw CheckpointError("checkpoint is missing tensor " + prefix + name);
    if (it->second.rows() != target->rows() || it->second.cols() != target->cols()) {
      throw CheckpointError("shape mismatch for " + prefix + name + ": stored " + std::to_string(it->second.rows()) +
                            "x" + std::to_string(it->second.cols()) + ", expected " +
                            std::to_string(target->rows()) + "x" + std::to_string(target->cols()));
    }
    *target = it->second;
  }
}

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta, const ConstTensorList& tensors) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw CheckpointError("cannot create directory for " + path.string() + ": " + ec.message());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kVersion);
    const std::string text = meta.dump();
    put<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    put<std::uint64_t>(out, tensors.size());
    for (const auto& [name, m] : tensors) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put<std::int64_t>(out, m->rows());
      put<std::int64_t>(out, m->cols());
      out.write(reinterpret_cast<const char*>(m->data()), static_cast<std::streamsize>(m->size() * sizeof(double)));
    }
    if (!out) throw CheckpointError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError("cannot move " + tmp.string() + " into place: " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint file: " + path.string());
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  const auto meta_len = get<std::uint64_t>(in, path);
  ckpt.meta = nlohmann::json::parse(get_string(in, meta_len, path));
  const auto count = get<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in, path);
    std::string name = get_string(in, name_len, path);
    const auto rows = get<std::int64_t>(in, path);
    const auto cols = get<std::int64_t>(in, path);
    if (rows < 0 || cols < 0) throw CheckpointError("corrupt tensor shape for " + name);
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw CheckpointError("truncated checkpoint: " + path.string());
    ckpt.tensors.emplace(std::move(name), std::move(m));
  }
  return ckpt;
}

ConstTensorList with_prefix(const std::string& prefix, const ConstTensorList& tensors) {
  ConstTensorList out;
  out.reserve(tensors.size());
  for (const auto& [name, m] : tensors) out.emplace_back(prefix + name, m);
  return out;
}

}  // namespace mclrec
