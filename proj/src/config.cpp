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

#include "mclrec/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mclrec {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value for " + key + ": '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const auto t = lower(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + text + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
  return out.str();
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt(values[i]);
  return out;
}

}  // namespace

ConfigMap parse_config_text(std::istream& in, const std::string& origin) {
  ConfigMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    map[key] = trim(line.substr(eq + 1));
  }
  return map;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config_text(in, path.string());
}

void apply_overrides(ConfigMap& map, const std::vector<std::string>& overrides) {
  for (auto item : overrides) {
    if (item.rfind("--", 0) == 0) item.erase(0, 2);
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must be key=value: '" + item + "'");
    map[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "dataset.path",      "dataset.name",        "dataset.min_interactions",
      "model.d",           "model.n",             "model.blocks",
      "model.heads",       "model.dropout",       "aug.ops",
      "aug.crop_ratio",    "aug.mask_ratio",      "aug.reorder_ratio",
      "train.lr_theta",    "train.lr_phi",        "train.batch_size",
      "train.epochs",      "train.patience",      "train.variant",
      "train.schedule",    "loss.lambda",         "loss.beta",
      "loss.gamma",        "loss.tau",            "eval.ks",
      "eval.batch_size",   "run.out",             "run.seeds",
      "run.log_steps",     "run.checkpoint_every", "sweep.batch_sizes",
      "sweep.noise_ratios", "sweep.noise_seed",   "grid.lambdas",
      "grid.betas",        "groups.bounds",       "ablation.variants",
      "export.split"};
  return keys;
}

std::optional<DatasetDefaults> dataset_defaults(const std::string& name) {
  const auto n = lower(name);
  if (n == "sports") return DatasetDefaults{0.04, 0.4};
  if (n == "beauty") return DatasetDefaults{0.0, 0.05};
  if (n == "yelp") return DatasetDefaults{0.03, 0.1};
  return std::nullopt;
}

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& map) {
  const auto& known = known_config_keys();
  std::vector<std::string> unknown;
  for (const auto& [key, _] : map) {
    if (std::find(known.begin(), known.end(), key) == known.end()) unknown.push_back(key);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }

  ExperimentConfig c;
  auto get = [&map](const std::string& key) -> const std::string* {
    auto it = map.find(key);
    return it == map.end() ? nullptr : &it->second;
  };
  auto size = [&](const std::string& key, std::size_t& dst) {
    if (auto v = get(key)) dst = parse_number<std::size_t>(key, *v);
  };
  auto real = [&](const std::string& key, double& dst) {
    if (auto v = get(key)) dst = parse_number<double>(key, *v);
  };

  if (auto v = get("dataset.path")) c.dataset_path = *v;
  if (auto v = get("dataset.name")) c.dataset_name = *v;
  size("dataset.min_interactions", c.min_interactions);

  auto& t = c.train;
  size("model.d", t.model.dim);
  size("model.n", t.model.max_len);
  size("model.blocks", t.model.blocks);
  size("model.heads", t.model.heads);
  real("model.dropout", t.model.dropout);

  if (auto v = get("aug.ops")) {
    t.aug.ops.clear();
    for (const auto& name : split_list(*v)) t.aug.ops.push_back(parse_augment_kind(name));
  }
  real("aug.crop_ratio", t.aug.crop_ratio);
  real("aug.mask_ratio", t.aug.mask_ratio);
  real("aug.reorder_ratio", t.aug.reorder_ratio);

  real("train.lr_theta", t.lr_theta);
  real("train.lr_phi", t.lr_phi);
  size("train.batch_size", t.batch_size);
  size("train.epochs", t.epochs);
  size("train.patience", t.patience);
  if (auto v = get("train.variant")) t.variant = parse_variant(*v);
  if (auto v = get("train.schedule")) t.schedule = parse_schedule(*v);

  if (const auto d = dataset_defaults(c.dataset_name)) {
    t.weights.lambda = d->lambda;
    t.weights.beta = d->beta;
  }
  real("loss.lambda", t.weights.lambda);
  real("loss.beta", t.weights.beta);
  t.weights.gamma = 0.1 * t.weights.beta;
  real("loss.gamma", t.weights.gamma);
  real("loss.tau", t.weights.temperature);

  if (auto v = get("eval.ks")) c.eval.ks = parse_list<std::size_t>("eval.ks", *v);
  size("eval.batch_size", c.eval.batch_size);

  if (auto v = get("run.out")) c.out_dir = *v;
  if (auto v = get("run.seeds")) c.seeds = parse_list<std::uint64_t>("run.seeds", *v);
  if (auto v = get("run.log_steps")) c.log_steps = parse_bool("run.log_steps", *v);
  size("run.checkpoint_every", c.checkpoint_every);

  if (auto v = get("sweep.batch_sizes")) c.batch_sizes = parse_list<std::size_t>("sweep.batch_sizes", *v);
  if (auto v = get("sweep.noise_ratios")) c.noise_ratios = parse_list<double>("sweep.noise_ratios", *v);
  if (auto v = get("sweep.noise_seed")) c.noise_seed = parse_number<std::uint64_t>("sweep.noise_seed", *v);
  if (auto v = get("grid.lambdas")) c.grid_lambdas = parse_list<double>("grid.lambdas", *v);
  if (auto v = get("grid.betas")) c.grid_betas = parse_list<double>("grid.betas", *v);
  if (auto v = get("groups.bounds")) c.group_bounds = split_list(*v);
  if (auto v = get("ablation.variants")) {
    c.variants.clear();
    for (const auto& name : split_list(*v)) c.variants.push_back(parse_variant(name));
  }
  if (auto v = get("export.split")) {
    if (*v != "valid" && *v != "test") throw ConfigError("export.split must be valid or test");
    c.export_split = *v;
  }
  if (c.seeds.empty()) throw ConfigError("run.seeds must not be empty");
  c.train.seed = c.seeds.front();
  c.train.validate();
  return c;
}

ConfigMap ExperimentConfig::to_map() const {
  const auto& t = train;
  std::vector<std::string> ops, vars;
  for (auto k : t.aug.ops) ops.push_back(to_string(k));
  for (auto v : variants) vars.push_back(to_string(v));
  return {{"dataset.path", dataset_path},
          {"dataset.name", dataset_name},
          {"dataset.min_interactions", std::to_string(min_interactions)},
          {"model.d", std::to_string(t.model.dim)},
          {"model.n", std::to_string(t.model.max_len)},
          {"model.blocks", std::to_string(t.model.blocks)},
          {"model.heads", std::to_string(t.model.heads)},
          {"model.dropout", fmt(t.model.dropout)},
          {"aug.ops", join(ops)},
          {"aug.crop_ratio", fmt(t.aug.crop_ratio)},
          {"aug.mask_ratio", fmt(t.aug.mask_ratio)},
          {"aug.reorder_ratio", fmt(t.aug.reorder_ratio)},
          {"train.lr_theta", fmt(t.lr_theta)},
          {"train.lr_phi", fmt(t.lr_phi)},
          {"train.batch_size", std::to_string(t.batch_size)},
          {"train.epochs", std::to_string(t.epochs)},
          {"train.patience", std::to_string(t.patience)},
          {"train.variant", to_string(t.variant)},
          {"train.schedule", to_string(t.schedule)},
          {"loss.lambda", fmt(t.weights.lambda)},
          {"loss.beta", fmt(t.weights.beta)},
          {"loss.gamma", fmt(t.weights.gamma)},
          {"loss.tau", fmt(t.weights.temperature)},
          {"eval.ks", join(eval.ks)},
          {"eval.batch_size", std::to_string(eval.batch_size)},
          {"run.out", out_dir.string()},
          {"run.seeds", join(seeds)},
          {"run.log_steps", log_steps ? "true" : "false"},
          {"run.checkpoint_every", std::to_string(checkpoint_every)},
          {"sweep.batch_sizes", join(batch_sizes)},
          {"sweep.noise_ratios", join_doubles(noise_ratios)},
          {"sweep.noise_seed", std::to_string(noise_seed)},
          {"grid.lambdas", join_doubles(grid_lambdas)},
          {"grid.betas", join_doubles(grid_betas)},
          {"groups.bounds", join(group_bounds)},
          {"ablation.variants", join(vars)},
          {"export.split", export_split}};
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  for (const auto& [key, value] : to_map()) out << key << " = " << value << "\n";
  return out.str();
}

}  // namespace mclrec
