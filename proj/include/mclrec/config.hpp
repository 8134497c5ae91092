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

// Flat "key = value" experiment configuration with dotted keys.
// Precedence, lowest first: built-in defaults, per-dataset loss weights,
// config file, command-line overrides. `#` starts a comment.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mclrec/evaluation.hpp"
#include "mclrec/trainer.hpp"

namespace mclrec {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(std::istream& in, const std::string& origin = "<config>");
ConfigMap load_config_file(const std::filesystem::path& path);
// Each override is "key=value"; a leading "--" is tolerated.
void apply_overrides(ConfigMap& map, const std::vector<std::string>& overrides);

// Every key accepted by ExperimentConfig::from_map.
const std::vector<std::string>& known_config_keys();

struct ExperimentConfig {
  std::string dataset_path;
  std::string dataset_name;
  std::size_t min_interactions = 5;
  TrainConfig train;
  EvalConfig eval;
  std::filesystem::path out_dir = "runs/default";
  std::vector<std::uint64_t> seeds{2026};
  bool log_steps = false;
  std::size_t checkpoint_every = 0;

  std::vector<std::size_t> batch_sizes{64, 128, 256};
  std::vector<double> noise_ratios{0.0, 0.05, 0.10, 0.15, 0.20, 0.30};
  std::uint64_t noise_seed = 99;
  std::vector<double> grid_lambdas{0.01, 0.02, 0.03, 0.04, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> grid_betas{0.01, 0.02, 0.03, 0.04, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::string> group_bounds{"=5", "6-8", ">8"};
  std::vector<Variant> variants = all_variants();
  std::string export_split = "test";

  // Unknown keys raise ConfigError listing all of them. loss.gamma, when
  // absent, is 0.1 * loss.beta. loss.lambda/loss.beta fall back to the
  // per-dataset table for sports, beauty and yelp.
  static ExperimentConfig from_map(const ConfigMap& map);
  ConfigMap to_map() const;
  std::string to_text() const;
};

struct DatasetDefaults {
  double lambda;
  double beta;
};
// Tuned loss weights by dataset name (case-insensitive).
std::optional<DatasetDefaults> dataset_defaults(const std::string& name);

}  // namespace mclrec
