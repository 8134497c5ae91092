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

// Experiment drivers behind the CLI verbs. Every single-model run writes
//   <out>/config.txt  <out>/train_log.jsonl  <out>/report.json  <out>/checkpoints/
// and sweeps nest one such directory per cell next to their summary files.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mclrec/config.hpp"
#include "mclrec/corpus.hpp"
#include "mclrec/meta_augmenter.hpp"

namespace mclrec {

struct PreparedData {
  Corpus corpus;
  DatasetSplit split;
};

// Loads dataset.path with dataset.min_interactions and splits it.
PreparedData prepare_data(const ExperimentConfig& cfg);

struct RunOptions {
  bool resume = false;
  bool quiet = true;  // progress lines on stderr when false
};

// fit + test evaluation for cfg.train (its seed is used as is). A finalized
// report in `out_dir` is returned unchanged when resuming and is an error
// otherwise.
nlohmann::json run_train(const ExperimentConfig& cfg, const RunOptions& opts = {});
// Same, on already prepared data (used by sweeps to avoid reloading).
nlohmann::json run_train(const ExperimentConfig& cfg, const PreparedData& data, const RunOptions& opts = {});

// One run per (variant, seed); summary in ablation.json / ablation.txt.
nlohmann::json run_ablation(const ExperimentConfig& cfg, const RunOptions& opts = {});
// One run per (batch size, seed); batch_sweep.csv has one row per size.
nlohmann::json run_batch_sweep(const ExperimentConfig& cfg, const RunOptions& opts = {});
// One run per seed, then test evaluation under each noise ratio;
// noise_sweep.csv has one row per ratio.
nlohmann::json run_noise_sweep(const ExperimentConfig& cfg, const RunOptions& opts = {});
// Noise evaluation of an already trained encoder.
nlohmann::json noise_curve(const EncoderParams& encoder, const PreparedData& data, const std::vector<double>& ratios,
                           std::uint64_t noise_seed, const EvalConfig& eval);
// |lambdas| x |betas| runs with gamma = 0.1 * beta; the best validation
// NDCG@20 cell is marked.
nlohmann::json run_weight_grid(const ExperimentConfig& cfg, const RunOptions& opts = {});
// Separate fit per length group (full filtered sequence length).
nlohmann::json run_group_eval(const ExperimentConfig& cfg, const RunOptions& opts = {});

// Evaluates a model checkpoint on the valid or test part of cfg's dataset.
nlohmann::json run_eval(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                        const std::string& part);

struct ViewDump {
  std::vector<std::size_t> batch;
  std::vector<std::string> user;
  ViewQuadruple views;
};

// Augments the chosen split part with a seed-fixed rng, encodes without
// dropout and writes the four view matrices as a tab-separated table
// (columns: view, row, batch, user, c0..c{d-1}; shortest round-trip decimals).
ViewDump export_views(const std::filesystem::path& checkpoint, const ExperimentConfig& cfg,
                      const std::filesystem::path& out);
ViewDump read_view_dump(const std::filesystem::path& path);

}  // namespace mclrec
