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

// Two-stage training loop.
//
// Stage 1 samples two augmented copies of the batch, encodes the original and
// both copies, maps the copies through the augmenters and takes one step on
// L0 for the encoder parameters only. Stage 2 re-encodes the same augmented
// copies under the updated (frozen) encoder and takes one step on L1 for the
// augmenter parameters only. The `joint` variant replaces both with a single
// step on L0 over every parameter.

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mclrec/augmentation.hpp"
#include "mclrec/corpus.hpp"
#include "mclrec/encoder.hpp"
#include "mclrec/evaluation.hpp"
#include "mclrec/meta_augmenter.hpp"
#include "mclrec/objectives.hpp"
#include "mclrec/optimizer.hpp"

namespace mclrec {

enum class Variant { full, no_cl1, no_cl2, no_reg, shared_augmenters, joint };
std::string to_string(Variant v);
Variant parse_variant(const std::string& name);
std::vector<Variant> all_variants();

// per_batch: stage 1 then stage 2 on every batch.
// per_epoch: stage 1 over all batches, then stage 2 over the same batches
// and the augmented copies drawn for them.
enum class Schedule { per_batch, per_epoch };
std::string to_string(Schedule s);
Schedule parse_schedule(const std::string& name);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  EncoderConfig model;
  AugmentConfig aug;
  LossWeights weights;
  double lr_theta = 1e-3;
  double lr_phi = 1e-3;
  std::size_t batch_size = 256;
  std::size_t epochs = 100;
  std::size_t patience = 10;
  Variant variant = Variant::full;
  Schedule schedule = Schedule::per_batch;
  std::uint64_t seed = 2026;

  void validate() const;
  nlohmann::json to_json() const;

  // Loss weights after the variant switches (no_cl1: lambda 0, no_cl2: beta 0,
  // no_reg: gamma 0).
  LossWeights effective_weights() const;
  // Weight of L_cl2 inside L1; 0 for no_cl2, which leaves gamma * R.
  double stage2_cl2_weight() const;
  bool shared_augmenters() const { return variant == Variant::shared_augmenters; }
};

struct TrainState {
  EncoderParams encoder;
  AugmenterParams augmenters;
  Adam theta_opt;  // encoder group
  Adam phi_opt;    // augmenter group
  std::size_t epoch = 0;
  std::size_t step = 0;
  double best_metric = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t bad_epochs = 0;

  static TrainState initialize(const TrainConfig& cfg, std::size_t num_items);
};

// Independent rng stream for one purpose of one step.
Rng step_rng(std::uint64_t seed, std::uint64_t purpose, std::uint64_t step);

LossBreakdown train_step_stage1(const SequenceBatch& batch, TrainState& state, const TrainConfig& cfg, Rng& rng,
                                AugmentedBatch* views_out = nullptr);
LossBreakdown train_step_stage2(const AugmentedBatch& views, TrainState& state, const TrainConfig& cfg, Rng& rng);
LossBreakdown train_step_joint(const SequenceBatch& batch, TrainState& state, const TrainConfig& cfg, Rng& rng);
// Plain next-item step on the encoder (no augmentation, no contrastive terms).
LossBreakdown train_step_rec_only(const SequenceBatch& batch, TrainState& state, const TrainConfig& cfg, Rng& rng);

enum class StepStage { stage1, stage2, joint };
std::string to_string(StepStage s);

struct StepEvent {
  StepStage stage;
  std::size_t epoch;
  std::size_t step;
  const LossBreakdown& loss;
};
using StepObserver = std::function<void(const StepEvent&, const TrainState&)>;

struct EpochSummary {
  std::size_t epoch = 0;
  std::size_t batches = 0;
  LossBreakdown stage1;  // mean over batches (joint steps land here)
  LossBreakdown stage2;  // mean over batches; zero for joint
  double seconds = 0.0;

  nlohmann::json to_json() const;
};

EpochSummary train_epoch(std::span<const Example> examples, TrainState& state, const TrainConfig& cfg,
                         const StepObserver& observer = {});

struct FitOptions {
  EvalConfig eval;
  std::ostream* log = nullptr;             // JSON lines, one per epoch (and per step if log_steps)
  bool log_steps = false;
  std::filesystem::path checkpoint_dir;    // empty: no checkpoints
  std::size_t checkpoint_every = 0;        // 0: only last + best
  bool resume = false;                     // continue from checkpoint_dir/last.ckpt when present
  StepObserver observer;
};

struct FitResult {
  TrainState state;       // parameters of the best validation epoch
  RankingMetrics best_valid;
  nlohmann::json history;  // per-epoch records
  std::size_t epochs_run = 0;
  bool stopped_early = false;
  double seconds = 0.0;
};

// Trains until `epochs` or until validation NDCG@20 has not improved for more
// than `patience` consecutive epochs.
FitResult fit(const DatasetSplit& split, const ItemVocab& vocab, const TrainConfig& cfg, const FitOptions& options = {});

// Checkpoint helpers. A state checkpoint holds encoder/, augmenter/ and
// optim/{theta,phi}/ tensors plus counters in its metadata.
void save_state(const std::filesystem::path& path, const TrainState& state, const TrainConfig& cfg,
                const nlohmann::json& extra = {});
TrainState load_state(const std::filesystem::path& path, const TrainConfig& cfg, nlohmann::json* meta = nullptr);

// Model-only checkpoint (encoder + augmenters) and its reader.
void save_model(const std::filesystem::path& path, const EncoderParams& encoder, const AugmenterParams& augmenters,
                const nlohmann::json& meta);
struct LoadedModel {
  EncoderParams encoder;
  AugmenterParams augmenters;
  nlohmann::json meta;
};
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace mclrec
