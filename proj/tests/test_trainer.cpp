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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <utility>

#include "fixtures.hpp"
#include "mclrec/checkpoint.hpp"
#include "mclrec/trainer.hpp"
#include "test_util.hpp"

namespace mclrec {
namespace {

using testing::tiny_config;
using testing::tiny_corpus;

struct Fixture {
  Corpus corpus = tiny_corpus();
  DatasetSplit split = split_leave_one_out(corpus.sequences);
  std::vector<Example> examples = training_examples(split);

  SequenceBatch batch(std::size_t size, std::size_t n = 10) const {
    return pad_batch(std::span<const Example>(examples).first(size), n);
  }
};

std::uint64_t theta_sum(const TrainState& s) { return checksum(s.encoder.tensors()); }
std::uint64_t phi_sum(const TrainState& s) { return checksum(s.augmenters.tensors()); }

double max_abs_diff(const ConstTensorList& a, const ConstTensorList& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, (*a[i].second - *b[i].second).cwiseAbs().maxCoeff());
  return worst;
}

TEST(TrainStep, StageOneLeavesAugmentersUntouched) {
  Fixture fx;
  auto cfg = tiny_config();
  auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
  const auto phi = phi_sum(state), theta = theta_sum(state);
  Rng rng(1);
  train_step_stage1(fx.batch(16), state, cfg, rng);
  EXPECT_EQ(phi_sum(state), phi);
  EXPECT_NE(theta_sum(state), theta);
  EXPECT_EQ(state.phi_opt.steps(), 0u);
}

TEST(TrainStep, StageTwoLeavesEncoderUntouched) {
  Fixture fx;
  auto cfg = tiny_config();
  auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
  Rng rng(1);
  AugmentedBatch views;
  train_step_stage1(fx.batch(16), state, cfg, rng, &views);
  const auto phi = phi_sum(state), theta = theta_sum(state);
  const auto theta_moments = checksum(std::as_const(state).theta_opt.state());
  train_step_stage2(views, state, cfg, rng);
  EXPECT_EQ(theta_sum(state), theta);
  EXPECT_EQ(checksum(std::as_const(state).theta_opt.state()), theta_moments);
  EXPECT_NE(phi_sum(state), phi);
}

TEST(TrainStep, NullWeightsReduceToPlainNextItemStep) {
  Fixture fx;
  auto cfg = tiny_config();
  cfg.weights = {0.0, 0.0, 0.0, 1.0};
  auto a = TrainState::initialize(cfg, fx.corpus.vocab.size);
  auto b = TrainState::initialize(cfg, fx.corpus.vocab.size);
  const auto before = a.encoder;
  const auto batch = fx.batch(24);
  for (int step = 0; step < 3; ++step) {
    Rng ra(100 + step), rb(100 + step);
    const auto la = train_step_stage1(batch, a, cfg, ra);
    const auto lb = train_step_rec_only(batch, b, cfg, rb);
    EXPECT_EQ(la.stage1_total, la.rec);
    EXPECT_NEAR(la.rec, lb.rec, 1e-12);
  }
  EXPECT_LT(max_abs_diff(std::as_const(a).encoder.tensors(), std::as_const(b).encoder.tensors()), 1e-9);
  EXPECT_GT(max_abs_diff(std::as_const(a).encoder.tensors(), before.tensors()), 1e-6);
}

TEST(TrainStep, OverfitsASmallBatch) {
  Fixture fx;
  auto cfg = tiny_config();
  cfg.model.dim = 16;
  cfg.model.dropout = 0.0;
  cfg.weights = {0.0, 0.0, 0.0, 1.0};
  cfg.lr_theta = 1e-2;
  auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
  const auto batch = fx.batch(4);
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 200; ++step) {
    Rng rng(step);
    const auto loss = train_step_stage1(batch, state, cfg, rng);
    if (step == 0) first = loss.rec;
    last = loss.rec;
  }
  EXPECT_LT(last, 0.5 * first) << "first " << first << " last " << last;
}

TEST(TrainStep, DegenerateStageTwoDoesNothing) {
  Fixture fx;
  auto cfg = tiny_config();
  cfg.weights.gamma = 0.0;
  auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
  Rng rng(3);
  AugmentedBatch views;
  train_step_stage1(fx.batch(1), state, cfg, rng, &views);
  const auto phi = phi_sum(state);
  const auto loss = train_step_stage2(views, state, cfg, rng);
  EXPECT_EQ(loss.stage2_total, 0.0);
  EXPECT_EQ(phi_sum(state), phi);
}

TEST(TrainStep, RepeatedStageTwoDescends) {
  Fixture fx;
  auto cfg = tiny_config();
  cfg.lr_phi = 1e-4;
  auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
  Rng rng(3);
  AugmentedBatch views;
  train_step_stage1(fx.batch(16), state, cfg, rng, &views);
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 20; ++i) {
    Rng fixed(77);  // same dropout masks every step: a fixed objective in phi
    const double l1 = train_step_stage2(views, state, cfg, fixed).stage2_total;
    EXPECT_LE(l1, prev + 1e-12) << "step " << i;
    prev = l1;
  }
}

TEST(TrainStep, ReencodingUsesUpdatedEncoder) {
  Fixture fx;
  auto cfg = tiny_config();
  auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
  const auto old_encoder = state.encoder;
  Rng rng(5);
  AugmentedBatch views;
  train_step_stage1(fx.batch(8), state, cfg, rng, &views);
  Rng a(9), b(9);
  const auto before = encode(views.view1, old_encoder, false, a).final;
  const auto after = encode(views.view1, state.encoder, false, b).final;
  EXPECT_GT((before - after).cwiseAbs().maxCoeff(), 0.0);
}

TEST(TrainStep, OptimizerGroupsAreDisjoint) {
  Fixture fx;
  auto cfg = tiny_config();
  auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
  for (const auto& [name, _] : state.theta_opt.state()) EXPECT_EQ(name.find("phi"), std::string::npos) << name;
  for (const auto& [name, _] : state.phi_opt.state()) EXPECT_NE(name.find("phi"), std::string::npos) << name;
  EXPECT_EQ(state.phi_opt.state().size(), 2 * state.augmenters.tensors().size());
}

TEST(TrainStep, NonFiniteLossAbortsWithDiagnostics) {
  Fixture fx;
  auto cfg = tiny_config();
  auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
  state.encoder.item_embeddings(1, 0) = std::numeric_limits<double>::quiet_NaN();
  state.step = 41;
  const auto batch = fx.batch(32);
  Rng rng(1);
  try {
    train_step_stage1(batch, state, cfg, rng);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("step 41"), std::string::npos) << msg;
    EXPECT_NE(msg.find("rec"), std::string::npos) << msg;
    EXPECT_NE(msg.find("theta="), std::string::npos) << msg;
  }
}

// Records per-step checksum changes and counts updates to the wrong group.
struct IsolationAudit {
  std::uint64_t theta = 0, phi = 0;
  std::size_t violations = 0, stage1 = 0, stage2 = 0, joint = 0;

  StepObserver observer() {
    return [this](const StepEvent& ev, const TrainState& s) {
      const auto t = theta_sum(s), p = phi_sum(s);
      const bool theta_changed = t != theta, phi_changed = p != phi;
      switch (ev.stage) {
        case StepStage::stage1: ++stage1; violations += phi_changed; break;
        case StepStage::stage2: ++stage2; violations += theta_changed; break;
        case StepStage::joint: ++joint; break;
      }
      theta = t;
      phi = p;
    };
  }
};

void run_isolation(Schedule schedule) {
  Fixture fx;
  auto cfg = tiny_config();
  cfg.schedule = schedule;
  auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
  IsolationAudit audit;
  audit.theta = theta_sum(state);
  audit.phi = phi_sum(state);
  for (int epoch = 0; epoch < 2; ++epoch) {
    train_epoch(fx.examples, state, cfg, audit.observer());
    ++state.epoch;
  }
  EXPECT_EQ(audit.violations, 0u);
  EXPECT_GT(audit.stage1, 0u);
  EXPECT_EQ(audit.stage1, audit.stage2);
}

TEST(TrainEpoch, StageIsolationPerBatch) { run_isolation(Schedule::per_batch); }
TEST(TrainEpoch, StageIsolationPerEpoch) { run_isolation(Schedule::per_epoch); }

TEST(TrainEpoch, NoCl2WithoutRegularizerNeverUpdatesAugmenters) {
  Fixture fx;
  auto cfg = tiny_config();
  cfg.variant = Variant::no_cl2;
  cfg.weights.gamma = 0.0;
  auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
  const auto phi = phi_sum(state);
  const auto summary = train_epoch(fx.examples, state, cfg);
  EXPECT_EQ(phi_sum(state), phi);
  EXPECT_EQ(summary.stage2.stage2_total, 0.0);
}

TEST(TrainEpoch, JointTakesOneStepPerBatchOnBothGroups) {
  Fixture fx;
  auto cfg = tiny_config();
  cfg.variant = Variant::joint;
  auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
  std::size_t both_changed = 0;
  std::uint64_t t0 = theta_sum(state), p0 = phi_sum(state);
  const auto summary = train_epoch(fx.examples, state, cfg, [&](const StepEvent& ev, const TrainState& s) {
    EXPECT_EQ(ev.stage, StepStage::joint);
    const auto t = theta_sum(s), p = phi_sum(s);
    both_changed += (t != t0 && p != p0);
    t0 = t;
    p0 = p;
  });
  EXPECT_EQ(state.theta_opt.steps(), summary.batches);
  EXPECT_EQ(state.phi_opt.steps(), summary.batches);
  EXPECT_EQ(both_changed, summary.batches);
}

TEST(TrainEpoch, SharedAugmentersExposeOneParameterSet) {
  Fixture fx;
  auto cfg = tiny_config();
  cfg.variant = Variant::shared_augmenters;
  auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
  EXPECT_TRUE(state.augmenters.shared);
  EXPECT_EQ(state.augmenters.tensors().size(), 6u);
  train_epoch(fx.examples, state, cfg);
  EXPECT_EQ(state.phi_opt.steps(), state.theta_opt.steps());
}

TEST(TrainEpoch, FixedSeedIsReproducible) {
  Fixture fx;
  auto cfg = tiny_config();
  auto run = [&] {
    auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
    EpochSummary last;
    for (int e = 0; e < 2; ++e) {
      last = train_epoch(fx.examples, state, cfg);
      ++state.epoch;
    }
    return std::make_pair(last.stage1.stage1_total, theta_sum(state));
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(TrainConfig, VariantWeightsAndParsing) {
  TrainConfig cfg;
  cfg.weights = {0.1, 0.2, 0.02, 1.0};
  cfg.variant = Variant::no_cl1;
  EXPECT_EQ(cfg.effective_weights().lambda, 0.0);
  cfg.variant = Variant::no_cl2;
  EXPECT_EQ(cfg.effective_weights().beta, 0.0);
  EXPECT_EQ(cfg.effective_weights().gamma, 0.02);
  EXPECT_EQ(cfg.stage2_cl2_weight(), 0.0);
  cfg.variant = Variant::no_reg;
  EXPECT_EQ(cfg.effective_weights().gamma, 0.0);
  EXPECT_EQ(cfg.stage2_cl2_weight(), 1.0);
  for (auto v : all_variants()) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_EQ(all_variants().size(), 6u);
  EXPECT_THROW(parse_variant("bogus"), std::invalid_argument);
  EXPECT_EQ(parse_schedule("per_epoch"), Schedule::per_epoch);
}

TEST(TrainConfig, DefaultHyperparameters) {
  const TrainConfig cfg;
  EXPECT_EQ(cfg.model.dim, 64u);
  EXPECT_EQ(cfg.model.max_len, 50u);
  EXPECT_EQ(cfg.model.blocks, 2u);
  EXPECT_EQ(cfg.model.heads, 2u);
  EXPECT_EQ(cfg.lr_theta, 1e-3);
  EXPECT_EQ(cfg.lr_phi, 1e-3);
  EXPECT_EQ(cfg.batch_size, 256u);
  EXPECT_EQ(cfg.schedule, Schedule::per_batch);
}

TEST(Fit, PatienceZeroStopsAfterFirstNonImprovingEpoch) {
  Fixture fx;
  auto cfg = tiny_config();
  cfg.epochs = 40;
  cfg.patience = 0;
  const auto result = fit(fx.split, fx.corpus.vocab, cfg);
  ASSERT_TRUE(result.stopped_early);
  const auto& h = result.history;
  ASSERT_EQ(h.size(), result.epochs_run);
  EXPECT_FALSE(h.back().at("improved").get<bool>());
  for (std::size_t i = 0; i + 1 < h.size(); ++i) EXPECT_TRUE(h[i].at("improved").get<bool>());
}

TEST(Fit, HistoryHasValidationMetricsAndLosses) {
  Fixture fx;
  auto cfg = tiny_config();
  std::ostringstream log;
  FitOptions opts;
  opts.log = &log;
  opts.log_steps = true;
  const auto result = fit(fx.split, fx.corpus.vocab, cfg, opts);
  ASSERT_EQ(result.history.size(), 2u);
  for (const auto& rec : result.history) {
    EXPECT_TRUE(rec.at("valid").contains("HR@20"));
    EXPECT_TRUE(rec.at("valid").contains("NDCG@20"));
    EXPECT_TRUE(rec.at("stage1").contains("L0"));
    EXPECT_TRUE(rec.at("stage2").contains("L1"));
  }
  std::size_t lines = 0, step_lines = 0;
  std::istringstream in(log.str());
  for (std::string line; std::getline(in, line);) {
    ++lines;
    const auto j = nlohmann::json::parse(line);
    step_lines += j.contains("stage");
  }
  EXPECT_EQ(lines - step_lines, 2u);
  EXPECT_GT(step_lines, 0u);
  EXPECT_EQ(result.best_valid.ndcg.count(20), 1u);
}

TEST(Fit, ResumeMatchesUninterruptedRun) {
  Fixture fx;
  testing::TempDir dir("resume");
  auto cfg = tiny_config();
  cfg.epochs = 4;
  const auto straight = fit(fx.split, fx.corpus.vocab, cfg);

  FitOptions opts;
  opts.checkpoint_dir = dir.path();
  opts.checkpoint_every = 1;
  auto first = cfg;
  first.epochs = 2;
  fit(fx.split, fx.corpus.vocab, first, opts);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "epoch_2.ckpt"));
  opts.resume = true;
  const auto resumed = fit(fx.split, fx.corpus.vocab, cfg, opts);

  EXPECT_EQ(resumed.epochs_run, 4u);
  EXPECT_EQ(resumed.history.size(), 4u);
  EXPECT_EQ(resumed.best_valid.to_json(), straight.best_valid.to_json());
  EXPECT_EQ(checksum(resumed.state.encoder.tensors()), checksum(straight.state.encoder.tensors()));
}

TEST(Checkpoints, StateRoundTripIsBitExact) {
  Fixture fx;
  testing::TempDir dir("state");
  auto cfg = tiny_config();
  auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
  train_epoch(fx.examples, state, cfg);
  state.epoch = 1;
  state.best_metric = 0.25;
  save_state(dir.path() / "s.ckpt", state, cfg);
  const auto back = load_state(dir.path() / "s.ckpt", cfg);
  EXPECT_EQ(checksum(std::as_const(back).encoder.tensors()), checksum(std::as_const(state).encoder.tensors()));
  EXPECT_EQ(checksum(std::as_const(back).augmenters.tensors()), checksum(std::as_const(state).augmenters.tensors()));
  EXPECT_EQ(checksum(std::as_const(back).theta_opt.state()), checksum(std::as_const(state).theta_opt.state()));
  EXPECT_EQ(checksum(std::as_const(back).phi_opt.state()), checksum(std::as_const(state).phi_opt.state()));
  EXPECT_EQ(back.theta_opt.steps(), state.theta_opt.steps());
  EXPECT_EQ(back.step, state.step);
  EXPECT_EQ(back.best_metric, 0.25);
  EXPECT_THROW(load_model(dir.path() / "s.ckpt"), CheckpointError);
}

TEST(Checkpoints, ModelRoundTripKeepsNamespaces) {
  Fixture fx;
  testing::TempDir dir("model");
  auto cfg = tiny_config();
  const auto state = TrainState::initialize(cfg, fx.corpus.vocab.size);
  save_model(dir.path() / "m.ckpt", state.encoder, state.augmenters, {{"epoch", 3}});
  const auto loaded = load_model(dir.path() / "m.ckpt");
  EXPECT_EQ(checksum(loaded.encoder.tensors()), checksum(std::as_const(state).encoder.tensors()));
  EXPECT_EQ(checksum(loaded.augmenters.tensors()), checksum(std::as_const(state).augmenters.tensors()));
  EXPECT_EQ(loaded.meta.at("epoch").get<int>(), 3);
  const auto raw = load_checkpoint(dir.path() / "m.ckpt");
  std::size_t enc = 0, aug = 0;
  for (const auto& [name, _] : raw.tensors) {
    enc += name.rfind("encoder/", 0) == 0;
    aug += name.rfind("augmenter/", 0) == 0;
  }
  EXPECT_EQ(enc + aug, raw.tensors.size());
  EXPECT_EQ(aug, 12u);
}

}  // namespace
}  // namespace mclrec
