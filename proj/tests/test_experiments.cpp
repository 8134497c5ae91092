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

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "mclrec/experiments.hpp"
#include "mclrec/synthetic.hpp"
#include "test_util.hpp"

namespace mclrec {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  const auto text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// Small synthetic dataset on disk plus a configuration that trains in well
// under a second per run.
ExperimentConfig small_experiment(const fs::path& root, std::size_t users = 120, std::size_t items = 40) {
  SyntheticSpec spec;
  spec.users = users;
  spec.items = items;
  spec.min_length = 5;
  spec.max_length = 9;
  spec.successors = 2;
  spec.seed = 21;
  const auto data = root / "data.txt";
  std::ofstream(data) << make_synthetic_corpus(spec);

  ExperimentConfig c;
  c.dataset_path = data.string();
  c.dataset_name = "synthetic";
  c.min_interactions = 5;
  c.train = testing::tiny_config();
  c.seeds = {c.train.seed};
  c.out_dir = root / "run";
  return c;
}

TEST(RunTrain, WritesArtifactsAndFinalizedReport) {
  testing::TempDir dir("train");
  auto cfg = small_experiment(dir.path());
  cfg.log_steps = true;
  const auto report = run_train(cfg);
  EXPECT_TRUE(report.at("finalized").get<bool>());
  for (const char* name : {"config.txt", "train_log.jsonl", "report.json", "checkpoints/best.ckpt",
                           "checkpoints/last.ckpt"}) {
    EXPECT_TRUE(fs::exists(cfg.out_dir / name)) << name;
  }
  EXPECT_TRUE(report.at("test").contains("NDCG@10"));
  EXPECT_EQ(report.at("history").size(), report.at("epochs_run").get<std::size_t>());
  EXPECT_EQ(report.at("dataset").at("users").get<std::size_t>(), 120u);
  EXPECT_GT(line_count(cfg.out_dir / "train_log.jsonl"), 2u);

  // config.txt is a complete, loadable configuration
  const auto again = ExperimentConfig::from_map(load_config_file(cfg.out_dir / "config.txt"));
  EXPECT_EQ(again.to_map(), cfg.to_map());
}

TEST(RunTrain, FinalizedReportIsNotOverwritten) {
  testing::TempDir dir("final");
  const auto cfg = small_experiment(dir.path());
  const auto first = run_train(cfg);
  EXPECT_THROW(run_train(cfg), std::runtime_error);
  const auto resumed = run_train(cfg, {.resume = true});
  EXPECT_EQ(resumed, first);
}

TEST(RunTrain, ResumeAfterInterruptionContinues) {
  testing::TempDir dir("interrupt");
  auto cfg = small_experiment(dir.path());
  cfg.train.epochs = 4;
  auto straight_cfg = cfg;
  straight_cfg.out_dir = dir.path() / "straight";
  const auto straight = run_train(straight_cfg);

  auto partial = cfg;
  partial.train.epochs = 2;
  run_train(partial);
  fs::remove(cfg.out_dir / "report.json");  // as if the process died before finishing
  const auto resumed = run_train(cfg, {.resume = true});
  EXPECT_EQ(resumed.at("test"), straight.at("test"));
  EXPECT_EQ(resumed.at("history").size(), 4u);
}

TEST(RunTrain, MissingDatasetFailsCleanly) {
  testing::TempDir dir("missing");
  auto cfg = small_experiment(dir.path());
  cfg.dataset_path = (dir.path() / "nope.txt").string();
  EXPECT_THROW(run_train(cfg), CorpusError);
  EXPECT_FALSE(fs::exists(cfg.out_dir));
  cfg.dataset_path.clear();
  EXPECT_THROW(run_train(cfg), ConfigError);
}

TEST(RunTrain, SameSeedSameMetrics) {
  testing::TempDir dir("seed");
  auto a = small_experiment(dir.path());
  auto b = a;
  b.out_dir = dir.path() / "run_b";
  EXPECT_EQ(run_train(a).at("test"), run_train(b).at("test"));
}

TEST(RunTrain, TrainedBackboneBeatsChance) {
  testing::TempDir dir("learn");
  auto cfg = small_experiment(dir.path(), 300, 60);
  cfg.train.model.dim = 16;
  cfg.train.epochs = 15;
  cfg.train.lr_theta = 5e-3;
  const auto report = run_train(cfg);
  const double chance = 20.0 / 60.0;
  EXPECT_GT(report.at("test").at("HR@20").get<double>(), std::min(1.0, 2.0 * chance))
      << report.at("test").dump();
  const auto data = prepare_data(cfg);
  const auto fresh = TrainState::initialize(cfg.train, data.corpus.vocab.size);
  const auto untrained = evaluate(fresh.encoder, data.split.test, cfg.eval);
  EXPECT_GT(report.at("test").at("NDCG@10").get<double>(), 3.0 * untrained.ndcg.at(10));
}

TEST(Sweeps, AblationCoversRequestedVariants) {
  testing::TempDir dir("ablate");
  auto cfg = small_experiment(dir.path());
  cfg.train.epochs = 1;
  cfg.variants = {Variant::full, Variant::no_cl2, Variant::joint};
  const auto summary = run_ablation(cfg);
  ASSERT_EQ(summary.at("variants").size(), 3u);
  for (const char* v : {"full", "no_cl2", "joint"}) {
    EXPECT_TRUE(summary.at("variants").contains(v)) << v;
    EXPECT_TRUE(summary.at("variants").at(v).at("mean").contains("HR@20"));
  }
  EXPECT_TRUE(fs::exists(cfg.out_dir / "ablation.json"));
  EXPECT_TRUE(fs::exists(cfg.out_dir / "ablation.txt"));
}

TEST(Sweeps, BatchSweepOneRowPerSize) {
  testing::TempDir dir("batch");
  auto cfg = small_experiment(dir.path());
  cfg.train.epochs = 1;
  cfg.batch_sizes = {16, 64};
  run_batch_sweep(cfg);
  const auto csv = slurp(cfg.out_dir / "batch_sweep.csv");
  EXPECT_EQ(line_count(cfg.out_dir / "batch_sweep.csv"), 3u);
  EXPECT_EQ(csv.rfind("batch_size,seeds", 0), 0u);
  EXPECT_NE(csv.find("\n16,1,"), std::string::npos);
  EXPECT_NE(csv.find("\n64,1,"), std::string::npos);
}

TEST(Sweeps, NoiseSweepCleanRowMatchesTestMetrics) {
  testing::TempDir dir("noise");
  auto cfg = small_experiment(dir.path());
  cfg.train.epochs = 1;
  cfg.noise_ratios = {0.0, 0.2};
  const auto summary = run_noise_sweep(cfg);
  const auto seed_out = cfg.out_dir / ("seed_" + std::to_string(cfg.seeds[0]));
  const auto report = nlohmann::json::parse(slurp(seed_out / "report.json"));
  const auto& curve = summary.at(std::to_string(cfg.seeds[0]));
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_EQ(curve[0].at("test"), report.at("test"));
  EXPECT_EQ(line_count(cfg.out_dir / "noise_sweep.csv"), 3u);
}

TEST(Sweeps, GridMarksBestValidationCell) {
  testing::TempDir dir("grid");
  auto cfg = small_experiment(dir.path());
  cfg.train.epochs = 1;
  cfg.grid_lambdas = {0.01, 0.1};
  cfg.grid_betas = {0.05, 0.2};
  const auto summary = run_weight_grid(cfg);
  const auto& cells = summary.at("cells");
  ASSERT_EQ(cells.size(), 4u);
  std::size_t marked = 0;
  double best = -1.0;
  for (const auto& c : cells) {
    EXPECT_DOUBLE_EQ(c.at("gamma").get<double>(), 0.1 * c.at("beta").get<double>());
    best = std::max(best, c.at("valid").at("NDCG@20").get<double>());
    marked += c.at("best").get<bool>();
  }
  EXPECT_EQ(marked, 1u);
  EXPECT_EQ(cells[summary.at("best_index").get<std::size_t>()].at("valid").at("NDCG@20").get<double>(), best);
  EXPECT_EQ(line_count(cfg.out_dir / "grid.csv"), 5u);
}

TEST(Sweeps, GroupsSplitUsersByLength) {
  testing::TempDir dir("groups");
  auto cfg = small_experiment(dir.path());
  cfg.train.epochs = 1;
  cfg.group_bounds = {"5-6", "7-"};
  const auto summary = run_group_eval(cfg);
  EXPECT_EQ(summary.at("5-6").at("users").get<std::size_t>() + summary.at(">6").at("users").get<std::size_t>(),
            120u);
  EXPECT_TRUE(fs::exists(cfg.out_dir / "groups.txt"));
}

TEST(Eval, CheckpointReevaluationMatchesReport) {
  testing::TempDir dir("eval");
  const auto cfg = small_experiment(dir.path());
  const auto report = run_train(cfg);
  const auto ckpt = cfg.out_dir / "checkpoints" / "best.ckpt";
  EXPECT_EQ(run_eval(cfg, ckpt, "test"), report.at("test"));
  EXPECT_EQ(run_eval(cfg, ckpt, "valid"), report.at("valid"));
  EXPECT_THROW(run_eval(cfg, ckpt, "train"), std::invalid_argument);

  auto other = small_experiment(dir.path() / "other", 120, 50);
  EXPECT_THROW(run_eval(other, ckpt, "test"), std::runtime_error);
}

TEST(ExportViews, FourAlignedMatricesThatRoundTrip) {
  testing::TempDir dir("views");
  const auto cfg = small_experiment(dir.path());
  run_train(cfg);
  const auto ckpt = cfg.out_dir / "checkpoints" / "best.ckpt";
  const auto out = dir.path() / "views.tsv";
  const auto dump = export_views(ckpt, cfg, out);
  const auto rows = dump.views.h1.rows();
  EXPECT_EQ(rows, 120);
  for (const Matrix* m : {&dump.views.h2, &dump.views.z1, &dump.views.z2}) {
    EXPECT_EQ(m->rows(), rows);
    EXPECT_EQ(m->cols(), 8);
  }
  EXPECT_EQ(line_count(out), 1u + 4u * static_cast<std::size_t>(rows));

  const auto back = read_view_dump(out);
  EXPECT_EQ(back.views.h1, dump.views.h1);
  EXPECT_EQ(back.views.z2, dump.views.z2);
  EXPECT_EQ(back.user, dump.user);
  EXPECT_EQ(back.batch, dump.batch);

  const auto again = export_views(ckpt, cfg, dir.path() / "views2.tsv");
  EXPECT_EQ(slurp(out), slurp(dir.path() / "views2.tsv"));
  EXPECT_NE(dump.views.h1, dump.views.h2);
}

}  // namespace
}  // namespace mclrec
