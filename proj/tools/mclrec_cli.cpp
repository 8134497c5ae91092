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

// Command-line driver. Any `--section.key=value` flag overrides the matching
// config key; explicit flags (--dataset, --out, --seed) win over both.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mclrec/config.hpp"
#include "mclrec/corpus.hpp"
#include "mclrec/experiments.hpp"
#include "mclrec/synthetic.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string dataset;
  std::string out;
  std::string seeds;
  bool resume = false;
  bool verbose = false;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "key = value config file");
  sub->add_option("--dataset", f.dataset, "corpus file (sets dataset.path)");
  sub->add_option("--out", f.out, "output directory (sets run.out)");
  sub->add_option("--seed", f.seeds, "seed or comma-separated seeds (sets run.seeds)");
  sub->add_flag("--resume", f.resume, "continue an interrupted run in --out");
  sub->add_flag("-v,--verbose", f.verbose, "progress on stderr");
  sub->allow_extras();
}

mclrec::ExperimentConfig build_config(const CommonFlags& f, const std::vector<std::string>& extras) {
  mclrec::ConfigMap map;
  if (!f.config.empty()) map = mclrec::load_config_file(f.config);
  mclrec::apply_overrides(map, extras);
  if (!f.dataset.empty()) map["dataset.path"] = f.dataset;
  if (!f.out.empty()) map["run.out"] = f.out;
  if (!f.seeds.empty()) map["run.seeds"] = f.seeds;
  return mclrec::ExperimentConfig::from_map(map);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive sequential recommendation with learnable augmenters"};
  app.require_subcommand(1);

  CommonFlags flags;
  struct Verb {
    const char* name;
    const char* help;
  };
  const Verb verbs[] = {
      {"train", "fit one model and evaluate on the test split"},
      {"ablate", "fit every variant listed in ablation.variants"},
      {"sweep-batch", "fit one model per sweep.batch_sizes entry"},
      {"sweep-noise", "fit, then evaluate under each sweep.noise_ratios entry"},
      {"grid", "fit one model per (grid.lambdas x grid.betas) cell"},
      {"groups", "fit and evaluate separately per groups.bounds length group"},
  };
  std::vector<CLI::App*> run_verbs;
  for (const auto& v : verbs) {
    auto* sub = app.add_subcommand(v.name, v.help);
    add_common(sub, flags);
    run_verbs.push_back(sub);
  }

  std::string checkpoint, part = "test", dump_path;
  auto* eval = app.add_subcommand("eval", "evaluate a model checkpoint");
  add_common(eval, flags);
  eval->add_option("--checkpoint", checkpoint, "model checkpoint (best.ckpt)")->required();
  eval->add_option("--part", part, "valid or test")->check(CLI::IsMember({"valid", "test"}));

  auto* export_cmd = app.add_subcommand("export-views", "dump h1, h2, z1, z2 for offline projection");
  add_common(export_cmd, flags);
  export_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  export_cmd->add_option("--file", dump_path, "output table (default <out>/views.tsv)");

  mclrec::SyntheticSpec synth_spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "write a synthetic Markov-chain corpus");
  synth->add_option("--users", synth_spec.users);
  synth->add_option("--items", synth_spec.items);
  synth->add_option("--order", synth_spec.order);
  synth->add_option("--min-length", synth_spec.min_length);
  synth->add_option("--max-length", synth_spec.max_length);
  synth->add_option("--successors", synth_spec.successors);
  synth->add_option("--noise", synth_spec.noise);
  synth->add_option("--seed", synth_spec.seed);
  synth->add_option("--file", synth_out, "output corpus file")->required();

  std::string stats_path;
  std::size_t stats_min = 5;
  auto* stats = app.add_subcommand("stats", "print corpus statistics as JSON");
  stats->add_option("--dataset", stats_path)->required();
  stats->add_option("--min-interactions", stats_min);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      mclrec::write_synthetic_corpus(synth_out, synth_spec);
      return 0;
    }
    if (stats->parsed()) {
      std::cout << mclrec::load_corpus(stats_path, stats_min).stats.to_json().dump(2) << "\n";
      return 0;
    }
    CLI::App* active = app.get_subcommands().front();
    const auto cfg = build_config(flags, active->remaining());
    const mclrec::RunOptions opts{flags.resume, !flags.verbose};
    const std::string name = active->get_name();
    nlohmann::json result;
    if (name == "train") {
      result = mclrec::run_train(cfg, opts);
      result = {{"valid", result.at("valid")}, {"test", result.at("test")}, {"best_epoch", result.at("best_epoch")}};
    } else if (name == "ablate") {
      result = mclrec::run_ablation(cfg, opts);
    } else if (name == "sweep-batch") {
      result = mclrec::run_batch_sweep(cfg, opts);
    } else if (name == "sweep-noise") {
      result = mclrec::run_noise_sweep(cfg, opts);
    } else if (name == "grid") {
      result = mclrec::run_weight_grid(cfg, opts);
    } else if (name == "groups") {
      result = mclrec::run_group_eval(cfg, opts);
    } else if (name == "eval") {
      result = mclrec::run_eval(cfg, checkpoint, part);
    } else if (name == "export-views") {
      const auto path = dump_path.empty() ? cfg.out_dir / "views.tsv" : std::filesystem::path(dump_path);
      const auto dump = mclrec::export_views(checkpoint, cfg, path);
      result = {{"file", path.string()}, {"rows", dump.user.size()}};
    }
    std::cout << result.dump(2) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
