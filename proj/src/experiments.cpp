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

#include "mclrec/experiments.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mclrec/augmentation.hpp"
#include "mclrec/checkpoint.hpp"
#include "mclrec/evaluation.hpp"
#include "mclrec/trainer.hpp"

#ifndef MCLREC_VERSION
#define MCLREC_VERSION "unknown"
#endif
#ifndef MCLREC_GIT_REVISION
#define MCLREC_GIT_REVISION "unknown"
#endif

namespace mclrec {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kSelectK = 20;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return nlohmann::json::parse(in);
}

void progress(const RunOptions& opts, const std::string& line) {
  if (!opts.quiet) std::cerr << line << std::endl;
}

ExperimentConfig with_seed(ExperimentConfig cfg, std::uint64_t seed) {
  cfg.train.seed = seed;
  cfg.seeds = {seed};
  return cfg;
}

std::string seed_dir(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

std::string fmt_number(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

// CSV header and row over the configured ks.
std::string metrics_header(const std::vector<std::size_t>& ks) {
  std::string h;
  for (auto k : ks) h += ",HR@" + std::to_string(k);
  for (auto k : ks) h += ",NDCG@" + std::to_string(k);
  return h;
}

std::string metrics_row(const RankingMetrics& m) {
  std::ostringstream out;
  out.precision(6);
  for (const auto& [_, v] : m.hr) out << "," << v;
  for (const auto& [_, v] : m.ndcg) out << "," << v;
  return out.str();
}

RankingMetrics mean_metrics(const std::vector<RankingMetrics>& runs) {
  RankingMetrics out;
  for (const auto& r : runs) {
    for (const auto& [k, v] : r.hr) out.hr[k] += v / static_cast<double>(runs.size());
    for (const auto& [k, v] : r.ndcg) out.ndcg[k] += v / static_cast<double>(runs.size());
    out.n_users = r.n_users;
  }
  return out;
}

RankingMetrics test_metrics(const nlohmann::json& report) { return RankingMetrics::from_json(report.at("test")); }

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.empty()) throw ConfigError("dataset.path is not set");
  PreparedData data;
  data.corpus = load_corpus(cfg.dataset_path, cfg.min_interactions);
  data.split = split_leave_one_out(data.corpus.sequences);
  return data;
}

nlohmann::json run_train(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto data = prepare_data(cfg);  // fails before anything is written
  return run_train(cfg, data, opts);
}

nlohmann::json run_train(const ExperimentConfig& cfg, const PreparedData& data, const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path out = cfg.out_dir;
  const auto report_path = out / "report.json";
  if (fs::exists(report_path)) {
    auto existing = read_json(report_path);
    if (existing.value("finalized", false)) {
      if (opts.resume) return existing;
      throw std::runtime_error(report_path.string() + " is already finalized; choose another output directory");
    }
  }
  fs::create_directories(out / "checkpoints");
  write_text(out / "config.txt", cfg.to_text());

  std::ofstream log(out / "train_log.jsonl", opts.resume ? std::ios::app : std::ios::trunc);
  FitOptions fo;
  fo.eval = cfg.eval;
  fo.log = &log;
  fo.log_steps = cfg.log_steps;
  fo.checkpoint_dir = out / "checkpoints";
  fo.checkpoint_every = cfg.checkpoint_every;
  fo.resume = opts.resume;

  progress(opts, "training " + out.string() + " (" + to_string(cfg.train.variant) + ", seed " +
                     std::to_string(cfg.train.seed) + ")");
  const auto result = fit(data.split, data.corpus.vocab, cfg.train, fo);
  const auto test = evaluate(result.state.encoder, data.split.test, cfg.eval);
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json report;
  report["version"] = {{"mclrec", MCLREC_VERSION}, {"git", MCLREC_GIT_REVISION}};
  report["config"] = cfg.to_map();
  report["dataset"] = data.corpus.stats.to_json();
  report["history"] = result.history;
  report["epochs_run"] = result.epochs_run;
  report["best_epoch"] = result.state.best_epoch;
  report["stopped_early"] = result.stopped_early;
  report["valid"] = result.best_valid.to_json();
  report["test"] = test.to_json();
  report["timing"] = {{"fit_seconds", result.seconds}, {"total_seconds", total}};
  report["finalized"] = true;
  write_json(report_path, report);
  progress(opts, "  test NDCG@" + std::to_string(kSelectK) + " = " +
                     fmt_number(test.ndcg.count(kSelectK) ? test.ndcg.at(kSelectK) : 0.0));
  return report;
}

nlohmann::json run_ablation(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto data = prepare_data(cfg);
  nlohmann::json summary;
  summary["variants"] = nlohmann::json::object();
  std::vector<std::pair<std::string, RankingMetrics>> table;
  for (Variant v : cfg.variants) {
    std::vector<RankingMetrics> runs;
    nlohmann::json per_seed = nlohmann::json::object();
    for (auto seed : cfg.seeds) {
      auto run_cfg = with_seed(cfg, seed);  // same seeds for every variant
      run_cfg.train.variant = v;
      run_cfg.out_dir = cfg.out_dir / to_string(v) / seed_dir(seed);
      const auto report = run_train(run_cfg, data, opts);
      runs.push_back(test_metrics(report));
      per_seed[std::to_string(seed)] = report.at("test");
    }
    const auto mean = mean_metrics(runs);
    summary["variants"][to_string(v)] = {{"per_seed", per_seed}, {"mean", mean.to_json()}};
    table.emplace_back(to_string(v), mean);
  }
  write_json(cfg.out_dir / "ablation.json", summary);
  write_text(cfg.out_dir / "ablation.txt", format_metrics_table(table));
  return summary;
}

nlohmann::json run_batch_sweep(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto data = prepare_data(cfg);
  nlohmann::json summary = nlohmann::json::array();
  std::string csv = "batch_size,seeds" + metrics_header(cfg.eval.ks) + "\n";
  for (auto size : cfg.batch_sizes) {
    std::vector<RankingMetrics> runs;
    nlohmann::json per_seed = nlohmann::json::object();
    for (auto seed : cfg.seeds) {
      auto run_cfg = with_seed(cfg, seed);
      run_cfg.train.batch_size = size;
      run_cfg.out_dir = cfg.out_dir / ("batch_" + std::to_string(size)) / seed_dir(seed);
      const auto report = run_train(run_cfg, data, opts);
      runs.push_back(test_metrics(report));
      per_seed[std::to_string(seed)] = report.at("test");
    }
    const auto mean = mean_metrics(runs);
    summary.push_back({{"batch_size", size}, {"per_seed", per_seed}, {"mean", mean.to_json()}});
    csv += std::to_string(size) + "," + std::to_string(runs.size()) + metrics_row(mean) + "\n";
  }
  write_json(cfg.out_dir / "batch_sweep.json", summary);
  write_text(cfg.out_dir / "batch_sweep.csv", csv);
  return summary;
}

nlohmann::json noise_curve(const EncoderParams& encoder, const PreparedData& data, const std::vector<double>& ratios,
                           std::uint64_t noise_seed, const EvalConfig& eval) {
  nlohmann::json curve = nlohmann::json::array();
  for (double ratio : ratios) {
    const auto noisy = inject_noise(data.split.test, NoiseSpec{ratio, noise_seed}, data.corpus.vocab);
    curve.push_back({{"ratio", ratio}, {"test", evaluate(encoder, noisy, eval).to_json()}});
  }
  return curve;
}

nlohmann::json run_noise_sweep(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto data = prepare_data(cfg);
  nlohmann::json summary = nlohmann::json::object();
  std::map<double, std::vector<RankingMetrics>> by_ratio;
  for (auto seed : cfg.seeds) {
    auto run_cfg = with_seed(cfg, seed);
    run_cfg.out_dir = cfg.out_dir / seed_dir(seed);
    run_train(run_cfg, data, opts);
    const auto model = load_model(run_cfg.out_dir / "checkpoints" / "best.ckpt");
    const auto curve = noise_curve(model.encoder, data, cfg.noise_ratios, cfg.noise_seed, cfg.eval);
    summary[std::to_string(seed)] = curve;
    for (const auto& point : curve) {
      by_ratio[point.at("ratio").get<double>()].push_back(RankingMetrics::from_json(point.at("test")));
    }
  }
  std::string csv = "noise_ratio,seeds" + metrics_header(cfg.eval.ks) + "\n";
  for (const auto& [ratio, runs] : by_ratio) {
    csv += fmt_number(ratio) + "," + std::to_string(runs.size()) + metrics_row(mean_metrics(runs)) + "\n";
  }
  write_json(cfg.out_dir / "noise_sweep.json", summary);
  write_text(cfg.out_dir / "noise_sweep.csv", csv);
  return summary;
}

nlohmann::json run_weight_grid(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto data = prepare_data(cfg);
  nlohmann::json cells = nlohmann::json::array();
  std::string csv = "lambda,beta,gamma,valid_NDCG@20" + metrics_header(cfg.eval.ks) + "\n";
  double best = -1.0;
  std::size_t best_index = 0;
  for (double lambda : cfg.grid_lambdas) {
    for (double beta : cfg.grid_betas) {
      auto run_cfg = with_seed(cfg, cfg.seeds.front());
      run_cfg.train.weights.lambda = lambda;
      run_cfg.train.weights.beta = beta;
      run_cfg.train.weights.gamma = 0.1 * beta;
      run_cfg.out_dir = cfg.out_dir / ("lambda_" + fmt_number(lambda) + "_beta_" + fmt_number(beta));
      const auto report = run_train(run_cfg, data, opts);
      const double valid = report.at("valid").at("NDCG@20").get<double>();
      if (valid > best) {
        best = valid;
        best_index = cells.size();
      }
      cells.push_back({{"lambda", lambda},
                       {"beta", beta},
                       {"gamma", run_cfg.train.weights.gamma},
                       {"valid", report.at("valid")},
                       {"test", report.at("test")},
                       {"best", false}});
      csv += fmt_number(lambda) + "," + fmt_number(beta) + "," + fmt_number(run_cfg.train.weights.gamma) + "," +
             fmt_number(valid) + metrics_row(test_metrics(report)) + "\n";
    }
  }
  if (!cells.empty()) cells[best_index]["best"] = true;
  nlohmann::json summary = {{"cells", cells}, {"best_index", best_index}};
  write_json(cfg.out_dir / "grid.json", summary);
  write_text(cfg.out_dir / "grid.csv", csv);
  return summary;
}

nlohmann::json run_group_eval(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto data = prepare_data(cfg);
  std::vector<LengthRange> bounds;
  for (const auto& text : cfg.group_bounds) bounds.push_back(parse_length_range(text));
  const auto groups = group_by_length(data.corpus.sequences, bounds);
  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::pair<std::string, RankingMetrics>> table;
  for (const auto& [range, seqs] : groups) {
    if (seqs.empty()) {
      summary[range.label()] = {{"users", 0}};
      continue;
    }
    PreparedData part;
    part.corpus = make_corpus(seqs, data.corpus.vocab.size);
    part.corpus.vocab = data.corpus.vocab;
    part.split = split_leave_one_out(part.corpus.sequences);
    auto run_cfg = with_seed(cfg, cfg.seeds.front());
    run_cfg.out_dir = cfg.out_dir / ("group_" + range.label());
    const auto report = run_train(run_cfg, part, opts);
    summary[range.label()] = {{"users", seqs.size()}, {"test", report.at("test")}};
    table.emplace_back(range.label(), test_metrics(report));
  }
  write_json(cfg.out_dir / "groups.json", summary);
  write_text(cfg.out_dir / "groups.txt", format_metrics_table(table));
  return summary;
}

nlohmann::json run_eval(const ExperimentConfig& cfg, const fs::path& checkpoint, const std::string& part) {
  const auto data = prepare_data(cfg);
  const auto model = load_model(checkpoint);
  if (model.encoder.config.num_items != data.corpus.vocab.size) {
    throw std::runtime_error("checkpoint vocabulary (" + std::to_string(model.encoder.config.num_items) +
                             " items) does not match the dataset (" + std::to_string(data.corpus.vocab.size) + ")");
  }
  if (part != "valid" && part != "test") throw std::invalid_argument("part must be valid or test");
  const auto& examples = part == "valid" ? data.split.valid : data.split.test;
  return evaluate(model.encoder, examples, cfg.eval).to_json();
}

ViewDump export_views(const fs::path& checkpoint, const ExperimentConfig& cfg, const fs::path& out) {
  const auto data = prepare_data(cfg);
  const auto model = load_model(checkpoint);
  const auto& examples = cfg.export_split == "valid" ? data.split.valid : data.split.test;
  const auto ops = cfg.train.aug.operators();
  const auto mask_id = static_cast<ItemId>(model.encoder.config.num_items + 1);
  const auto n = model.encoder.config.max_len;
  const auto d = static_cast<Eigen::Index>(model.encoder.config.dim);

  ViewDump dump;
  const auto total = static_cast<Eigen::Index>(examples.size());
  dump.views = {Matrix(total, d), Matrix(total, d), Matrix(total, d), Matrix(total, d)};
  Rng rng(derive_seed(cfg.train.seed, 77));
  Eigen::Index row = 0;
  const std::size_t bs = cfg.eval.batch_size;
  for (std::size_t start = 0, b = 0; start < examples.size(); start += bs, ++b) {
    const auto chunk = std::span<const Example>(examples).subspan(start, std::min(bs, examples.size() - start));
    const auto batch = pad_batch(chunk, n);
    const auto aug = augment_batch(batch.ids, ops, mask_id, rng);
    const auto h1 = encode(aug.view1, model.encoder, false, rng).final;
    const auto h2 = encode(aug.view2, model.encoder, false, rng).final;
    const auto quad = augment_views(h1, h2, model.augmenters);
    const auto rows = static_cast<Eigen::Index>(chunk.size());
    dump.views.h1.middleRows(row, rows) = quad.h1;
    dump.views.h2.middleRows(row, rows) = quad.h2;
    dump.views.z1.middleRows(row, rows) = quad.z1;
    dump.views.z2.middleRows(row, rows) = quad.z2;
    for (const auto& ex : chunk) {
      dump.batch.push_back(b);
      dump.user.push_back(data.corpus.sequences[ex.user].user_id);
    }
    row += rows;
  }

  std::ostringstream text;
  text << "view\trow\tbatch\tuser";
  for (Eigen::Index c = 0; c < d; ++c) text << "\tc" << c;
  text << "\n";
  const std::pair<const char*, const Matrix*> blocks[] = {
      {"h1", &dump.views.h1}, {"h2", &dump.views.h2}, {"z1", &dump.views.z1}, {"z2", &dump.views.z2}};
  for (const auto& [name, m] : blocks) {
    for (Eigen::Index r = 0; r < total; ++r) {
      text << name << "\t" << r << "\t" << dump.batch[static_cast<std::size_t>(r)] << "\t"
           << dump.user[static_cast<std::size_t>(r)];
      for (Eigen::Index c = 0; c < d; ++c) text << "\t" << format_double((*m)(r, c));
      text << "\n";
    }
  }
  write_text(out, text.str());
  return dump;
}

ViewDump read_view_dump(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty view dump " + path.string());
  Eigen::Index d = 0;
  for (char ch : line) d += ch == '\t' ? 1 : 0;
  d -= 3;
  if (d <= 0) throw std::runtime_error("malformed view dump header");

  std::map<std::string, std::vector<std::vector<double>>> rows;
  ViewDump dump;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string view, row, batch, user, cell;
    std::getline(fields, view, '\t');
    std::getline(fields, row, '\t');
    std::getline(fields, batch, '\t');
    std::getline(fields, user, '\t');
    std::vector<double> values;
    while (std::getline(fields, cell, '\t')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc()) throw std::runtime_error("bad number in view dump: " + cell);
      values.push_back(v);
    }
    if (static_cast<Eigen::Index>(values.size()) != d) throw std::runtime_error("ragged view dump row");
    if (view == "h1") {
      dump.batch.push_back(std::stoul(batch));
      dump.user.push_back(user);
    }
    rows[view].push_back(std::move(values));
  }
  auto to_matrix = [&](const std::string& name) {
    const auto& r = rows[name];
    if (r.size() != dump.user.size()) throw std::runtime_error("view " + name + " has a different row count");
    Matrix m(static_cast<Eigen::Index>(r.size()), d);
    for (std::size_t i = 0; i < r.size(); ++i)
      for (Eigen::Index c = 0; c < d; ++c) m(static_cast<Eigen::Index>(i), c) = r[i][static_cast<std::size_t>(c)];
    return m;
  };
  dump.views = {to_matrix("h1"), to_matrix("h2"), to_matrix("z1"), to_matrix("z2")};
  return dump;
}

}  // namespace mclrec
