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

#include "mclrec/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include "mclrec/checkpoint.hpp"

namespace mclrec {

namespace {

// Rng purposes, see step_rng().
constexpr std::uint64_t kInitEncoder = 1;
constexpr std::uint64_t kInitAugmenters = 2;
constexpr std::uint64_t kShuffle = 3;
constexpr std::uint64_t kStage1 = 4;
constexpr std::uint64_t kStage2 = 5;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double grad_norm(const ConstTensorList& grads) {
  double s = 0.0;
  for (const auto& [_, g] : grads) s += g->squaredNorm();
  return std::sqrt(s);
}

void check_finite(const char* stage, std::size_t step, const LossBreakdown& loss, double total,
                  std::initializer_list<std::pair<const char*, double>> norms) {
  bool ok = std::isfinite(total);
  for (const auto& [_, n] : norms) ok = ok && std::isfinite(n);
  if (ok) return;
  std::ostringstream msg;
  msg << "non-finite value in " << stage << " at step " << step << ": losses " << loss.to_json().dump()
      << ", grad norms";
  for (const auto& [name, n] : norms) msg << " " << name << "=" << n;
  throw TrainingError(msg.str());
}

// Everything stage 1 and the joint step need from one forward pass.
struct Forward {
  SequenceRepresentation rec;
  EncoderTape rec_tape;
  Matrix logits;
  AugmentedBatch aug;
  EncoderTape tape1, tape2;
  AugmenterTapes aug_tapes;
  ViewQuadruple views;
};

Forward forward_all(const SequenceBatch& batch, const TrainState& state, const TrainConfig& cfg, Rng& rng) {
  // Draw order is fixed: recommendation encode, augmentation, view encodes.
  Forward f;
  f.rec = encode(batch, state.encoder, true, rng, &f.rec_tape);
  f.logits = score_items(f.rec.final, state.encoder);
  const auto ops = cfg.aug.operators();
  const auto mask_id = static_cast<ItemId>(state.encoder.config.num_items + 1);
  f.aug = augment_batch(batch.ids, ops, mask_id, rng);
  const auto r1 = encode(f.aug.view1, state.encoder, true, rng, &f.tape1);
  const auto r2 = encode(f.aug.view2, state.encoder, true, rng, &f.tape2);
  f.views = augment_views(r1.final, r2.final, state.augmenters, &f.aug_tapes);
  return f;
}

// Backpropagates L0 through every path. Augmenter gradients are collected
// only when `phi_grads` is non-null.
LossBreakdown backward_stage1(const Forward& f, const SequenceBatch& batch, const TrainState& state,
                              const LossWeights& weights, EncoderParams& theta_grads, AugmenterParams* phi_grads) {
  const auto& enc = state.encoder;
  Matrix d_logits = Matrix::Zero(f.logits.rows(), f.logits.cols());
  ViewGrads vg = ViewGrads::zeros_like(f.views);
  const auto loss = stage1_objective(f.views, f.logits, batch.targets, weights, d_logits, vg);

  Matrix d_final = Matrix::Zero(f.rec.final.rows(), f.rec.final.cols());
  score_items_backward(f.rec.final, d_logits, enc, d_final, theta_grads);
  encode_backward(f.rec_tape, enc, d_final, theta_grads);
  augment_views_backward(state.augmenters, f.aug_tapes, vg.z1, vg.z2, &vg.h1, &vg.h2, phi_grads);
  encode_backward(f.tape1, enc, vg.h1, theta_grads);
  encode_backward(f.tape2, enc, vg.h2, theta_grads);
  return loss;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_cl1: return "no_cl1";
    case Variant::no_cl2: return "no_cl2";
    case Variant::no_reg: return "no_reg";
    case Variant::shared_augmenters: return "shared_augmenters";
    case Variant::joint: return "joint";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : all_variants()) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("unknown variant '" + name +
                              "' (expected full|no_cl1|no_cl2|no_reg|shared_augmenters|joint)");
}

std::vector<Variant> all_variants() {
  return {Variant::full, Variant::no_cl1, Variant::no_cl2, Variant::no_reg, Variant::shared_augmenters,
          Variant::joint};
}

std::string to_string(Schedule s) { return s == Schedule::per_batch ? "per_batch" : "per_epoch"; }

Schedule parse_schedule(const std::string& name) {
  if (name == "per_batch") return Schedule::per_batch;
  if (name == "per_epoch") return Schedule::per_epoch;
  throw std::invalid_argument("unknown schedule '" + name + "' (expected per_batch|per_epoch)");
}

std::string to_string(StepStage s) {
  switch (s) {
    case StepStage::stage1: return "stage1";
    case StepStage::stage2: return "stage2";
    case StepStage::joint: return "joint";
  }
  return "?";
}

void TrainConfig::validate() const {
  EncoderConfig m = model;
  m.num_items = std::max<std::size_t>(m.num_items, 1);  // filled in from the vocabulary later
  m.validate();
  weights.validate();
  (void)aug.operators();
  if (!(lr_theta > 0) || !(lr_phi > 0)) throw std::invalid_argument("learning rates must be > 0");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json ops = nlohmann::json::array();
  for (auto k : aug.ops) ops.push_back(to_string(k));
  return {{"model", model.to_json()},
          {"aug",
           {{"ops", ops},
            {"crop_ratio", aug.crop_ratio},
            {"mask_ratio", aug.mask_ratio},
            {"reorder_ratio", aug.reorder_ratio}}},
          {"loss", weights.to_json()},
          {"lr_theta", lr_theta},
          {"lr_phi", lr_phi},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"patience", patience},
          {"variant", to_string(variant)},
          {"schedule", to_string(schedule)},
          {"seed", seed}};
}

LossWeights TrainConfig::effective_weights() const {
  LossWeights w = weights;
  if (variant == Variant::no_cl1) w.lambda = 0.0;
  if (variant == Variant::no_cl2) w.beta = 0.0;
  if (variant == Variant::no_reg) w.gamma = 0.0;
  return w;
}

double TrainConfig::stage2_cl2_weight() const { return variant == Variant::no_cl2 ? 0.0 : 1.0; }

TrainState TrainState::initialize(const TrainConfig& cfg, std::size_t num_items) {
  TrainState s;
  EncoderConfig ec = cfg.model;
  ec.num_items = num_items;
  ec.validate();
  Rng rng(derive_seed(cfg.seed, kInitEncoder));
  s.encoder = EncoderParams::initialize(ec, rng);
  s.augmenters = init_augmenters(ec.dim, cfg.shared_augmenters(), derive_seed(cfg.seed, kInitAugmenters));
  s.theta_opt = Adam({.lr = cfg.lr_theta}, std::as_const(s.encoder).tensors());
  s.phi_opt = Adam({.lr = cfg.lr_phi}, std::as_const(s.augmenters).tensors());
  return s;
}

Rng step_rng(std::uint64_t seed, std::uint64_t purpose, std::uint64_t step) {
  return Rng(derive_seed(derive_seed(seed, purpose), step));
}

LossBreakdown train_step_stage1(const SequenceBatch& batch, TrainState& state, const TrainConfig& cfg, Rng& rng,
                                AugmentedBatch* views_out) {
  const auto f = forward_all(batch, state, cfg, rng);
  EncoderParams grads = state.encoder.zeros_like();
  const auto loss = backward_stage1(f, batch, state, cfg.effective_weights(), grads, nullptr);
  const auto cgrads = std::as_const(grads).tensors();
  check_finite("stage 1", state.step, loss, loss.stage1_total, {{"theta", grad_norm(cgrads)}});
  state.theta_opt.step(state.encoder.tensors(), cgrads);
  if (views_out != nullptr) *views_out = f.aug;
  return loss;
}

LossBreakdown train_step_stage2(const AugmentedBatch& views, TrainState& state, const TrainConfig& cfg, Rng& rng) {
  const auto& enc = state.encoder;
  const auto r1 = encode(views.view1, enc, true, rng);
  const auto r2 = encode(views.view2, enc, true, rng);
  AugmenterTapes tapes;
  const auto quad = augment_views(r1.final, r2.final, state.augmenters, &tapes);
  ViewGrads vg = ViewGrads::zeros_like(quad);
  const auto loss = stage2_objective(quad, cfg.effective_weights(), cfg.stage2_cl2_weight(), vg);
  AugmenterParams grads = state.augmenters.zeros_like();
  augment_views_backward(state.augmenters, tapes, vg.z1, vg.z2, nullptr, nullptr, &grads);
  const auto cgrads = std::as_const(grads).tensors();
  check_finite("stage 2", state.step, loss, loss.stage2_total, {{"phi", grad_norm(cgrads)}});
  state.phi_opt.step(state.augmenters.tensors(), cgrads);
  return loss;
}

LossBreakdown train_step_joint(const SequenceBatch& batch, TrainState& state, const TrainConfig& cfg, Rng& rng) {
  const auto f = forward_all(batch, state, cfg, rng);
  EncoderParams theta_grads = state.encoder.zeros_like();
  AugmenterParams phi_grads = state.augmenters.zeros_like();
  const auto loss = backward_stage1(f, batch, state, cfg.effective_weights(), theta_grads, &phi_grads);
  const auto ct = std::as_const(theta_grads).tensors();
  const auto cp = std::as_const(phi_grads).tensors();
  check_finite("joint step", state.step, loss, loss.stage1_total, {{"theta", grad_norm(ct)}, {"phi", grad_norm(cp)}});
  state.theta_opt.step(state.encoder.tensors(), ct);
  state.phi_opt.step(state.augmenters.tensors(), cp);
  return loss;
}

LossBreakdown train_step_rec_only(const SequenceBatch& batch, TrainState& state, const TrainConfig& /*cfg*/,
                                  Rng& rng) {
  const auto& enc = state.encoder;
  EncoderTape tape;
  const auto rep = encode(batch, enc, true, rng, &tape);
  const Matrix logits = score_items(rep.final, enc);
  Matrix d_logits = Matrix::Zero(logits.rows(), logits.cols());
  LossBreakdown loss;
  loss.rec = rec_loss(logits, batch.targets, d_logits, 1.0);
  loss.stage1_total = loss.rec;
  EncoderParams grads = enc.zeros_like();
  Matrix d_final = Matrix::Zero(rep.final.rows(), rep.final.cols());
  score_items_backward(rep.final, d_logits, enc, d_final, grads);
  encode_backward(tape, enc, d_final, grads);
  const auto cgrads = std::as_const(grads).tensors();
  check_finite("rec step", state.step, loss, loss.rec, {{"theta", grad_norm(cgrads)}});
  state.theta_opt.step(state.encoder.tensors(), cgrads);
  return loss;
}

nlohmann::json EpochSummary::to_json() const {
  return {{"epoch", epoch}, {"batches", batches}, {"stage1", stage1.to_json()}, {"stage2", stage2.to_json()},
          {"seconds", seconds}};
}

EpochSummary train_epoch(std::span<const Example> examples, TrainState& state, const TrainConfig& cfg,
                         const StepObserver& observer) {
  const auto t0 = Clock::now();
  EpochSummary summary;
  summary.epoch = state.epoch;
  const auto batches = make_batches(examples, cfg.batch_size, cfg.model.max_len,
                                    derive_seed(derive_seed(cfg.seed, kShuffle), state.epoch));
  summary.batches = batches.size();
  auto notify = [&](StepStage stage, const LossBreakdown& loss) {
    if (observer) observer(StepEvent{stage, state.epoch, state.step, loss}, state);
  };

  if (cfg.variant == Variant::joint) {
    for (const auto& batch : batches) {
      Rng rng = step_rng(cfg.seed, kStage1, state.step);
      const auto loss = train_step_joint(batch, state, cfg, rng);
      summary.stage1 += loss;
      notify(StepStage::joint, loss);
      ++state.step;
    }
  } else if (cfg.schedule == Schedule::per_batch) {
    for (const auto& batch : batches) {
      Rng rng1 = step_rng(cfg.seed, kStage1, state.step);
      AugmentedBatch views;
      const auto l1 = train_step_stage1(batch, state, cfg, rng1, &views);
      summary.stage1 += l1;
      notify(StepStage::stage1, l1);
      Rng rng2 = step_rng(cfg.seed, kStage2, state.step);
      const auto l2 = train_step_stage2(views, state, cfg, rng2);
      summary.stage2 += l2;
      notify(StepStage::stage2, l2);
      ++state.step;
    }
  } else {
    std::vector<AugmentedBatch> all_views(batches.size());
    const std::size_t first_step = state.step;
    for (std::size_t i = 0; i < batches.size(); ++i) {
      Rng rng = step_rng(cfg.seed, kStage1, first_step + i);
      state.step = first_step + i;
      const auto loss = train_step_stage1(batches[i], state, cfg, rng, &all_views[i]);
      summary.stage1 += loss;
      notify(StepStage::stage1, loss);
    }
    for (std::size_t i = 0; i < batches.size(); ++i) {
      Rng rng = step_rng(cfg.seed, kStage2, first_step + i);
      state.step = first_step + i;
      const auto loss = train_step_stage2(all_views[i], state, cfg, rng);
      summary.stage2 += loss;
      notify(StepStage::stage2, loss);
    }
    state.step = first_step + batches.size();
  }
  if (summary.batches > 0) {
    summary.stage1 /= static_cast<double>(summary.batches);
    summary.stage2 /= static_cast<double>(summary.batches);
  }
  summary.seconds = seconds_since(t0);
  return summary;
}

void save_state(const std::filesystem::path& path, const TrainState& state, const TrainConfig& cfg,
                const nlohmann::json& extra) {
  nlohmann::json meta = {{"kind", "train_state"},
                         {"config", cfg.to_json()},
                         {"num_items", state.encoder.config.num_items},
                         {"epoch", state.epoch},
                         {"step", state.step},
                         {"best_metric", state.best_metric},
                         {"best_epoch", state.best_epoch},
                         {"bad_epochs", state.bad_epochs},
                         {"theta_steps", state.theta_opt.steps()},
                         {"phi_steps", state.phi_opt.steps()},
                         {"extra", extra}};
  ConstTensorList all = with_prefix("encoder/", state.encoder.tensors());
  auto append = [&all](const ConstTensorList& more) { all.insert(all.end(), more.begin(), more.end()); };
  append(with_prefix("augmenter/", state.augmenters.tensors()));
  append(with_prefix("optim/theta/", state.theta_opt.state()));
  append(with_prefix("optim/phi/", state.phi_opt.state()));
  save_checkpoint(path, meta, all);
}

TrainState load_state(const std::filesystem::path& path, const TrainConfig& cfg, nlohmann::json* meta) {
  const auto ckpt = load_checkpoint(path);
  if (ckpt.meta.value("kind", "") != "train_state") throw CheckpointError(path.string() + " is not a train state");
  TrainState s = TrainState::initialize(cfg, ckpt.meta.at("num_items").get<std::size_t>());
  ckpt.restore("encoder/", s.encoder.tensors());
  ckpt.restore("augmenter/", s.augmenters.tensors());
  ckpt.restore("optim/theta/", s.theta_opt.state());
  ckpt.restore("optim/phi/", s.phi_opt.state());
  s.theta_opt.set_steps(ckpt.meta.at("theta_steps").get<std::size_t>());
  s.phi_opt.set_steps(ckpt.meta.at("phi_steps").get<std::size_t>());
  s.epoch = ckpt.meta.at("epoch").get<std::size_t>();
  s.step = ckpt.meta.at("step").get<std::size_t>();
  // -inf does not survive JSON; it is written as null.
  const auto& best = ckpt.meta.at("best_metric");
  s.best_metric = best.is_number() ? best.get<double>() : -std::numeric_limits<double>::infinity();
  s.best_epoch = ckpt.meta.at("best_epoch").get<std::size_t>();
  s.bad_epochs = ckpt.meta.at("bad_epochs").get<std::size_t>();
  if (meta != nullptr) *meta = ckpt.meta;
  return s;
}

void save_model(const std::filesystem::path& path, const EncoderParams& encoder, const AugmenterParams& augmenters,
                const nlohmann::json& meta) {
  nlohmann::json m = meta;
  m["kind"] = "model";
  m["encoder_config"] = encoder.config.to_json();
  m["shared_augmenters"] = augmenters.shared;
  ConstTensorList all = with_prefix("encoder/", encoder.tensors());
  const auto aug = with_prefix("augmenter/", augmenters.tensors());
  all.insert(all.end(), aug.begin(), aug.end());
  save_checkpoint(path, m, all);
}

LoadedModel load_model(const std::filesystem::path& path) {
  auto ckpt = load_checkpoint(path);
  if (ckpt.meta.value("kind", "") != "model") throw CheckpointError(path.string() + " is not a model checkpoint");
  LoadedModel out;
  const auto ec = EncoderConfig::from_json(ckpt.meta.at("encoder_config"));
  Rng rng(0);
  out.encoder = EncoderParams::initialize(ec, rng);
  out.augmenters = init_augmenters(ec.dim, ckpt.meta.at("shared_augmenters").get<bool>(), 0);
  ckpt.restore("encoder/", out.encoder.tensors());
  ckpt.restore("augmenter/", out.augmenters.tensors());
  out.meta = std::move(ckpt.meta);
  return out;
}

FitResult fit(const DatasetSplit& split, const ItemVocab& vocab, const TrainConfig& cfg, const FitOptions& options) {
  cfg.validate();
  const auto t0 = Clock::now();
  const auto examples = training_examples(split);
  if (examples.empty()) throw std::invalid_argument("fit: no training examples");

  const auto last_path = options.checkpoint_dir / "last.ckpt";
  const auto best_path = options.checkpoint_dir / "best.ckpt";
  const bool checkpoints = !options.checkpoint_dir.empty();

  FitResult result;
  result.history = nlohmann::json::array();
  TrainState state;
  if (options.resume && checkpoints && std::filesystem::exists(last_path)) {
    nlohmann::json meta;
    state = load_state(last_path, cfg, &meta);
    result.history = meta.at("extra").value("history", nlohmann::json::array());
    auto best = load_model(best_path);
    result.state = state;
    result.state.encoder = std::move(best.encoder);
    result.state.augmenters = std::move(best.augmenters);
    result.best_valid = RankingMetrics::from_json(best.meta.at("valid"));
  } else {
    state = TrainState::initialize(cfg, vocab.size);
    result.state = state;
  }

  StepObserver observer = options.observer;
  if (options.log != nullptr && options.log_steps) {
    observer = [&options](const StepEvent& ev, const TrainState& s) {
      if (options.observer) options.observer(ev, s);
      nlohmann::json line = ev.loss.to_json();
      line["stage"] = to_string(ev.stage);
      line["epoch"] = ev.epoch;
      line["step"] = ev.step;
      *options.log << line.dump() << "\n";
    };
  }

  const std::size_t select_k = 20;
  EvalConfig eval = options.eval;
  if (std::find(eval.ks.begin(), eval.ks.end(), select_k) == eval.ks.end()) eval.ks.push_back(select_k);

  while (state.epoch < cfg.epochs) {
    const auto summary = train_epoch(examples, state, cfg, observer);
    const auto valid = evaluate(state.encoder, split.valid, eval);
    const double metric = valid.ndcg.at(select_k);
    const bool improved = metric > state.best_metric;
    if (improved) {
      state.best_metric = metric;
      state.best_epoch = state.epoch;
      state.bad_epochs = 0;
      result.best_valid = valid;
      result.state.encoder = state.encoder;
      result.state.augmenters = state.augmenters;
    } else {
      ++state.bad_epochs;
    }
    nlohmann::json record = summary.to_json();
    record["valid"] = valid.to_json();
    record["improved"] = improved;
    result.history.push_back(record);
    if (options.log != nullptr) *options.log << nlohmann::json{{"epoch_summary", record}}.dump() << "\n";
    ++state.epoch;

    if (checkpoints) {
      if (improved) {
        save_model(best_path, state.encoder, state.augmenters,
                   {{"epoch", state.best_epoch}, {"valid", valid.to_json()}, {"config", cfg.to_json()}});
      }
      save_state(last_path, state, cfg, {{"history", result.history}});
      if (options.checkpoint_every > 0 && state.epoch % options.checkpoint_every == 0) {
        save_state(options.checkpoint_dir / ("epoch_" + std::to_string(state.epoch) + ".ckpt"), state, cfg);
      }
    }
    if (state.bad_epochs > cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  result.epochs_run = state.epoch;
  result.state.epoch = state.epoch;
  result.state.step = state.step;
  result.state.best_metric = state.best_metric;
  result.state.best_epoch = state.best_epoch;
  result.state.bad_epochs = state.bad_epochs;
  result.seconds = seconds_since(t0);
  return result;
}

}  // namespace mclrec
