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

#include "mclrec/encoder.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mclrec {

void EncoderConfig::validate() const {
  if (num_items == 0) throw std::invalid_argument("encoder: num_items must be >= 1");
  if (max_len == 0 || dim == 0 || blocks == 0 || heads == 0) {
    throw std::invalid_argument("encoder: max_len, dim, blocks and heads must be >= 1");
  }
  if (dim % heads != 0) throw std::invalid_argument("encoder: dim must be divisible by heads");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("encoder: dropout must be in [0, 1)");
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"num_items", num_items}, {"max_len", max_len}, {"dim", dim},
          {"blocks", blocks},       {"heads", heads},     {"dropout", dropout},
          {"init_std", init_std},   {"ln_eps", ln_eps}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.num_items = j.at("num_items").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.dim = j.at("dim").get<std::size_t>();
  c.blocks = j.at("blocks").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.init_std = j.at("init_std").get<double>();
  c.ln_eps = j.at("ln_eps").get<double>();
  return c;
}

BlockParams BlockParams::zeros_like() const {
  return {attn_norm.zeros_like(), query.zeros_like(),    key.zeros_like(),    value.zeros_like(),
          output.zeros_like(),    ffn_norm.zeros_like(), ffn_in.zeros_like(), ffn_out.zeros_like()};
}

void BlockParams::append_to(TensorList& list, const std::string& prefix) {
  attn_norm.append_to(list, prefix + ".attn_norm");
  query.append_to(list, prefix + ".query");
  key.append_to(list, prefix + ".key");
  value.append_to(list, prefix + ".value");
  output.append_to(list, prefix + ".output");
  ffn_norm.append_to(list, prefix + ".ffn_norm");
  ffn_in.append_to(list, prefix + ".ffn_in");
  ffn_out.append_to(list, prefix + ".ffn_out");
}

EncoderParams EncoderParams::initialize(const EncoderConfig& config, Rng& rng) {
  config.validate();
  const auto d = config.dim;
  EncoderParams p;
  p.config = config;
  p.item_embeddings = Matrix(config.num_items + 2, d);
  for (Eigen::Index i = 0; i < p.item_embeddings.size(); ++i)
    p.item_embeddings.data()[i] = config.init_std * standard_normal(rng);
  p.position_embeddings = Matrix(config.max_len, d);
  for (Eigen::Index i = 0; i < p.position_embeddings.size(); ++i)
    p.position_embeddings.data()[i] = config.init_std * standard_normal(rng);
  p.embed_norm = nn::LayerNormParams::identity(d);
  for (std::size_t b = 0; b < config.blocks; ++b) {
    BlockParams block;
    block.attn_norm = nn::LayerNormParams::identity(d);
    block.query = nn::LinearParams::normal(d, d, config.init_std, rng);
    block.key = nn::LinearParams::normal(d, d, config.init_std, rng);
    block.value = nn::LinearParams::normal(d, d, config.init_std, rng);
    block.output = nn::LinearParams::normal(d, d, config.init_std, rng);
    block.ffn_norm = nn::LayerNormParams::identity(d);
    block.ffn_in = nn::LinearParams::normal(d, d, config.init_std, rng);
    block.ffn_out = nn::LinearParams::normal(d, d, config.init_std, rng);
    p.blocks.push_back(std::move(block));
  }
  p.final_norm = nn::LayerNormParams::identity(d);
  return p;
}

EncoderParams EncoderParams::zeros_like() const {
  EncoderParams g;
  g.config = config;
  g.item_embeddings = Matrix::Zero(item_embeddings.rows(), item_embeddings.cols());
  g.position_embeddings = Matrix::Zero(position_embeddings.rows(), position_embeddings.cols());
  g.embed_norm = embed_norm.zeros_like();
  for (const auto& b : blocks) g.blocks.push_back(b.zeros_like());
  g.final_norm = final_norm.zeros_like();
  return g;
}

TensorList EncoderParams::tensors() {
  TensorList list;
  list.emplace_back("item_embeddings", &item_embeddings);
  list.emplace_back("position_embeddings", &position_embeddings);
  embed_norm.append_to(list, "embed_norm");
  for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b].append_to(list, "blocks." + std::to_string(b));
  final_norm.append_to(list, "final_norm");
  return list;
}

ConstTensorList EncoderParams::tensors() const {
  return mclrec::as_const(const_cast<EncoderParams*>(this)->tensors());
}

Matrix SequenceRepresentation::hidden(std::size_t b) const {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(max_len), tokens.cols());
  const auto& s = spans.at(b);
  out.bottomRows(static_cast<Eigen::Index>(s.length)) =
      tokens.middleRows(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.length));
  return out;
}

Matrix EncoderTape::attention(std::size_t block, std::size_t b, std::size_t head, std::size_t n) const {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const auto len = static_cast<Eigen::Index>(spans.at(b).length);
  out.bottomRightCorner(len, len) = blocks.at(block).probs.at(b * heads + head);
  return out;
}

std::vector<Matrix> embed(const IdMatrix& ids, const EncoderParams& params) {
  const auto& cfg = params.config;
  if (static_cast<std::size_t>(ids.cols()) != cfg.max_len) {
    throw std::invalid_argument("embed: row width " + std::to_string(ids.cols()) + " != n=" +
                                std::to_string(cfg.max_len));
  }
  std::vector<Matrix> out;
  for (Eigen::Index b = 0; b < ids.rows(); ++b) {
    Matrix e(ids.cols(), static_cast<Eigen::Index>(cfg.dim));
    for (Eigen::Index k = 0; k < ids.cols(); ++k) {
      const ItemId id = ids(b, k);
      if (id < 0 || static_cast<std::size_t>(id) >= cfg.num_items + 2) {
        throw std::out_of_range("embed: item id " + std::to_string(id) + " out of range");
      }
      e.row(k) = params.item_embeddings.row(id) + params.position_embeddings.row(k);
    }
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

std::vector<TokenSpan> pack_spans(const IdMatrix& ids, const EncoderConfig& cfg, std::vector<ItemId>& token_ids,
                                  std::vector<std::size_t>& token_positions) {
  if (static_cast<std::size_t>(ids.cols()) != cfg.max_len) {
    throw std::invalid_argument("encode: row width " + std::to_string(ids.cols()) + " != n=" +
                                std::to_string(cfg.max_len));
  }
  const auto n = static_cast<std::size_t>(ids.cols());
  std::vector<TokenSpan> spans;
  spans.reserve(static_cast<std::size_t>(ids.rows()));
  for (Eigen::Index b = 0; b < ids.rows(); ++b) {
    std::size_t first = 0;
    while (first < n && ids(b, static_cast<Eigen::Index>(first)) == kPadId) ++first;
    if (first == n) throw std::invalid_argument("encode: row " + std::to_string(b) + " is all padding");
    spans.push_back({token_ids.size(), n - first});
    for (std::size_t k = first; k < n; ++k) {
      const ItemId id = ids(b, static_cast<Eigen::Index>(k));
      if (id == kPadId) {
        throw std::invalid_argument("encode: row " + std::to_string(b) + " is not left-padded");
      }
      if (id < 0 || static_cast<std::size_t>(id) >= cfg.num_items + 2) {
        throw std::out_of_range("encode: item id " + std::to_string(id) + " out of range");
      }
      token_ids.push_back(id);
      token_positions.push_back(k);
    }
  }
  return spans;
}

void apply_mask(Matrix& x, bool active, double rate, Rng& rng, Matrix* keep) {
  if (!active || rate <= 0.0) return;
  Matrix mask = nn::dropout_mask(x.rows(), x.cols(), rate, rng);
  x.array() *= mask.array();
  if (keep != nullptr) *keep = std::move(mask);
}

}  // namespace

SequenceRepresentation encode(const IdMatrix& ids, const EncoderParams& params, bool dropout_active, Rng& rng,
                              EncoderTape* tape) {
  const auto& cfg = params.config;
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  const auto heads = cfg.heads;
  const auto head_dim = static_cast<Eigen::Index>(cfg.dim / heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const double rate = cfg.dropout;

  EncoderTape local;
  EncoderTape& t = tape != nullptr ? *tape : local;
  t = EncoderTape{};
  t.heads = heads;
  t.spans = pack_spans(ids, cfg, t.token_ids, t.token_positions);
  const auto total = static_cast<Eigen::Index>(t.token_ids.size());

  Matrix x(total, d);
  for (Eigen::Index r = 0; r < total; ++r) {
    x.row(r) = params.item_embeddings.row(t.token_ids[static_cast<std::size_t>(r)]) +
               params.position_embeddings.row(static_cast<Eigen::Index>(t.token_positions[static_cast<std::size_t>(r)]));
  }
  x = nn::layer_norm(x, params.embed_norm, cfg.ln_eps, &t.embed_norm);
  apply_mask(x, dropout_active, rate, rng, &t.embed_mask);

  t.blocks.resize(params.blocks.size());
  for (std::size_t bi = 0; bi < params.blocks.size(); ++bi) {
    const auto& blk = params.blocks[bi];
    auto& bt = t.blocks[bi];

    bt.normed_attn = nn::layer_norm(x, blk.attn_norm, cfg.ln_eps, &bt.attn_norm);
    bt.q = nn::linear(bt.normed_attn, blk.query);
    bt.k = nn::linear(bt.normed_attn, blk.key);
    bt.v = nn::linear(bt.normed_attn, blk.value);
    bt.context = Matrix::Zero(total, d);
    bt.probs.reserve(t.spans.size() * heads);
    for (const auto& span : t.spans) {
      const auto off = static_cast<Eigen::Index>(span.offset);
      const auto len = static_cast<Eigen::Index>(span.length);
      for (std::size_t h = 0; h < heads; ++h) {
        const auto col = static_cast<Eigen::Index>(h) * head_dim;
        Matrix scores = bt.q.block(off, col, len, head_dim) * bt.k.block(off, col, len, head_dim).transpose();
        Matrix probs = Matrix::Zero(len, len);
        for (Eigen::Index i = 0; i < len; ++i) {
          // Causal: position i sees j <= i.
          double mx = -std::numeric_limits<double>::infinity();
          for (Eigen::Index j = 0; j <= i; ++j) mx = std::max(mx, scores(i, j) * scale);
          double sum = 0.0;
          for (Eigen::Index j = 0; j <= i; ++j) {
            probs(i, j) = std::exp(scores(i, j) * scale - mx);
            sum += probs(i, j);
          }
          probs.row(i).head(i + 1) /= sum;
        }
        Matrix weights = probs;
        if (dropout_active && rate > 0.0) {
          Matrix mask = nn::dropout_mask(len, len, rate, rng);
          weights.array() *= mask.array();
          bt.prob_masks.push_back(std::move(mask));
        }
        bt.context.block(off, col, len, head_dim).noalias() = weights * bt.v.block(off, col, len, head_dim);
        bt.probs.push_back(std::move(probs));
      }
    }
    Matrix attn = nn::linear(bt.context, blk.output);
    apply_mask(attn, dropout_active, rate, rng, &bt.attn_mask);
    x += attn;

    bt.normed_ffn = nn::layer_norm(x, blk.ffn_norm, cfg.ln_eps, &bt.ffn_norm);
    bt.ffn_pre = nn::linear(bt.normed_ffn, blk.ffn_in);
    bt.ffn_act = nn::gelu(bt.ffn_pre);
    Matrix ffn = nn::linear(bt.ffn_act, blk.ffn_out);
    apply_mask(ffn, dropout_active, rate, rng, &bt.ffn_mask);
    x += ffn;
  }

  SequenceRepresentation rep;
  rep.max_len = cfg.max_len;
  rep.spans = t.spans;
  rep.tokens = nn::layer_norm(x, params.final_norm, cfg.ln_eps, &t.final_norm);
  rep.final = Matrix(static_cast<Eigen::Index>(t.spans.size()), d);
  for (std::size_t b = 0; b < t.spans.size(); ++b) {
    rep.final.row(static_cast<Eigen::Index>(b)) =
        rep.tokens.row(static_cast<Eigen::Index>(t.spans[b].offset + t.spans[b].length - 1));
  }
  return rep;
}

SequenceRepresentation encode(const SequenceBatch& batch, const EncoderParams& params, bool dropout_active,
                              Rng& rng, EncoderTape* tape) {
  return encode(batch.ids, params, dropout_active, rng, tape);
}

void encode_backward(const EncoderTape& tape, const EncoderParams& params, const Matrix& d_final,
                     EncoderParams& grads) {
  const auto& cfg = params.config;
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  const auto heads = cfg.heads;
  const auto head_dim = static_cast<Eigen::Index>(cfg.dim / heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const auto total = static_cast<Eigen::Index>(tape.token_ids.size());

  Matrix dx = Matrix::Zero(total, d);
  for (std::size_t b = 0; b < tape.spans.size(); ++b) {
    dx.row(static_cast<Eigen::Index>(tape.spans[b].offset + tape.spans[b].length - 1)) =
        d_final.row(static_cast<Eigen::Index>(b));
  }
  dx = nn::layer_norm_backward(dx, params.final_norm, tape.final_norm, &grads.final_norm);

  for (std::size_t bi = params.blocks.size(); bi-- > 0;) {
    const auto& blk = params.blocks[bi];
    auto& gblk = grads.blocks[bi];
    const auto& bt = tape.blocks[bi];

    Matrix d_ffn = bt.ffn_mask.size() > 0 ? Matrix(dx.array() * bt.ffn_mask.array()) : dx;
    Matrix d_act = nn::linear_backward(bt.ffn_act, d_ffn, blk.ffn_out, &gblk.ffn_out);
    Matrix d_pre = nn::gelu_backward(bt.ffn_pre, d_act);
    Matrix d_normed = nn::linear_backward(bt.normed_ffn, d_pre, blk.ffn_in, &gblk.ffn_in);
    dx += nn::layer_norm_backward(d_normed, blk.ffn_norm, bt.ffn_norm, &gblk.ffn_norm);

    Matrix d_attn = bt.attn_mask.size() > 0 ? Matrix(dx.array() * bt.attn_mask.array()) : dx;
    Matrix d_context = nn::linear_backward(bt.context, d_attn, blk.output, &gblk.output);

    Matrix dq = Matrix::Zero(total, d);
    Matrix dk = Matrix::Zero(total, d);
    Matrix dv = Matrix::Zero(total, d);
    std::size_t idx = 0;
    for (const auto& span : tape.spans) {
      const auto off = static_cast<Eigen::Index>(span.offset);
      const auto len = static_cast<Eigen::Index>(span.length);
      for (std::size_t h = 0; h < heads; ++h, ++idx) {
        const auto col = static_cast<Eigen::Index>(h) * head_dim;
        const Matrix& probs = bt.probs[idx];
        const bool masked = !bt.prob_masks.empty();
        Matrix weights = masked ? Matrix(probs.array() * bt.prob_masks[idx].array()) : probs;
        const auto dctx = d_context.block(off, col, len, head_dim);
        dv.block(off, col, len, head_dim).noalias() = weights.transpose() * dctx;
        Matrix d_weights = dctx * bt.v.block(off, col, len, head_dim).transpose();
        if (masked) d_weights.array() *= bt.prob_masks[idx].array();
        // Softmax backward, row-wise: dS = P * (dP - <dP, P>).
        const Eigen::VectorXd inner = (d_weights.array() * probs.array()).rowwise().sum();
        Matrix d_scores = probs.array() * (d_weights.array().colwise() - inner.array());
        d_scores *= scale;
        dq.block(off, col, len, head_dim).noalias() = d_scores * bt.k.block(off, col, len, head_dim);
        dk.block(off, col, len, head_dim).noalias() = d_scores.transpose() * bt.q.block(off, col, len, head_dim);
      }
    }
    Matrix d_normed_attn = nn::linear_backward(bt.normed_attn, dq, blk.query, &gblk.query);
    d_normed_attn += nn::linear_backward(bt.normed_attn, dk, blk.key, &gblk.key);
    d_normed_attn += nn::linear_backward(bt.normed_attn, dv, blk.value, &gblk.value);
    dx += nn::layer_norm_backward(d_normed_attn, blk.attn_norm, bt.attn_norm, &gblk.attn_norm);
  }

  if (tape.embed_mask.size() > 0) dx.array() *= tape.embed_mask.array();
  dx = nn::layer_norm_backward(dx, params.embed_norm, tape.embed_norm, &grads.embed_norm);
  for (Eigen::Index r = 0; r < total; ++r) {
    grads.item_embeddings.row(tape.token_ids[static_cast<std::size_t>(r)]) += dx.row(r);
    grads.position_embeddings.row(static_cast<Eigen::Index>(tape.token_positions[static_cast<std::size_t>(r)])) +=
        dx.row(r);
  }
}

Matrix score_items(const Matrix& final, const EncoderParams& params) {
  const auto items = static_cast<Eigen::Index>(params.config.num_items);
  return final * params.item_embeddings.middleRows(1, items).transpose();
}

void score_items_backward(const Matrix& final, const Matrix& d_logits, const EncoderParams& params,
                          Matrix& d_final, EncoderParams& grads) {
  const auto items = static_cast<Eigen::Index>(params.config.num_items);
  d_final.noalias() += d_logits * params.item_embeddings.middleRows(1, items);
  grads.item_embeddings.middleRows(1, items).noalias() += d_logits.transpose() * final;
}

}  // namespace mclrec
