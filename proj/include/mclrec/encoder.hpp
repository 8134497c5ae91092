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

// Causal self-attention sequence encoder.
//
// Layout: item + learned position embedding, layer norm, dropout, then
// `blocks` pre-norm transformer blocks (x + Attn(LN(x)), x + FFN(LN(x))) and a
// final layer norm. Rows are left-padded; the newest item sits at column n-1
// and its output is the sequence representation.
//
// Padding never takes part in the computation: each row's non-pad suffix is
// packed into a [tokens x d] matrix and attention runs per sequence, so pad
// positions get zero attention weight and a zero hidden state.

#pragma once

#include <vector>

#include "json.hpp"
#include "mclrec/common.hpp"
#include "mclrec/corpus.hpp"
#include "mclrec/nn.hpp"

namespace mclrec {

struct EncoderConfig {
  std::size_t num_items = 0;  // |I|; the table has |I| + 2 rows
  std::size_t max_len = 50;   // n
  std::size_t dim = 64;       // d
  std::size_t blocks = 2;
  std::size_t heads = 2;
  double dropout = 0.5;
  double init_std = 0.02;
  double ln_eps = 1e-12;

  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
};

struct BlockParams {
  nn::LayerNormParams attn_norm;
  nn::LinearParams query, key, value, output;
  nn::LayerNormParams ffn_norm;
  nn::LinearParams ffn_in, ffn_out;

  BlockParams zeros_like() const;
  void append_to(TensorList& list, const std::string& prefix);
};

struct EncoderParams {
  EncoderConfig config;
  Matrix item_embeddings;      // [(|I| + 2) x d], row 0 pad, row |I|+1 mask
  Matrix position_embeddings;  // [n x d]
  nn::LayerNormParams embed_norm;
  std::vector<BlockParams> blocks;
  nn::LayerNormParams final_norm;

  static EncoderParams initialize(const EncoderConfig& config, Rng& rng);
  EncoderParams zeros_like() const;
  TensorList tensors();
  ConstTensorList tensors() const;
};

struct TokenSpan {
  std::size_t offset = 0;  // first packed token row
  std::size_t length = 0;  // non-pad length
};

struct SequenceRepresentation {
  std::size_t max_len = 0;
  std::vector<TokenSpan> spans;
  Matrix tokens;  // packed non-pad outputs [sum(lengths) x d]
  Matrix final;   // [batch x d], output at column n-1

  // Dense [n x d] hidden states of row b; pad positions are zero.
  Matrix hidden(std::size_t b) const;
};

struct BlockTape {
  nn::LayerNormCache attn_norm;
  Matrix normed_attn;  // input of the q/k/v projections
  Matrix q, k, v;
  std::vector<Matrix> probs;       // per (sequence, head), [L x L]
  std::vector<Matrix> prob_masks;  // dropout on attention weights
  Matrix context;
  Matrix attn_mask;
  nn::LayerNormCache ffn_norm;
  Matrix normed_ffn;
  Matrix ffn_pre;
  Matrix ffn_act;
  Matrix ffn_mask;
};

struct EncoderTape {
  std::vector<TokenSpan> spans;
  std::vector<ItemId> token_ids;
  std::vector<std::size_t> token_positions;
  nn::LayerNormCache embed_norm;
  Matrix embed_mask;
  std::vector<BlockTape> blocks;
  nn::LayerNormCache final_norm;
  std::size_t heads = 0;

  // Dense [n x n] attention weights (before dropout) of one row and head.
  Matrix attention(std::size_t block, std::size_t b, std::size_t head, std::size_t n) const;
};

// e[b][k] = M[ids(b, k)] + p_k for every column, pads included.
std::vector<Matrix> embed(const IdMatrix& ids, const EncoderParams& params);

SequenceRepresentation encode(const IdMatrix& ids, const EncoderParams& params, bool dropout_active, Rng& rng,
                              EncoderTape* tape = nullptr);
SequenceRepresentation encode(const SequenceBatch& batch, const EncoderParams& params, bool dropout_active,
                              Rng& rng, EncoderTape* tape = nullptr);

// Accumulates dL/dtheta into `grads` given dL/d(final).
void encode_backward(const EncoderTape& tape, const EncoderParams& params, const Matrix& d_final,
                     EncoderParams& grads);

// Logits over real items: final * M[1..|I|]^T, shape [batch x |I|].
Matrix score_items(const Matrix& final, const EncoderParams& params);
// Adds dL/d(final) into `d_final` and dL/dM into `grads`.
void score_items_backward(const Matrix& final, const Matrix& d_logits, const EncoderParams& params,
                          Matrix& d_final, EncoderParams& grads);

}  // namespace mclrec
