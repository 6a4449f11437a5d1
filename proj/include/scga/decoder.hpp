#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scga/coref.hpp"
#include "scga/graph.hpp"
#include "scga/optim.hpp"
#include "scga/tensor.hpp"
#include "scga/vocab.hpp"

namespace scga {

// ---- scaled dot-product multi-head attention --------------------------------

struct AttentionHeadParams {
  Parameter* wq = nullptr;  // [d x d/K]
  Parameter* wk = nullptr;
  Parameter* wv = nullptr;
  Parameter* bq = nullptr;  // [d/K]
  Parameter* bk = nullptr;
  Parameter* bv = nullptr;
};

struct MhaParams {
  std::vector<AttentionHeadParams> heads;
  Parameter* wo = nullptr;  // [d x d]
  Parameter* bo = nullptr;  // [d]
};

// Attention(Q, K, V) with logits Q K^T / sqrt(d/K). `mask`, when present, is
// [m x n] over (query, key) pairs; masked entries get zero weight. Returned
// alphas (optional) are pre-dropout.
Tensor multi_head_attention(const Tensor& query_in, const Tensor& keyvalue_in,
                            const BoolMat* mask, const MhaParams& params, double dropout_rate,
                            Rng* rng, bool training, std::vector<Tensor>* alphas_out = nullptr);

BoolMat causal_mask(std::size_t n);
// [m x n] mask admitting only the first `valid` key columns.
BoolMat key_padding_mask(std::size_t m, std::size_t n, std::size_t valid);

// ---- decoder block -----------------------------------------------------------

struct SublayerNormParams {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;
};

struct DecoderParams {
  MhaParams self_attn;   // masked self-attention over the partial answer
  MhaParams hist_attn;   // guided attention to the selected history
  MhaParams ques_attn;   // guided attention to the resolved question
  MhaParams vid_attn;    // guided attention to the reasoned video
  SublayerNormParams ln_self, ln_hist, ln_ques, ln_vid, ln_ffn;
  LinearParams ffn_in;   // d -> 4d
  LinearParams ffn_out;  // 4d -> d
  bool use_ffn = true;
};

// Intermediate stage outputs and attention weights, exported for tests and
// attention dumps.
struct DecoderTrace {
  Tensor z_self, z_hist, z_ques, z_vid;
  std::vector<Tensor> self_alphas, hist_alphas, ques_alphas, vid_alphas;
};

// Four-stage decoding pipeline over an embedded answer prefix [j x d]:
// causal self-attention, then attention to history, question, and video,
// each post-norm residual; optional position-wise feed-forward tail.
Tensor decoder_forward(const Tensor& answer_prefix, const Tensor& history,
                       std::size_t history_valid_len, const Tensor& question,
                       const Tensor& video, const DecoderParams& params, double dropout_rate,
                       Rng* rng, bool training, DecoderTrace* trace = nullptr);

// ---- output heads ------------------------------------------------------------

struct OutputHeadParams {
  LinearParams g_voc;    // d -> |V|
  LinearParams g_ptr_q;  // d -> d, applied to question tokens
  LinearParams g_ptr_z;  // d -> d, applied to the decoder output
};

// Concatenated score row [1 x (|V| + N_q)]: fixed-vocabulary scores followed
// by one bilinear pointer score per question position.
Tensor step_scores(const Tensor& z_row, const Tensor& question_resolved,
                   const OutputHeadParams& params);

// Multi-hot target over the concatenated slots: the vocab slot of the target
// token, plus every question position holding the same token string.
std::vector<double> multi_hot_target(const std::string& target_token,
                                     const std::vector<std::string>& question_tokens,
                                     const Vocabulary& vocab);

// Mean BCE-with-logits over the concatenated slots.
Tensor step_loss(const Tensor& scores, const std::vector<double>& target);

}  // namespace scga
