#pragma once

#include <cstddef>
#include <vector>

#include "scga/graph.hpp"
#include "scga/optim.hpp"
#include "scga/rng.hpp"
#include "scga/tensor.hpp"

namespace scga {

struct LinearParams {
  Parameter* w = nullptr;  // [in x out]
  Parameter* b = nullptr;  // [out]
};

Tensor linear(const Tensor& x, const LinearParams& p);

// ---- discrete history selection --------------------------------------------

struct HistoryScorerParams {
  LinearParams f_q;  // d -> d
  LinearParams f_h;  // d -> d
  LinearParams f_e;  // 2d -> d, LeakyReLU on top
  LinearParams f_s;  // d+1 -> 1, distance enters as a raw scalar
};

// Matching scores s_{r,i} between the question and each history unit:
//   e_i = f_e([f_q(mean(q)) || f_h(mean(h_i))]),  s_i = f_s([e_i || r - i]).
// Means run over the word axis using only the first `len` rows of each
// (possibly padded) history. Returns a [1 x r] score row.
Tensor score_histories(const Tensor& question, const std::vector<Tensor>& histories,
                       const std::vector<std::size_t>& history_lens,
                       const HistoryScorerParams& params);

enum class SelectMode {
  kTrain,      // Gumbel noise, hard one-hot forward, straight-through gradient
  kEval,       // noiseless argmax one-hot
  kSoftRelax,  // fully soft weights (finite-difference checks only)
};

struct SelectionResult {
  Tensor g;             // [1 x r]; exactly one-hot in train/eval forward
  std::size_t index;    // argmax arm (the forward selection)
  Tensor selected;      // sum_i g_i * h_i over padded histories
  std::size_t selected_len;
};

// Discrete attention over history units. All histories must be padded to a
// common row count before mixing. Non-finite scores raise NumericError.
SelectionResult gumbel_select(const Tensor& scores, const std::vector<Tensor>& histories_padded,
                              const std::vector<std::size_t>& history_lens, double temperature,
                              SelectMode mode, Rng* rng);

// ---- graph attention --------------------------------------------------------

struct GatHeadParams {
  Parameter* w = nullptr;      // [d x d/K]
  Parameter* a_src = nullptr;  // [d/K x 1], first half of the attention vector
  Parameter* a_dst = nullptr;  // [d/K x 1], second half
};

struct GatParams {
  std::vector<GatHeadParams> heads;
};

// One multi-head graph-attention pass. Head k's logits are
// LeakyReLU(a_src^T u_i + a_dst^T u_j) with u = V W^k, normalized over the
// neighborhood given by masks[k] (or masks[0] when shared), and outputs are
// concat_k LeakyReLU(alpha^k u^k). `alphas_out`, when given, receives the
// pre-dropout attention matrix of every head.
Tensor multi_head_gat(const Tensor& nodes, const std::vector<BoolMat>& masks,
                      const GatParams& params, double dropout_rate, Rng* rng, bool training,
                      std::vector<Tensor>* alphas_out = nullptr);

// Shared-neighborhood convenience wrapper (one mask for all heads).
Tensor gat_layer(const Tensor& nodes, const BoolMat& adjacency, const GatParams& params,
                 double dropout_rate, Rng* rng, bool training,
                 std::vector<Tensor>* alphas_out = nullptr);

// Bipartite neighborhood over [partition A rows || partition B rows]:
// self-loops everywhere, cross-partition edges in both directions, and rows
// at index >= a_count + b_valid (history padding) excluded from everyone
// else's neighborhood.
BoolMat bipartite_mask(std::size_t a_count, std::size_t b_count, std::size_t b_valid);

struct ResolveResult {
  Tensor resolved;             // first rows of (gat(V) + V)
  std::vector<Tensor> alphas;  // per head, over the full node set
  BoolMat mask;
};

// Textual resolver: V = [question || selected history]; one GAT pass;
// residual; keep the first N_q rows.
ResolveResult resolve_textual(const Tensor& question, const Tensor& history,
                              std::size_t history_valid_len, const GatParams& params,
                              double dropout_rate, Rng* rng, bool training);

// Visual resolver: V = [video || resolved question]; same pipeline; keep the
// first N_v rows.
ResolveResult resolve_visual(const Tensor& video, const Tensor& question_resolved,
                             const GatParams& params, double dropout_rate, Rng* rng,
                             bool training);

}  // namespace scga
