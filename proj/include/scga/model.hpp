#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scga/coref.hpp"
#include "scga/data.hpp"
#include "scga/decoder.hpp"
#include "scga/encoders.hpp"
#include "scga/optim.hpp"
#include "scga/stgraph.hpp"
#include "scga/tensor.hpp"
#include "scga/vocab.hpp"

namespace scga {

struct ModelConfig {
  std::size_t d = 64;        // hidden width
  std::size_t d_v = 32;      // appearance feature width
  std::size_t heads = 8;     // K, shared by GAT layers and decoder attention
  double tau_s = 0.4;
  double tau_t = 0.2;
  std::vector<int> distances{1, 2, 3, 4};
  std::vector<int> heads_per_distance{1, 1, 2, 4};
  double temperature = 1.0;  // Gumbel-Softmax temperature
  double dropout = 0.3;
  std::size_t max_decode_len = 30;
  std::size_t max_positions = 64;
  bool gn_residual = true;
  bool decoder_ffn = true;

  void validate() const;  // throws ConfigError
};

// Forward behavior: training enables dropout and Gumbel noise; the relaxed
// selection mode exists for finite-difference checks only.
struct ForwardMode {
  bool training = false;
  SelectMode select = SelectMode::kEval;

  static ForwardMode train() { return {true, SelectMode::kTrain}; }
  static ForwardMode eval() { return {false, SelectMode::kEval}; }
  static ForwardMode relaxed() { return {false, SelectMode::kSoftRelax}; }
};

class ScgaModel {
 public:
  ScgaModel(const ModelConfig& config, const Vocabulary& vocab, std::uint64_t seed);

  // Encoder-side state shared by every decoding step of one sample.
  struct Encoded {
    std::vector<std::size_t> history_lens;
    Tensor scores;  // [1 x r]
    SelectionResult selection;
    Tensor question;  // [N_q x d]
    ResolveResult textual;
    ResolveResult visual;
    Tensor question_resolved;  // q* [N_q x d]
    Tensor video_reasoned;     // v*_st [N_v x d]
    std::vector<Tensor> gn_alphas;
    BoolMat edge_matrix;
    std::vector<BoolMat> adjacencies;
    std::vector<int> question_ids;
    std::vector<std::string> question_tokens;
  };
  Encoded encode(const DialogueSample& sample, const ForwardMode& mode);

  struct TokenStats {
    std::size_t steps = 0;
    std::size_t correct = 0;  // per-step argmax emits the target token id
  };
  // Teacher forcing: decoder input <bos> + answer, targets answer + <eos>,
  // mean of per-step multi-label BCE losses.
  Tensor teacher_forced_loss(const DialogueSample& sample, const ForwardMode& mode,
                             TokenStats* stats = nullptr, Encoded* encoded_out = nullptr,
                             DecoderTrace* trace_out = nullptr);

  struct DecodeStep {
    int token_id = 0;
    bool from_pointer = false;
    std::size_t slot = 0;
    double logit = 0.0;
  };
  struct DecodeResult {
    std::vector<int> token_ids;         // emitted answer, <eos> excluded
    std::vector<std::string> tokens;
    std::vector<DecodeStep> steps;      // includes the <eos> step when taken
    double score = 0.0;                 // sum log-sigmoid / len^penalty
  };
  DecodeResult greedy_decode(const DialogueSample& sample, double length_penalty = 1.0);
  DecodeResult beam_decode(const DialogueSample& sample, int beam, double length_penalty);

  // Eval-mode score rows [j x (|V| + N_q)] for a fixed decoder input prefix;
  // row i is the step-i score vector. Used by decoding and by causality
  // checks (row i never depends on prefix positions > i).
  Tensor prefix_step_scores(const Encoded& enc, const std::vector<int>& prefix_ids,
                            DecoderTrace* trace = nullptr);

  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  Rng& rng() { return rng_; }
  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }

 private:
  Tensor embed_tokens(const std::vector<int>& ids) const;
  Tensor scores_for_prefix(const std::vector<int>& prefix_ids, const Encoded& enc,
                           std::size_t step);
  DecodeResult finalize_decode(const std::vector<DecodeStep>& steps, double length_penalty);

  ModelConfig config_;
  Vocabulary vocab_;
  Rng rng_;
  ParameterStore params_;

  TextEncoderParams text_enc_;
  VideoEncoderParams video_enc_;
  HistoryScorerParams scorer_;
  GatParams coref_txt_;
  GatParams coref_vis_;
  GatParams stgraph_;
  std::vector<int> head_alloc_;
  DecoderParams decoder_;
  OutputHeadParams output_;
};

}  // namespace scga
