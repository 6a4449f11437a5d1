#include "scga/decoder.hpp"

#include <cmath>

#include "scga/errors.hpp"

namespace scga {

Tensor multi_head_attention(const Tensor& query_in, const Tensor& keyvalue_in,
                            const BoolMat* mask, const MhaParams& params, double dropout_rate,
                            Rng* rng, bool training, std::vector<Tensor>* alphas_out) {
  if (params.heads.empty()) throw std::invalid_argument("multi_head_attention: no heads");
  const std::size_t m = query_in.rows();
  const std::size_t n = keyvalue_in.rows();
  if (mask && (mask->rows != m || mask->cols != n)) {
    throw std::invalid_argument("multi_head_attention: mask is " + std::to_string(mask->rows) +
                                "x" + std::to_string(mask->cols) + ", expected " +
                                std::to_string(m) + "x" + std::to_string(n));
  }
  const std::size_t dk = params.heads[0].wq->tensor.cols();
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

  std::vector<Tensor> head_outputs;
  head_outputs.reserve(params.heads.size());
  for (const auto& head : params.heads) {
    Tensor q = add_rowvec(matmul(query_in, head.wq->tensor), head.bq->tensor);     // [m x dk]
    Tensor k = add_rowvec(matmul(keyvalue_in, head.wk->tensor), head.bk->tensor);  // [n x dk]
    Tensor v = add_rowvec(matmul(keyvalue_in, head.wv->tensor), head.bv->tensor);  // [n x dk]
    Tensor logits = scale(matmul(q, transpose(k)), inv_sqrt_dk);                   // [m x n]
    Tensor alpha = mask ? masked_softmax(logits, mask->v) : softmax(logits, 1);
    if (alphas_out) alphas_out->push_back(alpha);
    if (training && dropout_rate > 0.0) {
      if (rng == nullptr) {
        throw std::invalid_argument("multi_head_attention: dropout needs an rng");
      }
      alpha = dropout(alpha, dropout_rate, *rng, training);
    }
    head_outputs.push_back(matmul(alpha, v));  // [m x dk]
  }
  Tensor concatenated = concat(head_outputs, 1);  // [m x d]
  return add_rowvec(matmul(concatenated, params.wo->tensor), params.bo->tensor);
}

BoolMat causal_mask(std::size_t n) {
  BoolMat m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m.set(i, j);
  return m;
}

BoolMat key_padding_mask(std::size_t m, std::size_t n, std::size_t valid) {
  if (valid == 0 || valid > n) {
    throw std::invalid_argument("key_padding_mask: valid key count " + std::to_string(valid) +
                                " out of range for " + std::to_string(n) + " keys");
  }
  BoolMat mask(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < valid; ++j) mask.set(i, j);
  return mask;
}

namespace {

// Post-norm residual: LN(x + dropout(sub)).
Tensor post_norm(const Tensor& x, const Tensor& sub, const SublayerNormParams& ln,
                 double dropout_rate, Rng* rng, bool training) {
  Tensor s = sub;
  if (training && dropout_rate > 0.0) s = dropout(s, dropout_rate, *rng, training);
  return layer_norm(add(x, s), ln.gain->tensor, ln.bias->tensor);
}

}  // namespace

Tensor decoder_forward(const Tensor& answer_prefix, const Tensor& history,
                       std::size_t history_valid_len, const Tensor& question,
                       const Tensor& video, const DecoderParams& params, double dropout_rate,
                       Rng* rng, bool training, DecoderTrace* trace) {
  const std::size_t j = answer_prefix.rows();
  const BoolMat self_mask = causal_mask(j);
  const BoolMat hist_mask = key_padding_mask(j, history.rows(), history_valid_len);

  DecoderTrace local;
  DecoderTrace& t = trace ? *trace : local;

  Tensor a_sub = multi_head_attention(answer_prefix, answer_prefix, &self_mask,
                                      params.self_attn, dropout_rate, rng, training,
                                      &t.self_alphas);
  t.z_self = post_norm(answer_prefix, a_sub, params.ln_self, dropout_rate, rng, training);

  Tensor h_sub = multi_head_attention(t.z_self, history, &hist_mask, params.hist_attn,
                                      dropout_rate, rng, training, &t.hist_alphas);
  t.z_hist = post_norm(t.z_self, h_sub, params.ln_hist, dropout_rate, rng, training);

  Tensor q_sub = multi_head_attention(t.z_hist, question, nullptr, params.ques_attn,
                                      dropout_rate, rng, training, &t.ques_alphas);
  t.z_ques = post_norm(t.z_hist, q_sub, params.ln_ques, dropout_rate, rng, training);

  Tensor v_sub = multi_head_attention(t.z_ques, video, nullptr, params.vid_attn, dropout_rate,
                                      rng, training, &t.vid_alphas);
  t.z_vid = post_norm(t.z_ques, v_sub, params.ln_vid, dropout_rate, rng, training);

  if (!params.use_ffn) return t.z_vid;
  Tensor f = linear(relu(linear(t.z_vid, params.ffn_in)), params.ffn_out);
  return post_norm(t.z_vid, f, params.ln_ffn, dropout_rate, rng, training);
}

Tensor step_scores(const Tensor& z_row, const Tensor& question_resolved,
                   const OutputHeadParams& params) {
  if (z_row.rows() != 1) {
    throw std::invalid_argument("step_scores: expected a single decoder row, got " +
                                shape_str(z_row.shape()));
  }
  Tensor p_voc = linear(z_row, params.g_voc);                       // [1 x |V|]
  Tensor q_proj = linear(question_resolved, params.g_ptr_q);        // [N_q x d]
  Tensor z_proj = linear(z_row, params.g_ptr_z);                    // [1 x d]
  Tensor p_ptr = transpose(matmul(q_proj, transpose(z_proj)));      // [1 x N_q]
  return concat({p_voc, p_ptr}, 1);
}

std::vector<double> multi_hot_target(const std::string& target_token,
                                     const std::vector<std::string>& question_tokens,
                                     const Vocabulary& vocab) {
  std::vector<double> y(static_cast<std::size_t>(vocab.size()) + question_tokens.size(), 0.0);
  y[static_cast<std::size_t>(vocab.id(target_token))] = 1.0;
  for (std::size_t i = 0; i < question_tokens.size(); ++i) {
    if (question_tokens[i] == target_token) {
      y[static_cast<std::size_t>(vocab.size()) + i] = 1.0;
    }
  }
  return y;
}

Tensor step_loss(const Tensor& scores, const std::vector<double>& target) {
  return bce_with_logits_mean(scores, target);
}

}  // namespace scga
