#include "scga/coref.hpp"

#include <cmath>

#include "scga/errors.hpp"

namespace scga {

Tensor linear(const Tensor& x, const LinearParams& p) {
  return add_rowvec(matmul(x, p.w->tensor), p.b->tensor);
}

BoolMat bool_multiply(const BoolMat& a, const BoolMat& b) {
  if (a.cols != b.rows) {
    throw std::invalid_argument("bool_multiply: inner dimensions disagree");
  }
  BoolMat out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      if (!a.get(i, k)) continue;
      const std::uint8_t* brow = &b.v[k * b.cols];
      std::uint8_t* orow = &out.v[i * out.cols];
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] |= brow[j];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// history selection
// ---------------------------------------------------------------------------

Tensor score_histories(const Tensor& question, const std::vector<Tensor>& histories,
                       const std::vector<std::size_t>& history_lens,
                       const HistoryScorerParams& params) {
  if (histories.empty()) {
    throw std::invalid_argument("score_histories: need at least one history unit");
  }
  if (histories.size() != history_lens.size()) {
    throw std::invalid_argument("score_histories: history/length count mismatch");
  }
  const std::size_t r = histories.size();
  Tensor q_mean = linear(mean_axis0(question), params.f_q);  // [1 x d]
  std::vector<Tensor> scores;
  scores.reserve(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t len = history_lens[i];
    if (len == 0 || len > histories[i].rows()) {
      throw std::invalid_argument("score_histories: invalid valid-length " +
                                  std::to_string(len) + " for history " + std::to_string(i));
    }
    Tensor h_valid = len == histories[i].rows() ? histories[i] : slice(histories[i], 0, 0, len);
    Tensor h_mean = linear(mean_axis0(h_valid), params.f_h);
    Tensor e = leaky_relu(linear(concat({q_mean, h_mean}, 1), params.f_e));
    const double delta = static_cast<double>(r - i);  // distance to the current round
    Tensor s = linear(concat({e, Tensor::scalar(delta)}, 1), params.f_s);  // [1 x 1]
    scores.push_back(s);
  }
  return concat(scores, 1);  // [1 x r]
}

SelectionResult gumbel_select(const Tensor& scores, const std::vector<Tensor>& histories_padded,
                              const std::vector<std::size_t>& history_lens, double temperature,
                              SelectMode mode, Rng* rng) {
  const std::size_t r = scores.size();
  if (r == 0 || scores.rows() != 1) {
    throw std::invalid_argument("gumbel_select: scores must be a [1 x r] row");
  }
  if (histories_padded.size() != r || history_lens.size() != r) {
    throw std::invalid_argument("gumbel_select: score/history count mismatch");
  }
  for (double s : scores.data()) {
    if (!std::isfinite(s)) throw NumericError("gumbel_select: non-finite history score");
  }
  for (std::size_t i = 1; i < r; ++i) {
    if (histories_padded[i].shape() != histories_padded[0].shape()) {
      throw std::invalid_argument("gumbel_select: histories must be padded to a common shape");
    }
  }

  SelectionResult result;
  if (mode == SelectMode::kEval) {
    result.index = argmax(scores.data());
    result.g = one_hot_row(r, result.index);
  } else {
    if (rng == nullptr) {
      throw std::invalid_argument("gumbel_select: train/soft modes need an rng");
    }
    std::vector<double> noise(r);
    for (auto& n : noise) n = rng->gumbel();
    Tensor perturbed = add(scores, Tensor::constant({1, r}, std::move(noise)));
    Tensor soft = softmax(scale(perturbed, 1.0 / temperature), 1);
    result.index = argmax(soft.data());
    if (mode == SelectMode::kSoftRelax) {
      result.g = soft;
    } else {
      // Straight-through: hard one-hot value, soft gradient.
      result.g = add(one_hot_row(r, result.index), sub(soft, soft.detach()));
    }
  }

  Tensor mixed;
  for (std::size_t i = 0; i < r; ++i) {
    Tensor term = scale_by(histories_padded[i], slice(result.g, 1, i, i + 1));
    mixed = mixed.defined() ? add(mixed, term) : term;
  }
  result.selected = mixed;
  result.selected_len = history_lens[result.index];
  return result;
}

// ---------------------------------------------------------------------------
// graph attention
// ---------------------------------------------------------------------------

Tensor multi_head_gat(const Tensor& nodes, const std::vector<BoolMat>& masks,
                      const GatParams& params, double dropout_rate, Rng* rng, bool training,
                      std::vector<Tensor>* alphas_out) {
  const std::size_t n = nodes.rows();
  const std::size_t k_heads = params.heads.size();
  if (k_heads == 0) throw std::invalid_argument("multi_head_gat: no heads");
  if (masks.size() != 1 && masks.size() != k_heads) {
    throw std::invalid_argument("multi_head_gat: expected 1 or K masks, got " +
                                std::to_string(masks.size()));
  }
  for (const auto& m : masks) {
    if (m.rows != n || m.cols != n) {
      throw std::invalid_argument("multi_head_gat: mask size does not match node count");
    }
  }
  if (training && dropout_rate > 0.0 && rng == nullptr) {
    throw std::invalid_argument("multi_head_gat: dropout in training mode needs an rng");
  }

  std::vector<Tensor> head_outputs;
  head_outputs.reserve(k_heads);
  for (std::size_t k = 0; k < k_heads; ++k) {
    const auto& head = params.heads[k];
    const BoolMat& mask = masks.size() == 1 ? masks[0] : masks[k];
    Tensor u = matmul(nodes, head.w->tensor);                    // [n x dk]
    Tensor s_src = matmul(u, head.a_src->tensor);                // [n x 1]
    Tensor s_dst = matmul(u, head.a_dst->tensor);                // [n x 1]
    Tensor logits = leaky_relu(pairwise_sum(s_src, s_dst));      // [n x n]
    Tensor alpha = masked_softmax(logits, mask.v);
    if (alphas_out) alphas_out->push_back(alpha);
    if (training && dropout_rate > 0.0) alpha = dropout(alpha, dropout_rate, *rng, training);
    head_outputs.push_back(leaky_relu(matmul(alpha, u)));        // [n x dk]
  }
  return concat(head_outputs, 1);  // [n x d]
}

Tensor gat_layer(const Tensor& nodes, const BoolMat& adjacency, const GatParams& params,
                 double dropout_rate, Rng* rng, bool training,
                 std::vector<Tensor>* alphas_out) {
  return multi_head_gat(nodes, {adjacency}, params, dropout_rate, rng, training, alphas_out);
}

BoolMat bipartite_mask(std::size_t a_count, std::size_t b_count, std::size_t b_valid) {
  if (b_valid > b_count) {
    throw std::invalid_argument("bipartite_mask: valid count exceeds partition size");
  }
  const std::size_t n = a_count + b_count;
  BoolMat mask(n, n);
  mask.set_diagonal();  // every node is in its own neighborhood
  for (std::size_t i = 0; i < a_count; ++i) {
    for (std::size_t j = 0; j < b_valid; ++j) {
      mask.set(i, a_count + j);
      mask.set(a_count + j, i);
    }
  }
  return mask;
}

namespace {

ResolveResult resolve_common(const Tensor& keep_part, const Tensor& other_part,
                             std::size_t other_valid, const GatParams& params,
                             double dropout_rate, Rng* rng, bool training) {
  const std::size_t keep_rows = keep_part.rows();
  ResolveResult out;
  out.mask = bipartite_mask(keep_rows, other_part.rows(), other_valid);
  Tensor nodes = concat({keep_part, other_part}, 0);
  Tensor updated =
      multi_head_gat(nodes, {out.mask}, params, dropout_rate, rng, training, &out.alphas);
  out.resolved = slice(add(updated, nodes), 0, 0, keep_rows);
  return out;
}

}  // namespace

ResolveResult resolve_textual(const Tensor& question, const Tensor& history,
                              std::size_t history_valid_len, const GatParams& params,
                              double dropout_rate, Rng* rng, bool training) {
  return resolve_common(question, history, history_valid_len, params, dropout_rate, rng,
                        training);
}

ResolveResult resolve_visual(const Tensor& video, const Tensor& question_resolved,
                             const GatParams& params, double dropout_rate, Rng* rng,
                             bool training) {
  return resolve_common(video, question_resolved, question_resolved.rows(), params,
                        dropout_rate, rng, training);
}

}  // namespace scga
