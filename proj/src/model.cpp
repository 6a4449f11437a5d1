#include "scga/model.hpp"

#include <algorithm>
#include <cmath>

#include "scga/errors.hpp"

namespace scga {

void ModelConfig::validate() const {
  if (d == 0 || heads == 0 || d % heads != 0) {
    throw ConfigError("model config: d=" + std::to_string(d) + " must be divisible by K=" +
                      std::to_string(heads));
  }
  if (distances.empty() || distances.size() != heads_per_distance.size()) {
    throw ConfigError("model config: distances and heads_per_distance must align");
  }
  int total = 0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (distances[i] < 1 || (i > 0 && distances[i] <= distances[i - 1])) {
      throw ConfigError("model config: distances must be positive and increasing");
    }
    if (heads_per_distance[i] < 1) {
      throw ConfigError("model config: heads_per_distance entries must be positive");
    }
    total += heads_per_distance[i];
  }
  if (total != static_cast<int>(heads)) {
    throw ConfigError("model config: heads_per_distance sums to " + std::to_string(total) +
                      ", expected K=" + std::to_string(heads));
  }
  if (temperature <= 0.0) throw ConfigError("model config: temperature must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model config: dropout outside [0,1)");
  if (max_decode_len == 0) throw ConfigError("model config: max_decode_len must be positive");
  if (max_positions < max_decode_len + 1) {
    throw ConfigError("model config: max_positions must cover max_decode_len + <bos>");
  }
}

// ---------------------------------------------------------------------------
// construction
// ---------------------------------------------------------------------------

namespace {

LinearParams make_linear(ParameterStore& store, const std::string& name, std::size_t in,
                         std::size_t out, Rng& rng) {
  LinearParams p;
  p.w = &store.uniform(name + ".w", {in, out}, in, rng);
  p.b = &store.zeros(name + ".b", {out});
  return p;
}

GatParams make_gat(ParameterStore& store, const std::string& name, std::size_t d,
                   std::size_t heads, Rng& rng) {
  GatParams p;
  const std::size_t dk = d / heads;
  for (std::size_t k = 0; k < heads; ++k) {
    const std::string h = name + ".h" + std::to_string(k);
    GatHeadParams head;
    head.w = &store.uniform(h + ".w", {d, dk}, d, rng);
    head.a_src = &store.uniform(h + ".a_src", {dk, 1}, dk, rng);
    head.a_dst = &store.uniform(h + ".a_dst", {dk, 1}, dk, rng);
    p.heads.push_back(head);
  }
  return p;
}

MhaParams make_mha(ParameterStore& store, const std::string& name, std::size_t d,
                   std::size_t heads, Rng& rng) {
  MhaParams p;
  const std::size_t dk = d / heads;
  for (std::size_t k = 0; k < heads; ++k) {
    const std::string h = name + ".h" + std::to_string(k);
    AttentionHeadParams head;
    head.wq = &store.uniform(h + ".wq", {d, dk}, d, rng);
    head.wk = &store.uniform(h + ".wk", {d, dk}, d, rng);
    head.wv = &store.uniform(h + ".wv", {d, dk}, d, rng);
    head.bq = &store.zeros(h + ".bq", {dk});
    head.bk = &store.zeros(h + ".bk", {dk});
    head.bv = &store.zeros(h + ".bv", {dk});
    p.heads.push_back(head);
  }
  p.wo = &store.uniform(name + ".wo", {d, d}, d, rng);
  p.bo = &store.zeros(name + ".bo", {d});
  return p;
}

SublayerNormParams make_ln(ParameterStore& store, const std::string& name, std::size_t d) {
  SublayerNormParams p;
  p.gain = &store.ones(name + ".gain", {d});
  p.bias = &store.zeros(name + ".bias", {d});
  return p;
}

}  // namespace

ScgaModel::ScgaModel(const ModelConfig& config, const Vocabulary& vocab, std::uint64_t seed)
    : config_(config), vocab_(vocab), rng_(seed) {
  config_.validate();
  const std::size_t d = config_.d;
  const std::size_t vocab_size = static_cast<std::size_t>(vocab_.size());

  text_enc_.embedding = &params_.uniform("embed.table", {vocab_size, d}, d, rng_);
  text_enc_.ln_gain = &params_.ones("embed.ln.gain", {d});
  text_enc_.ln_bias = &params_.zeros("embed.ln.bias", {d});
  text_enc_.pe = positional_encoding_table(config_.max_positions, d);

  video_enc_.proj_w = &params_.uniform("video.proj.w", {config_.d_v, d}, config_.d_v, rng_);
  video_enc_.proj_b = &params_.zeros("video.proj.b", {d});
  video_enc_.ln_gain = &params_.ones("video.ln.gain", {d});
  video_enc_.ln_bias = &params_.zeros("video.ln.bias", {d});

  scorer_.f_q = make_linear(params_, "select.fq", d, d, rng_);
  scorer_.f_h = make_linear(params_, "select.fh", d, d, rng_);
  scorer_.f_e = make_linear(params_, "select.fe", 2 * d, d, rng_);
  scorer_.f_s = make_linear(params_, "select.fs", d + 1, 1, rng_);

  coref_txt_ = make_gat(params_, "coref_txt", d, config_.heads, rng_);
  coref_vis_ = make_gat(params_, "coref_vis", d, config_.heads, rng_);
  stgraph_ = make_gat(params_, "stgraph", d, config_.heads, rng_);
  head_alloc_ = config_.heads_per_distance;

  decoder_.self_attn = make_mha(params_, "dec.self", d, config_.heads, rng_);
  decoder_.hist_attn = make_mha(params_, "dec.hist", d, config_.heads, rng_);
  decoder_.ques_attn = make_mha(params_, "dec.ques", d, config_.heads, rng_);
  decoder_.vid_attn = make_mha(params_, "dec.vid", d, config_.heads, rng_);
  decoder_.ln_self = make_ln(params_, "dec.ln_self", d);
  decoder_.ln_hist = make_ln(params_, "dec.ln_hist", d);
  decoder_.ln_ques = make_ln(params_, "dec.ln_ques", d);
  decoder_.ln_vid = make_ln(params_, "dec.ln_vid", d);
  decoder_.ln_ffn = make_ln(params_, "dec.ln_ffn", d);
  decoder_.ffn_in = make_linear(params_, "dec.ffn_in", d, 4 * d, rng_);
  decoder_.ffn_out = make_linear(params_, "dec.ffn_out", 4 * d, d, rng_);
  decoder_.use_ffn = config_.decoder_ffn;

  output_.g_voc = make_linear(params_, "out.voc", d, vocab_size, rng_);
  output_.g_ptr_q = make_linear(params_, "out.ptr_q", d, d, rng_);
  output_.g_ptr_z = make_linear(params_, "out.ptr_z", d, d, rng_);
}

Tensor ScgaModel::embed_tokens(const std::vector<int>& ids) const {
  return encode_text(ids, text_enc_);
}

// ---------------------------------------------------------------------------
// encoder-side pass
// ---------------------------------------------------------------------------

ScgaModel::Encoded ScgaModel::encode(const DialogueSample& sample, const ForwardMode& mode) {
  Encoded enc;
  enc.question_tokens = sample.question;
  enc.question_ids = vocab_.ids(sample.question);
  enc.question = embed_tokens(enc.question_ids);

  // History units padded to a common length; padding rows are masked out of
  // every neighborhood downstream.
  const auto units = build_history_units(sample.caption, sample.turns);
  std::size_t max_len = 1;
  for (const auto& u : units) max_len = std::max(max_len, u.size());
  std::vector<Tensor> encoded_units;
  for (const auto& u : units) {
    std::vector<int> ids = vocab_.ids(u);
    enc.history_lens.push_back(std::max<std::size_t>(ids.size(), 1));
    ids.resize(max_len, Vocabulary::kPad);
    encoded_units.push_back(embed_tokens(ids));
  }

  enc.scores = score_histories(enc.question, encoded_units, enc.history_lens, scorer_);
  Rng* rng = mode.select == SelectMode::kEval && !mode.training ? nullptr : &rng_;
  enc.selection = gumbel_select(enc.scores, encoded_units, enc.history_lens,
                                config_.temperature, mode.select, rng);

  enc.textual = resolve_textual(enc.question, enc.selection.selected,
                                enc.selection.selected_len, coref_txt_, config_.dropout, &rng_,
                                mode.training);
  enc.question_resolved = enc.textual.resolved;

  Tensor video = encode_video(sample.video, video_enc_);
  enc.visual = resolve_visual(video, enc.question_resolved, coref_vis_, config_.dropout, &rng_,
                              mode.training);

  enc.edge_matrix = build_video_graph(sample.video, config_.tau_s, config_.tau_t);
  enc.adjacencies = adjacency_powers(enc.edge_matrix, config_.distances);
  enc.video_reasoned =
      gn_gat(enc.visual.resolved, enc.adjacencies, head_alloc_, stgraph_, config_.gn_residual,
             config_.dropout, &rng_, mode.training, &enc.gn_alphas);
  return enc;
}

// ---------------------------------------------------------------------------
// teacher forcing
// ---------------------------------------------------------------------------

Tensor ScgaModel::teacher_forced_loss(const DialogueSample& sample, const ForwardMode& mode,
                                      TokenStats* stats, Encoded* encoded_out,
                                      DecoderTrace* trace_out) {
  if (sample.answer.empty()) {
    throw std::invalid_argument("teacher_forced_loss: empty target answer");
  }
  Encoded enc = encode(sample, mode);

  // Input: <bos> + answer; target at step j: token j of (answer + <eos>).
  std::vector<int> input_ids{Vocabulary::kBos};
  for (const auto& t : sample.answer) input_ids.push_back(vocab_.id(t));
  std::vector<std::string> targets = sample.answer;
  targets.push_back("<eos>");

  Tensor prefix = embed_tokens(input_ids);
  DecoderTrace trace;
  Tensor z = decoder_forward(prefix, enc.selection.selected, enc.selection.selected_len,
                             enc.question_resolved, enc.video_reasoned, decoder_,
                             config_.dropout, &rng_, mode.training, &trace);

  const std::size_t vocab_size = static_cast<std::size_t>(vocab_.size());
  Tensor total;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    Tensor p = step_scores(slice(z, 0, j, j + 1), enc.question_resolved, output_);
    const auto y = multi_hot_target(targets[j], enc.question_tokens, vocab_);
    Tensor loss_j = step_loss(p, y);
    total = total.defined() ? add(total, loss_j) : loss_j;
    if (stats) {
      stats->steps += 1;
      const std::size_t slot = argmax(p.data());
      const int emitted = slot < vocab_size
                              ? static_cast<int>(slot)
                              : enc.question_ids[slot - vocab_size];
      if (emitted == vocab_.id(targets[j])) stats->correct += 1;
    }
  }
  if (encoded_out) *encoded_out = std::move(enc);
  if (trace_out) *trace_out = std::move(trace);
  return scale(total, 1.0 / static_cast<double>(targets.size()));
}

// ---------------------------------------------------------------------------
// decoding
// ---------------------------------------------------------------------------

Tensor ScgaModel::scores_for_prefix(const std::vector<int>& prefix_ids, const Encoded& enc,
                                    std::size_t step) {
  Tensor prefix = embed_tokens(prefix_ids);
  Tensor z = decoder_forward(prefix, enc.selection.selected, enc.selection.selected_len,
                             enc.question_resolved, enc.video_reasoned, decoder_,
                             /*dropout_rate=*/0.0, nullptr, /*training=*/false);
  return step_scores(slice(z, 0, step, step + 1), enc.question_resolved, output_);
}

Tensor ScgaModel::prefix_step_scores(const Encoded& enc, const std::vector<int>& prefix_ids,
                                     DecoderTrace* trace) {
  Tensor prefix = embed_tokens(prefix_ids);
  Tensor z = decoder_forward(prefix, enc.selection.selected, enc.selection.selected_len,
                             enc.question_resolved, enc.video_reasoned, decoder_,
                             /*dropout_rate=*/0.0, nullptr, /*training=*/false, trace);
  std::vector<Tensor> rows;
  rows.reserve(prefix_ids.size());
  for (std::size_t j = 0; j < prefix_ids.size(); ++j) {
    rows.push_back(step_scores(slice(z, 0, j, j + 1), enc.question_resolved, output_));
  }
  return concat(rows, 0);
}

ScgaModel::DecodeResult ScgaModel::finalize_decode(const std::vector<DecodeStep>& steps,
                                                   double length_penalty) {
  DecodeResult result;
  result.steps = steps;
  double total = 0.0;
  for (const auto& s : steps) {
    total += log_sigmoid(s.logit);
    if (s.token_id != Vocabulary::kEos) {
      result.token_ids.push_back(s.token_id);
      result.tokens.push_back(vocab_.token(s.token_id));
    }
  }
  const double len = static_cast<double>(std::max<std::size_t>(steps.size(), 1));
  result.score = total / std::pow(len, length_penalty);
  return result;
}

ScgaModel::DecodeResult ScgaModel::greedy_decode(const DialogueSample& sample,
                                                 double length_penalty) {
  Encoded enc = encode(sample, ForwardMode::eval());
  const std::size_t vocab_size = static_cast<std::size_t>(vocab_.size());

  std::vector<int> prefix{Vocabulary::kBos};
  std::vector<DecodeStep> steps;
  for (std::size_t step = 0; step < config_.max_decode_len; ++step) {
    Tensor p = scores_for_prefix(prefix, enc, step);
    const std::size_t slot = argmax(p.data());
    DecodeStep ds;
    ds.slot = slot;
    ds.from_pointer = slot >= vocab_size;
    ds.token_id = ds.from_pointer ? enc.question_ids[slot - vocab_size]
                                  : static_cast<int>(slot);
    ds.logit = p.data()[slot];
    steps.push_back(ds);
    if (ds.token_id == Vocabulary::kEos) break;
    prefix.push_back(ds.token_id);
  }
  return finalize_decode(steps, length_penalty);
}

ScgaModel::DecodeResult ScgaModel::beam_decode(const DialogueSample& sample, int beam,
                                               double length_penalty) {
  if (beam < 1) throw ConfigError("beam_decode: beam must be >= 1");
  Encoded enc = encode(sample, ForwardMode::eval());
  const std::size_t vocab_size = static_cast<std::size_t>(vocab_.size());

  struct Hypothesis {
    std::vector<int> prefix{Vocabulary::kBos};
    std::vector<DecodeStep> steps;
    double total = 0.0;  // sum of log-sigmoid slot scores
    bool done = false;
  };
  auto normalized = [length_penalty](const Hypothesis& h) {
    const double len = static_cast<double>(std::max<std::size_t>(h.steps.size(), 1));
    return h.total / std::pow(len, length_penalty);
  };

  std::vector<Hypothesis> live{Hypothesis{}};
  std::vector<Hypothesis> finished;

  for (std::size_t step = 0; step < config_.max_decode_len && !live.empty(); ++step) {
    struct Candidate {
      std::size_t hyp;
      DecodeStep ds;
      double total;
    };
    std::vector<Candidate> candidates;
    for (std::size_t hi = 0; hi < live.size(); ++hi) {
      Tensor p = scores_for_prefix(live[hi].prefix, enc, step);
      const auto& logits = p.data();
      // Dedupe slots that emit the same token, keeping the higher-scoring
      // slot (vocab slot wins exact ties by coming first).
      std::vector<std::pair<int, std::size_t>> best_slot;  // token -> slot
      for (std::size_t slot = 0; slot < logits.size(); ++slot) {
        const int token = slot < vocab_size ? static_cast<int>(slot)
                                            : enc.question_ids[slot - vocab_size];
        auto it = std::find_if(best_slot.begin(), best_slot.end(),
                               [token](const auto& e) { return e.first == token; });
        if (it == best_slot.end()) {
          best_slot.emplace_back(token, slot);
        } else if (logits[slot] > logits[it->second]) {
          it->second = slot;
        }
      }
      for (const auto& [token, slot] : best_slot) {
        Candidate c;
        c.hyp = hi;
        c.ds = DecodeStep{token, slot >= vocab_size, slot, logits[slot]};
        c.total = live[hi].total + log_sigmoid(logits[slot]);
        candidates.push_back(c);
      }
    }
    const double inv_len = 1.0 / std::pow(static_cast<double>(step + 1), length_penalty);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [inv_len](const Candidate& a, const Candidate& b) {
                       const double sa = a.total * inv_len, sb = b.total * inv_len;
                       if (sa != sb) return sa > sb;
                       if (a.hyp != b.hyp) return a.hyp < b.hyp;
                       return a.ds.slot < b.ds.slot;
                     });
    if (candidates.size() > static_cast<std::size_t>(beam)) {
      candidates.resize(static_cast<std::size_t>(beam));
    }

    std::vector<Hypothesis> next;
    for (const auto& c : candidates) {
      Hypothesis h = live[c.hyp];
      h.steps.push_back(c.ds);
      h.total = c.total;
      if (c.ds.token_id == Vocabulary::kEos || step + 1 == config_.max_decode_len) {
        h.done = true;
        finished.push_back(std::move(h));
      } else {
        h.prefix.push_back(c.ds.token_id);
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
  }
  for (auto& h : live) finished.push_back(std::move(h));

  if (finished.empty()) return DecodeResult{};
  std::size_t best = 0;
  for (std::size_t i = 1; i < finished.size(); ++i) {
    if (normalized(finished[i]) > normalized(finished[best])) best = i;
  }
  return finalize_decode(finished[best].steps, length_penalty);
}

}  // namespace scga
