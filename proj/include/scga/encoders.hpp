#pragma once

#include <string>
#include <vector>

#include "scga/optim.hpp"
#include "scga/tensor.hpp"
#include "scga/video.hpp"
#include "scga/vocab.hpp"

namespace scga {

// Fixed sinusoidal positional-encoding table:
//   PE(pos, 2i)   = sin(pos / 10000^(2i/d))
//   PE(pos, 2i+1) = cos(pos / 10000^(2i/d))
Tensor positional_encoding_table(std::size_t max_pos, std::size_t d);
double positional_encoding_ref(std::size_t pos, std::size_t channel, std::size_t d);

struct TextEncoderParams {
  Parameter* embedding = nullptr;  // [|V| x d], shared across question, history, decoder input
  Parameter* ln_gain = nullptr;    // [d]
  Parameter* ln_bias = nullptr;    // [d]
  Tensor pe;                       // constant [max_pos x d]
};

// LN(embedding(seq) + PE(seq)) -> [N x d]. Empty sequences are a contract
// violation.
Tensor encode_text(const std::vector<int>& token_ids, const TextEncoderParams& enc);

struct VideoEncoderParams {
  Parameter* proj_w = nullptr;  // [d_v x d]
  Parameter* proj_b = nullptr;  // [d]
  Parameter* ln_gain = nullptr;
  Parameter* ln_bias = nullptr;
};

// Per-object LN(W * appearance + b) -> [N_v x d], rows frame-major.
Tensor encode_video(const VideoObjects& video, const VideoEncoderParams& enc);

// Dialogue history units for round r: unit 0 is the caption, unit i >= 1 is
// question_i followed by answer_i. `turns` holds the r-1 prior turns.
std::vector<std::vector<std::string>> build_history_units(
    const std::vector<std::string>& caption_tokens,
    const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& turns);

}  // namespace scga
