#include "scga/encoders.hpp"

#include <cmath>

#include "scga/errors.hpp"

namespace scga {

double positional_encoding_ref(std::size_t pos, std::size_t channel, std::size_t d) {
  const std::size_t pair = channel / 2;
  const double exponent = 2.0 * static_cast<double>(pair) / static_cast<double>(d);
  const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
  return channel % 2 == 0 ? std::sin(angle) : std::cos(angle);
}

Tensor positional_encoding_table(std::size_t max_pos, std::size_t d) {
  std::vector<double> data(max_pos * d);
  for (std::size_t pos = 0; pos < max_pos; ++pos)
    for (std::size_t c = 0; c < d; ++c) data[pos * d + c] = positional_encoding_ref(pos, c, d);
  return Tensor::constant({max_pos, d}, std::move(data));
}

Tensor encode_text(const std::vector<int>& token_ids, const TextEncoderParams& enc) {
  if (token_ids.empty()) {
    throw std::invalid_argument("encode_text: empty token sequence");
  }
  if (token_ids.size() > enc.pe.rows()) {
    throw std::invalid_argument("encode_text: sequence length " +
                                std::to_string(token_ids.size()) +
                                " exceeds positional table rows " + std::to_string(enc.pe.rows()));
  }
  Tensor emb = embedding_rows(enc.embedding->tensor, token_ids);
  Tensor pe = slice(enc.pe, 0, 0, token_ids.size());
  return layer_norm(add(emb, pe), enc.ln_gain->tensor, enc.ln_bias->tensor);
}

Tensor encode_video(const VideoObjects& video, const VideoEncoderParams& enc) {
  video.validate();
  Tensor feats = Tensor::constant({video.node_count(), video.feat_dim},
                                  std::vector<double>(video.appearance));
  Tensor projected = add_rowvec(matmul(feats, enc.proj_w->tensor), enc.proj_b->tensor);
  return layer_norm(projected, enc.ln_gain->tensor, enc.ln_bias->tensor);
}

std::vector<std::vector<std::string>> build_history_units(
    const std::vector<std::string>& caption_tokens,
    const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& turns) {
  std::vector<std::vector<std::string>> units;
  units.reserve(turns.size() + 1);
  units.push_back(caption_tokens);
  for (const auto& [question, answer] : turns) {
    std::vector<std::string> unit = question;
    unit.insert(unit.end(), answer.begin(), answer.end());
    units.push_back(std::move(unit));
  }
  return units;
}

void VideoObjects::validate() const {
  if (appearance.size() != node_count() * feat_dim || boxes.size() != node_count() ||
      labels.size() != node_count()) {
    throw DataError("VideoObjects: buffer sizes inconsistent with T=" + std::to_string(frames) +
                    " O=" + std::to_string(per_frame) + " d_v=" + std::to_string(feat_dim));
  }
  for (const auto& b : boxes) {
    if (b.x < 0 || b.y < 0 || b.w < 0 || b.h < 0 || b.x + b.w > 1.0 + 1e-6 ||
        b.y + b.h > 1.0 + 1e-6) {
      throw DataError("VideoObjects: box [" + std::to_string(b.x) + ", " + std::to_string(b.y) +
                      ", " + std::to_string(b.w) + ", " + std::to_string(b.h) +
                      "] outside the unit square");
    }
  }
  for (double v : appearance) {
    if (!std::isfinite(v)) throw DataError("VideoObjects: non-finite appearance value");
  }
}

}  // namespace scga
