#include "scga/stgraph.hpp"

#include <cmath>

#include "scga/errors.hpp"

namespace scga {

BoolMat spatial_edges(const std::vector<Box>& boxes, double tau_s) {
  const std::size_t o = boxes.size();
  BoolMat e(o, o);
  for (std::size_t i = 0; i < o; ++i) {
    for (std::size_t j = 0; j < o; ++j) {
      const double dx = std::abs(boxes[i].cx() - boxes[j].cx());
      const double dy = std::abs(boxes[i].cy() - boxes[j].cy());
      if (std::max(dx, dy) < tau_s) e.set(i, j);
    }
  }
  e.set_diagonal();
  return e;
}

BoolMat temporal_edges(const std::vector<Box>& boxes_t, const std::vector<Box>& boxes_next,
                       const std::vector<int>& labels_t, const std::vector<int>& labels_next,
                       double tau_t) {
  if (boxes_t.size() != labels_t.size() || boxes_next.size() != labels_next.size()) {
    throw std::invalid_argument("temporal_edges: box/label count mismatch");
  }
  BoolMat e(boxes_t.size(), boxes_next.size());
  for (std::size_t i = 0; i < boxes_t.size(); ++i) {
    for (std::size_t j = 0; j < boxes_next.size(); ++j) {
      if (labels_t[i] != labels_next[j]) continue;
      const double dx = std::abs(boxes_t[i].cx() - boxes_next[j].cx());
      const double dy = std::abs(boxes_t[i].cy() - boxes_next[j].cy());
      if (std::max(dx, dy) < tau_t) e.set(i, j);
    }
  }
  return e;
}

BoolMat assemble_edge_matrix(const std::vector<BoolMat>& spatial,
                             const std::vector<BoolMat>& temporal) {
  const std::size_t frames = spatial.size();
  if (frames == 0) throw std::invalid_argument("assemble_edge_matrix: no frames");
  if (temporal.size() + 1 != frames) {
    throw std::invalid_argument("assemble_edge_matrix: need T-1 temporal blocks for T frames");
  }
  const std::size_t o = spatial[0].rows;
  for (const auto& s : spatial) {
    if (s.rows != o || s.cols != o) {
      throw std::invalid_argument("assemble_edge_matrix: uneven spatial block sizes");
    }
  }
  const std::size_t n = frames * o;
  BoolMat est(n, n);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < o; ++i)
      for (std::size_t j = 0; j < o; ++j)
        if (spatial[t].get(i, j)) est.set(t * o + i, t * o + j);
  }
  for (std::size_t t = 0; t + 1 < frames; ++t) {
    for (std::size_t i = 0; i < o; ++i)
      for (std::size_t j = 0; j < o; ++j)
        if (temporal[t].get(i, j)) {
          est.set(t * o + i, (t + 1) * o + j);
          est.set((t + 1) * o + j, t * o + i);  // sub-diagonal transpose block
        }
  }
  return est;
}

BoolMat build_video_graph(const VideoObjects& video, double tau_s, double tau_t) {
  std::vector<BoolMat> spatial, temporal;
  spatial.reserve(video.frames);
  for (std::size_t t = 0; t < video.frames; ++t) {
    std::vector<Box> frame_boxes(video.boxes.begin() + static_cast<long>(t * video.per_frame),
                                 video.boxes.begin() +
                                     static_cast<long>((t + 1) * video.per_frame));
    spatial.push_back(spatial_edges(frame_boxes, tau_s));
  }
  for (std::size_t t = 0; t + 1 < video.frames; ++t) {
    std::vector<Box> a(video.boxes.begin() + static_cast<long>(t * video.per_frame),
                       video.boxes.begin() + static_cast<long>((t + 1) * video.per_frame));
    std::vector<Box> b(video.boxes.begin() + static_cast<long>((t + 1) * video.per_frame),
                       video.boxes.begin() + static_cast<long>((t + 2) * video.per_frame));
    std::vector<int> la(video.labels.begin() + static_cast<long>(t * video.per_frame),
                        video.labels.begin() + static_cast<long>((t + 1) * video.per_frame));
    std::vector<int> lb(video.labels.begin() + static_cast<long>((t + 1) * video.per_frame),
                        video.labels.begin() + static_cast<long>((t + 2) * video.per_frame));
    temporal.push_back(temporal_edges(a, b, la, lb, tau_t));
  }
  return assemble_edge_matrix(spatial, temporal);
}

std::vector<BoolMat> adjacency_powers(const BoolMat& edges, const std::vector<int>& distances) {
  if (edges.rows != edges.cols) {
    throw std::invalid_argument("adjacency_powers: edge matrix must be square");
  }
  for (std::size_t i = 0; i < edges.rows; ++i) {
    if (!edges.get(i, i)) {
      throw std::invalid_argument("adjacency_powers: edge matrix needs a unit diagonal");
    }
  }
  if (distances.empty()) throw std::invalid_argument("adjacency_powers: no distances");
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (distances[i] < 1 || (i > 0 && distances[i] <= distances[i - 1])) {
      throw std::invalid_argument("adjacency_powers: distances must be positive and increasing");
    }
  }
  std::vector<BoolMat> out;
  out.reserve(distances.size());
  BoolMat power = edges;  // E^1
  int current = 1;
  for (int target : distances) {
    while (current < target) {
      power = bool_multiply(power, edges);
      ++current;
    }
    out.push_back(power);
  }
  return out;
}

std::vector<int> head_allocation(const std::vector<int>& distances, int total_heads) {
  if (distances.empty() || total_heads < static_cast<int>(distances.size())) {
    throw ConfigError("head_allocation: need at least one head per distance (" +
                      std::to_string(distances.size()) + " distances, " +
                      std::to_string(total_heads) + " heads)");
  }
  if (distances == std::vector<int>{1, 2, 3, 4} && total_heads == 8) return {1, 1, 2, 4};
  std::vector<int> alloc(distances.size(), 1);
  alloc.back() += total_heads - static_cast<int>(distances.size());
  return alloc;
}

Tensor gn_gat(const Tensor& nodes, const std::vector<BoolMat>& adjacencies,
              const std::vector<int>& heads_per_distance, const GatParams& params,
              bool residual, double dropout_rate, Rng* rng, bool training,
              std::vector<Tensor>* alphas_out) {
  if (adjacencies.size() != heads_per_distance.size()) {
    throw ConfigError("gn_gat: " + std::to_string(adjacencies.size()) + " adjacencies but " +
                      std::to_string(heads_per_distance.size()) + " head counts");
  }
  std::size_t total = 0;
  for (int h : heads_per_distance) {
    if (h < 1) throw ConfigError("gn_gat: head counts must be positive");
    total += static_cast<std::size_t>(h);
  }
  if (total != params.heads.size()) {
    throw ConfigError("gn_gat: head counts sum to " + std::to_string(total) + " but " +
                      std::to_string(params.heads.size()) + " heads are parameterized");
  }
  std::vector<BoolMat> masks;
  masks.reserve(total);
  for (std::size_t d = 0; d < adjacencies.size(); ++d) {
    for (int h = 0; h < heads_per_distance[d]; ++h) masks.push_back(adjacencies[d]);
  }
  Tensor updated =
      multi_head_gat(nodes, masks, params, dropout_rate, rng, training, alphas_out);
  return residual ? add(updated, nodes) : updated;
}

}  // namespace scga
