#pragma once

#include <vector>

#include "scga/coref.hpp"
#include "scga/graph.hpp"
#include "scga/tensor.hpp"
#include "scga/video.hpp"

namespace scga {

// Spatial edges within one frame: E[i,j] = 1 iff the Chebyshev distance
// between box centers max(|dx|, |dy|) is below tau_s. The diagonal is always
// set (distance zero) and additionally enforced explicitly so the boolean
// powers have reachability semantics.
BoolMat spatial_edges(const std::vector<Box>& boxes, double tau_s = 0.4);

// Temporal edges between adjacent frames: same label AND center distance
// below tau_t.
BoolMat temporal_edges(const std::vector<Box>& boxes_t, const std::vector<Box>& boxes_next,
                       const std::vector<int>& labels_t, const std::vector<int>& labels_next,
                       double tau_t = 0.2);

// Block-tridiagonal assembly over frame-major node ordering: diagonal blocks
// are the spatial matrices, super-diagonal blocks the temporal matrices, and
// sub-diagonal blocks their transposes.
BoolMat assemble_edge_matrix(const std::vector<BoolMat>& spatial,
                             const std::vector<BoolMat>& temporal);

// Builds the full edge matrix for a video straight from boxes and labels.
BoolMat build_video_graph(const VideoObjects& video, double tau_s, double tau_t);

// A_n = Bool(E^n) for each requested distance; with the unit diagonal this is
// <= n-hop reachability. Distances must be positive and strictly increasing.
std::vector<BoolMat> adjacency_powers(const BoolMat& edges,
                                      const std::vector<int>& distances = {1, 2, 3, 4});

// Heads per distance. The default configuration {1,2,3,4} with K=8 uses the
// 1/1/2/4 split (more heads on larger, denser neighborhoods); any other
// shape gets one head per distance with the surplus on the largest distance.
std::vector<int> head_allocation(const std::vector<int>& distances, int total_heads);

// Gradually-neighboring graph attention: one multi-head GAT pass where each
// head's neighborhood is the adjacency matrix of its assigned distance.
// heads_per_distance must sum to the number of heads in `params`.
Tensor gn_gat(const Tensor& nodes, const std::vector<BoolMat>& adjacencies,
              const std::vector<int>& heads_per_distance, const GatParams& params,
              bool residual, double dropout_rate, Rng* rng, bool training,
              std::vector<Tensor>* alphas_out = nullptr);

}  // namespace scga
