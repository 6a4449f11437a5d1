#pragma once

#include <cstddef>
#include <vector>

namespace scga {

// Axis-aligned box in relative coordinates: [x, y] is the top-left corner,
// [w, h] the extent, all within the unit square.
struct Box {
  double x = 0, y = 0, w = 0, h = 0;
  double cx() const { return x + w / 2.0; }
  double cy() const { return y + h / 2.0; }
};

// T x O grid of detected objects: appearance vectors, boxes, and class
// labels. Node index convention is frame-major: node = t * O + o.
struct VideoObjects {
  std::size_t frames = 0;       // T
  std::size_t per_frame = 0;    // O
  std::size_t feat_dim = 0;     // d_v
  std::vector<double> appearance;  // [T*O x d_v], row-major
  std::vector<Box> boxes;          // T*O
  std::vector<int> labels;         // T*O

  std::size_t node_count() const { return frames * per_frame; }
  const double* feat(std::size_t t, std::size_t o) const {
    return &appearance[(t * per_frame + o) * feat_dim];
  }
  const Box& box(std::size_t t, std::size_t o) const { return boxes[t * per_frame + o]; }
  int label(std::size_t t, std::size_t o) const { return labels[t * per_frame + o]; }

  // Enforces the coordinate invariants (0 <= x,y,w,h and x+w,y+h <= 1+1e-6)
  // and finite appearance values; throws DataError otherwise.
  void validate() const;
};

}  // namespace scga
