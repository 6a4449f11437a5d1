#pragma once

#include <functional>
#include <string>
#include <vector>

#include "scga/rng.hpp"
#include "scga/tensor.hpp"

namespace scga {

// Central finite-difference oracle for reverse-mode gradients. The forward
// closure must rebuild the graph from the given leaves on every call and be
// deterministic (freeze any noise before calling). Relative error per
// coordinate is |analytic - numeric| / max(|analytic|, |numeric|, 1e-3).
struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
  std::string worst;  // "leaf#k[i]" of the worst coordinate
};

// max_coords_per_leaf == 0 checks every coordinate. With a nonzero budget the
// coordinates are subsampled with coord_rng (required in that case).
GradCheckReport gradcheck(const std::function<Tensor()>& forward,
                          const std::vector<Tensor>& leaves, double h = 1e-5,
                          std::size_t max_coords_per_leaf = 0, Rng* coord_rng = nullptr);

}  // namespace scga
