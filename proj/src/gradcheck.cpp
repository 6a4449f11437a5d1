#include "scga/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace scga {

GradCheckReport gradcheck(const std::function<Tensor()>& forward,
                          const std::vector<Tensor>& leaves, double h,
                          std::size_t max_coords_per_leaf, Rng* coord_rng) {
  for (const auto& leaf : leaves) {
    if (!leaf.requires_grad()) {
      throw std::invalid_argument("gradcheck: every leaf must require gradients");
    }
  }
  if (max_coords_per_leaf > 0 && coord_rng == nullptr) {
    throw std::invalid_argument("gradcheck: coordinate subsampling needs an rng");
  }

  // Analytic pass.
  std::vector<Tensor> mut = leaves;
  for (auto& leaf : mut) leaf.zero_grad();
  Tensor loss = forward();
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(mut.size());
  for (auto& leaf : mut) {
    if (leaf.has_grad()) {
      analytic.push_back(leaf.grad_view());
    } else {
      analytic.emplace_back(leaf.size(), 0.0);  // leaf unreachable from loss
    }
  }

  GradCheckReport report;
  for (std::size_t t = 0; t < mut.size(); ++t) {
    auto& data = mut[t].data();
    std::vector<std::size_t> coords(data.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (max_coords_per_leaf > 0 && coords.size() > max_coords_per_leaf) {
      coord_rng->shuffle(coords);
      coords.resize(max_coords_per_leaf);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const double saved = data[i];
      data[i] = saved + h;
      const double fp = forward().scalar_value();
      data[i] = saved - h;
      const double fm = forward().scalar_value();
      data[i] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[t][i];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-3});
      ++report.coords_checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = "leaf#" + std::to_string(t) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace scga
