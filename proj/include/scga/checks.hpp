#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scga {

// Finite-difference verification suites shared by the unit tests, the
// acceptance runner, and the `check-grads` CLI command.

struct OpCheck {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t coords = 0;
};

// Checks every differentiable tensor operation on small random inputs for
// one seed. Inputs near activation kinks are nudged away so the central
// difference stays valid.
std::vector<OpCheck> op_gradient_checks(std::uint64_t seed);

// Builds a tiny end-to-end model on one synthetic sample and finite-
// difference-checks the full loss against every parameter tensor
// (subsampled coordinates). History selection runs on the relaxed path and
// dropout is disabled so the loss is differentiable.
OpCheck end_to_end_gradient_check(std::uint64_t seed);

double suite_max_err(const std::vector<OpCheck>& checks);

}  // namespace scga
