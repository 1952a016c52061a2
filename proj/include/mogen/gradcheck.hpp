// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mogen/rng.hpp"
#include "mogen/tensor.hpp"

namespace mogen {

struct GradCheckResult {
  bool ok = true;
  int64_t coords_checked = 0;
  double max_err = 0.0;       // worst |analytic - numeric| / max(1, |a|, |n|)
  std::string worst;          // description of the worst coordinate
};

// Compares reverse-mode gradients of `fn` (which must map the given inputs
// to a scalar, deterministically) against central finite differences
// (f(x+eps) - f(x-eps)) / (2 eps) on every input marked requires_grad.
// When an input has more than `max_coords` elements, a random subset of
// coordinates is probed (seeded via `rng`); pass max_coords <= 0 to probe
// everything. Runs in 64-bit precision only.
GradCheckResult grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                           const std::vector<Tensor>& inputs, double eps = 1e-5,
                           double tol = 1e-4, int64_t max_coords = -1, RngStream* rng = nullptr);

}  // namespace mogen
