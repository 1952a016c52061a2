// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "mogen/tensor.hpp"

namespace mogen {

// Parameters are name-keyed and iterated in name order everywhere, which
// makes optimizer updates independent of construction order.
using ParamMap = std::map<std::string, Tensor>;

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct OptimizerState {
  AdamWConfig cfg;
  int64_t step = 0;
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
};

// L2 norm over all parameter gradients present in `grads` (absent slots
// count as zero).
double global_grad_norm(const ParamMap& params, const GradMap& grads);

// Scales gradients in place so the global norm is at most `max_norm`.
// Returns the pre-clip norm.
double clip_global_norm(const ParamMap& params, GradMap& grads, double max_norm);

// One decoupled-weight-decay Adam step with bias correction:
//   p <- p (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps).
// Validates every gradient before touching any parameter; a non-finite
// gradient rejects the whole step (no partial update) and throws.
void adamw_step(ParamMap& params, const GradMap& grads, OptimizerState& state);

// Sums `from` into `into` (used to aggregate per-sample gradient maps in a
// fixed order).
void merge_grads(GradMap& into, const GradMap& from);

}  // namespace mogen
