// SPDX-License-Identifier: Apache-2.0
#include "mogen/optim.hpp"

#include <cmath>

namespace mogen {

double global_grad_norm(const ParamMap& params, const GradMap& grads) {
  double sq = 0.0;
  for (const auto& [name, p] : params) {
    const auto* g = grads.find(p.node());
    if (!g) continue;
    for (double x : *g) sq += x * x;
  }
  return std::sqrt(sq);
}

double clip_global_norm(const ParamMap& params, GradMap& grads, double max_norm) {
  const double norm = global_grad_norm(params, grads);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (const auto& [name, p] : params) {
      auto it = grads.slots.find(p.node());
      if (it == grads.slots.end()) continue;
      for (double& x : it->second) x *= s;
    }
  }
  return norm;
}

void adamw_step(ParamMap& params, const GradMap& grads, OptimizerState& state) {
  // Validate first: a rejected step must leave parameters untouched.
  for (const auto& [name, p] : params) {
    const auto* g = grads.find(p.node());
    if (!g) continue;
    if (static_cast<int64_t>(g->size()) != p.numel()) {
      fail_shape("adamw_step: gradient size ", g->size(), " != parameter '", name, "' size ",
                 p.numel());
    }
    for (double x : *g) {
      if (!std::isfinite(x)) fail_numeric("adamw_step: non-finite gradient for '", name, "'");
    }
  }
  const AdamWConfig& c = state.cfg;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (auto& [name, p] : params) {
    auto& m = state.m[name];
    auto& v = state.v[name];
    const size_t n = static_cast<size_t>(p.numel());
    if (m.size() != n) m.assign(n, 0.0);
    if (v.size() != n) v.assign(n, 0.0);
    const auto* gp = grads.find(p.node());
    double* w = p.data();
    for (size_t i = 0; i < n; ++i) {
      const double g = gp ? (*gp)[i] : 0.0;
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      w[i] = w[i] * (1.0 - c.lr * c.weight_decay) - c.lr * mh / (std::sqrt(vh) + c.eps);
    }
  }
}

void merge_grads(GradMap& into, const GradMap& from) {
  for (const auto& [node, g] : from.slots) {
    auto& dst = into.at_or_create(node, static_cast<int64_t>(g.size()));
    for (size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  }
}

}  // namespace mogen
