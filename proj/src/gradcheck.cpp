// SPDX-License-Identifier: Apache-2.0
#include "mogen/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mogen {

GradCheckResult grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                           const std::vector<Tensor>& inputs, double eps, double tol,
                           int64_t max_coords, RngStream* rng) {
  GradCheckResult res;

  Tape tape;
  GradMap gm;
  {
    TapeScope scope(tape);
    Tensor loss = fn(inputs);
    gm = backward(loss, tape);
  }

  for (size_t k = 0; k < inputs.size(); ++k) {
    const Tensor& x = inputs[k];
    if (!x.requires_grad()) continue;
    const int64_t n = x.numel();
    std::vector<int64_t> coords;
    if (max_coords > 0 && n > max_coords) {
      if (!rng) fail_value("grad_check: rng required for coordinate subsampling");
      for (int64_t c = 0; c < max_coords; ++c) coords.push_back(rng->uniform_int(0, n));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    } else {
      coords.resize(static_cast<size_t>(n));
      for (int64_t c = 0; c < n; ++c) coords[static_cast<size_t>(c)] = c;
    }
    const auto* gslot = gm.find(x.node());
    // No analytic gradient slot means the coordinate gradients are all zero.
    double* data = const_cast<double*>(x.data());
    for (int64_t c : coords) {
      const double saved = data[c];
      data[c] = saved + eps;
      const double fp = fn(inputs).item();
      data[c] = saved - eps;
      const double fm = fn(inputs).item();
      data[c] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double analytic = gslot ? (*gslot)[static_cast<size_t>(c)] : 0.0;
      const double denom = std::max({1.0, std::fabs(numeric), std::fabs(analytic)});
      const double err = std::fabs(numeric - analytic) / denom;
      res.coords_checked += 1;
      if (err > res.max_err) {
        res.max_err = err;
        res.worst = strcat_all("input ", k, " coord ", c, ": analytic=", analytic,
                               " numeric=", numeric);
      }
    }
  }
  res.ok = res.max_err <= tol;
  return res;
}

}  // namespace mogen
