#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "egoscene/rng.hpp"
#include "egoscene/tensor.hpp"

namespace egoscene::nn {

// Central finite differences against analytic gradients.
//
// `loss` must recompute the full forward pass from the current contents of
// the checked tensors and be deterministic (re-seed any rng it uses).
// `analytic[i]` holds d loss / d tensors[i], computed once by the caller
// before perturbation. Run at 64-bit precision; finite differences are
// unreliable at 32-bit.
inline double grad_check_max_rel_error(
    const std::function<double()>& loss,
    const std::vector<Tensor<double>*>& tensors,
    const std::vector<Tensor<double>>& analytic, double eps = 1e-5) {
  double worst = 0.0;
  for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
    Tensor<double>& t = *tensors[ti];
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + eps;
      const double up = loss();
      t[i] = saved - eps;
      const double down = loss();
      t[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[ti][i];
      const double rel = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

// Same comparison over a random element sample per tensor; full models have
// too many parameters to perturb exhaustively.
inline double grad_check_sampled(const std::function<double()>& loss,
                                 const std::vector<Tensor<double>*>& tensors,
                                 const std::vector<Tensor<double>>& analytic,
                                 std::size_t max_per_tensor, Rng& rng,
                                 double eps = 1e-5) {
  double worst = 0.0;
  for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
    Tensor<double>& t = *tensors[ti];
    std::vector<std::size_t> idx;
    if (t.size() <= max_per_tensor) {
      for (std::size_t i = 0; i < t.size(); ++i) idx.push_back(i);
    } else {
      for (std::size_t i = 0; i < max_per_tensor; ++i) {
        idx.push_back(static_cast<std::size_t>(rng.uniform_int(t.size())));
      }
    }
    for (std::size_t i : idx) {
      const double saved = t[i];
      t[i] = saved + eps;
      const double up = loss();
      t[i] = saved - eps;
      const double down = loss();
      t[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[ti][i];
      const double rel = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace egoscene::nn
