#pragma once

#include <cmath>
#include <vector>

#include "egoscene/layers.hpp"

namespace egoscene::nn {

// Bias-corrected Adam over a fixed parameter list. m/v mirror the parameter
// shapes; the step counter is shared.
template <typename T>
struct AdamState {
  T lr = T(1e-3);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
  long long t = 0;
  std::vector<Tensor<T>> m, v;

  void init(const std::vector<ParamRef<T>>& params) {
    t = 0;
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.emplace_back(p.value->shape());
      v.emplace_back(p.value->shape());
    }
  }
};

template <typename T>
void adam_step(std::vector<ParamRef<T>>& params, AdamState<T>& state) {
  if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: state not initialized for this parameter list");
  }
  state.t += 1;
  const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(state.beta1),
                                               static_cast<double>(state.t)));
  const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(state.beta2),
                                               static_cast<double>(state.t)));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = *params[i].value;
    const Tensor<T>& g = *params[i].grad;
    Tensor<T>& m = state.m[i];
    Tensor<T>& v = state.v[i];
    if (!p.same_shape(g) || !p.same_shape(m)) {
      throw ShapeError("adam_step: shape mismatch for " + params[i].name);
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (T(1) - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (T(1) - state.beta2) * g[j] * g[j];
      const T mhat = m[j] / bc1;
      const T vhat = v[j] / bc2;
      p[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace egoscene::nn
