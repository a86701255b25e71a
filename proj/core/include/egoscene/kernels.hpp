#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <type_traits>
#include <vector>

#include "egoscene/gemm.hpp"
#include "egoscene/rng.hpp"
#include "egoscene/tensor.hpp"

namespace egoscene::nn {

// calibrate: forward with dropout disabled while batch norm re-estimates
// its running statistics from the batch; used to align eval-mode stats
// with eval-mode activation distributions after dropout training.
enum class Mode { train, eval, calibrate };

// ---------------------------------------------------------------------------
// valid (unpadded) dilated 1-d convolution
// x [B, L, Cin], w [Cout, Cin, k], bias [Cout] -> y [B, L-(k-1)*d, Cout]

inline std::size_t conv1d_output_len(std::size_t L, std::size_t k,
                                     std::size_t dilation) {
  const std::size_t context = (k - 1) * dilation;
  if (L <= context) {
    throw ShapeError("conv1d: input length " + std::to_string(L) +
                     " too short for kernel " + std::to_string(k) +
                     " dilation " + std::to_string(dilation));
  }
  return L - context;
}

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& w,
                         const Tensor<T>& bias, std::size_t dilation) {
  if (x.rank() != 3 || w.rank() != 3) {
    throw ShapeError("conv1d: want x [B,L,Cin], w [Cout,Cin,k]");
  }
  const std::size_t B = x.dim(0), L = x.dim(1), Cin = x.dim(2);
  const std::size_t Cout = w.dim(0), k = w.dim(2);
  if (w.dim(1) != Cin || bias.size() != Cout) {
    throw ShapeError("conv1d: weight/bias shape mismatch with input " +
                     x.shape_str());
  }
  const std::size_t Lo = conv1d_output_len(L, k, dilation);

  // per-tap packed weights [Cin, Cout] so the inner gemm reads contiguously
  std::vector<T> wp(k * Cin * Cout);
  for (std::size_t o = 0; o < Cout; ++o) {
    for (std::size_t c = 0; c < Cin; ++c) {
      for (std::size_t j = 0; j < k; ++j) {
        wp[(j * Cin + c) * Cout + o] = w(o, c, j);
      }
    }
  }

  Tensor<T> y({B, Lo, Cout});
  for (std::size_t b = 0; b < B; ++b) {
    T* yb = y.data() + b * Lo * Cout;
    for (std::size_t t = 0; t < Lo; ++t) {
      for (std::size_t o = 0; o < Cout; ++o) yb[t * Cout + o] = bias[o];
    }
    const T* xb = x.data() + b * L * Cin;
    for (std::size_t j = 0; j < k; ++j) {
      gemm_nn(Lo, Cout, Cin, xb + j * dilation * Cin, Cin,
              wp.data() + j * Cin * Cout, Cout, yb, Cout);
    }
  }
  return y;
}

template <typename T>
void conv1d_backward(const Tensor<T>& gy, const Tensor<T>& x,
                     const Tensor<T>& w, std::size_t dilation, Tensor<T>& gx,
                     Tensor<T>& gw, Tensor<T>& gb) {
  const std::size_t B = x.dim(0), L = x.dim(1), Cin = x.dim(2);
  const std::size_t Cout = w.dim(0), k = w.dim(2);
  const std::size_t Lo = conv1d_output_len(L, k, dilation);
  if (gy.shape() != std::vector<std::size_t>{B, Lo, Cout}) {
    throw ShapeError("conv1d_backward: grad shape " + gy.shape_str() +
                     " does not match forward output");
  }
  gx = Tensor<T>({B, L, Cin});
  gw = Tensor<T>({Cout, Cin, k});
  gb = Tensor<T>({Cout});

  // bias gradient: per-channel sum of gy
  for (std::size_t b = 0; b < B; ++b) {
    const T* g = gy.data() + b * Lo * Cout;
    for (std::size_t t = 0; t < Lo; ++t) {
      for (std::size_t o = 0; o < Cout; ++o) gb[o] += g[t * Cout + o];
    }
  }

  // packed tap slices [Cout, Cin] of w for the input gradient
  std::vector<T> wt(k * Cout * Cin);
  for (std::size_t o = 0; o < Cout; ++o) {
    for (std::size_t c = 0; c < Cin; ++c) {
      for (std::size_t j = 0; j < k; ++j) {
        wt[(j * Cout + o) * Cin + c] = w(o, c, j);
      }
    }
  }
  for (std::size_t b = 0; b < B; ++b) {
    const T* gyb = gy.data() + b * Lo * Cout;
    T* gxb = gx.data() + b * L * Cin;
    for (std::size_t j = 0; j < k; ++j) {
      gemm_nn(Lo, Cin, Cout, gyb, Cout, wt.data() + j * Cout * Cin, Cin,
              gxb + j * dilation * Cin, Cin);
    }
  }

  // weight gradient, accumulated in fixed (b, j) order
  std::vector<T> gwp(k * Cout * Cin, T{});
  for (std::size_t b = 0; b < B; ++b) {
    const T* gyb = gy.data() + b * Lo * Cout;
    const T* xb = x.data() + b * L * Cin;
    for (std::size_t j = 0; j < k; ++j) {
      gemm_tn(Cout, Cin, Lo, gyb, Cout, xb + j * dilation * Cin, Cin,
              gwp.data() + j * Cout * Cin, Cin);
    }
  }
  for (std::size_t o = 0; o < Cout; ++o) {
    for (std::size_t c = 0; c < Cin; ++c) {
      for (std::size_t j = 0; j < k; ++j) {
        gw(o, c, j) = gwp[(j * Cout + o) * Cin + c];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// affine transform  y = x W^T + b;  x [B, in], w [out, in]

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& w,
                         const Tensor<T>& bias) {
  if (x.rank() != 2 || w.rank() != 2) {
    throw ShapeError("linear: want x [B,in], w [out,in]");
  }
  const std::size_t B = x.dim(0), in = x.dim(1);
  const std::size_t out = w.dim(0);
  if (w.dim(1) != in || bias.size() != out) {
    throw ShapeError("linear: weight " + w.shape_str() +
                     " does not accept input " + x.shape_str());
  }
  std::vector<T> wT(in * out);
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t i = 0; i < in; ++i) wT[i * out + o] = w(o, i);
  }
  Tensor<T> y({B, out});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < out; ++o) y(b, o) = bias[o];
  }
  gemm_nn(B, out, in, x.data(), in, wT.data(), out, y.data(), out);
  return y;
}

template <typename T>
void linear_backward(const Tensor<T>& gy, const Tensor<T>& x,
                     const Tensor<T>& w, Tensor<T>& gx, Tensor<T>& gw,
                     Tensor<T>& gb) {
  const std::size_t B = x.dim(0), in = x.dim(1), out = w.dim(0);
  if (gy.shape() != std::vector<std::size_t>{B, out}) {
    throw ShapeError("linear_backward: grad shape " + gy.shape_str() +
                     " does not match output [B,out]");
  }
  gx = Tensor<T>({B, in});
  gw = Tensor<T>({out, in});
  gb = Tensor<T>({out});
  gemm_nn(B, in, out, gy.data(), out, w.data(), in, gx.data(), in);
  gemm_tn(out, in, B, gy.data(), out, x.data(), in, gw.data(), in);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < out; ++o) gb[o] += gy(b, o);
  }
}

// ---------------------------------------------------------------------------
// rectifier

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{} ? x[i] : T{};
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& gy, const Tensor<T>& x) {
  Tensor<T> gx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) gx[i] = x[i] > T{} ? gy[i] : T{};
  return gx;
}

// ---------------------------------------------------------------------------
// temporal mean pooling  [B, L, D] -> [B, D]

template <typename T>
Tensor<T> temporal_mean(const Tensor<T>& x) {
  if (x.rank() != 3 || x.dim(1) == 0) {
    throw ShapeError("temporal_mean: want [B, L>=1, D], got " + x.shape_str());
  }
  const std::size_t B = x.dim(0), L = x.dim(1), D = x.dim(2);
  Tensor<T> y({B, D});
  const T inv = T(1) / static_cast<T>(L);
  for (std::size_t b = 0; b < B; ++b) {
    const T* xb = x.data() + b * L * D;
    T* yb = y.data() + b * D;
    for (std::size_t t = 0; t < L; ++t) {
      for (std::size_t d = 0; d < D; ++d) yb[d] += xb[t * D + d];
    }
    for (std::size_t d = 0; d < D; ++d) yb[d] *= inv;
  }
  return y;
}

template <typename T>
Tensor<T> temporal_mean_backward(const Tensor<T>& gy, std::size_t L) {
  const std::size_t B = gy.dim(0), D = gy.dim(1);
  Tensor<T> gx({B, L, D});
  const T inv = T(1) / static_cast<T>(L);
  for (std::size_t b = 0; b < B; ++b) {
    const T* g = gy.data() + b * D;
    T* gxb = gx.data() + b * L * D;
    for (std::size_t t = 0; t < L; ++t) {
      for (std::size_t d = 0; d < D; ++d) gxb[t * D + d] = g[d] * inv;
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// softmax cross-entropy with max-subtraction stabilization

// Batched mean loss over rows; grad (if non-null) is d(mean loss)/d(logits).
template <typename T>
T softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                        Tensor<std::type_identity_t<T>>* grad) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw ShapeError("softmax_cross_entropy: logits " + logits.shape_str() +
                     " vs " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t B = logits.dim(0), C = logits.dim(1);
  if (grad) *grad = Tensor<T>({B, C});
  const T scale = T(1) / static_cast<T>(B);
  T total = T{};
  for (std::size_t b = 0; b < B; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= C) {
      throw Error("softmax_cross_entropy: label " + std::to_string(label) +
                  " out of range");
    }
    const T* row = logits.data() + b * C;
    T mx = row[0];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    T sum = T{};
    for (std::size_t c = 0; c < C; ++c) sum += std::exp(row[c] - mx);
    const T log_sum = std::log(sum);
    total += -(row[label] - mx - log_sum);
    if (grad) {
      T* g = grad->data() + b * C;
      for (std::size_t c = 0; c < C; ++c) {
        T p = std::exp(row[c] - mx) / sum;
        g[c] = (p - (static_cast<std::size_t>(label) == c ? T(1) : T(0))) * scale;
      }
    }
  }
  return total * scale;
}

// Single sample; grad is unscaled (softmax - onehot).
template <typename T>
T softmax_cross_entropy(const std::vector<T>& logits, int label,
                        std::vector<std::type_identity_t<T>>* grad) {
  Tensor<T> l({1, logits.size()});
  std::copy(logits.begin(), logits.end(), l.data());
  Tensor<T> g;
  const T loss = softmax_cross_entropy(l, std::vector<int>{label}, grad ? &g : nullptr);
  if (grad) grad->assign(g.data(), g.data() + g.size());
  return loss;
}

}  // namespace egoscene::nn
