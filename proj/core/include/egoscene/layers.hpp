#pragma once

#include <memory>
#include <string>
#include <vector>

#include "egoscene/kernels.hpp"

namespace egoscene::nn {

template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;  // null for non-learnable state (running stats)
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng& rng) = 0;
  // Uses activations cached by the last forward.
  virtual Tensor<T> backward(const Tensor<T>& gy) = 0;

  // Learnable tensors paired with their gradient buffers.
  virtual void params(std::vector<ParamRef<T>>& out) {}
  // Non-learnable persistent state (batch-norm running stats).
  virtual void state(std::vector<ParamRef<T>>& out) {}

  virtual const std::string& name() const = 0;
};

template <typename T>
class Conv1d final : public Layer<T> {
 public:
  Conv1d(std::string name, std::size_t in_ch, std::size_t out_ch,
         std::size_t kernel, std::size_t dilation, Rng& rng)
      : name_(std::move(name)),
        dilation_(dilation),
        w_({out_ch, in_ch, kernel}),
        b_({out_ch}),
        gw_({out_ch, in_ch, kernel}),
        gb_({out_ch}) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in_ch * kernel));
    for (std::size_t i = 0; i < w_.size(); ++i) {
      w_[i] = static_cast<T>(rng.uniform(-bound, bound));
    }
  }

  Tensor<T> forward(const Tensor<T>& x, Mode, Rng&) override {
    x_ = x;
    Tensor<T> y = conv1d_forward(x, w_, b_, dilation_);
    debug_check_finite(y, "conv1d forward");
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx;
    conv1d_backward(gy, x_, w_, dilation_, gx, gw_, gb_);
    debug_check_finite(gx, "conv1d backward");
    return gx;
  }

  void params(std::vector<ParamRef<T>>& out) override {
    out.push_back({name_ + ".weight", &w_, &gw_});
    out.push_back({name_ + ".bias", &b_, &gb_});
  }

  const std::string& name() const override { return name_; }
  std::size_t dilation() const { return dilation_; }
  const Tensor<T>& weight() const { return w_; }

 private:
  std::string name_;
  std::size_t dilation_;
  Tensor<T> w_, b_, gw_, gb_;
  Tensor<T> x_;
};

template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::string name, std::size_t in, std::size_t out, Rng& rng)
      : name_(std::move(name)),
        w_({out, in}),
        b_({out}),
        gw_({out, in}),
        gb_({out}) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    for (std::size_t i = 0; i < w_.size(); ++i) {
      w_[i] = static_cast<T>(rng.uniform(-bound, bound));
    }
  }

  Tensor<T> forward(const Tensor<T>& x, Mode, Rng&) override {
    x_ = x;
    Tensor<T> y = linear_forward(x, w_, b_);
    debug_check_finite(y, "linear forward");
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx;
    linear_backward(gy, x_, w_, gx, gw_, gb_);
    debug_check_finite(gx, "linear backward");
    return gx;
  }

  void params(std::vector<ParamRef<T>>& out) override {
    out.push_back({name_ + ".weight", &w_, &gw_});
    out.push_back({name_ + ".bias", &b_, &gb_});
  }

  const std::string& name() const override { return name_; }

 private:
  std::string name_;
  Tensor<T> w_, b_, gw_, gb_;
  Tensor<T> x_;
};

// Normalizes over every axis except the trailing channel axis: [B,C] over the
// batch, [B,L,C] over batch and time.
template <typename T>
class BatchNorm1d final : public Layer<T> {
 public:
  BatchNorm1d(std::string name, std::size_t channels, T momentum = T(0.9),
              T eps = T(1e-5))
      : name_(std::move(name)),
        momentum_(momentum),
        eps_(eps),
        gamma_(Tensor<T>::full({channels}, T(1))),
        beta_({channels}),
        ggamma_({channels}),
        gbeta_({channels}),
        running_mean_({channels}),
        running_var_(Tensor<T>::full({channels}, T(1))) {}

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng&) override {
    const std::size_t C = gamma_.size();
    if (x.rank() < 2 || x.shape().back() != C) {
      throw ShapeError(name_ + ": input " + x.shape_str() + " vs " +
                       std::to_string(C) + " channels");
    }
    const std::size_t rows = x.size() / C;
    mode_ = mode;
    xhat_ = Tensor<T>(x.shape());
    inv_std_.assign(C, T{});

    std::vector<T> mean(C, T{}), var(C, T{});
    if (mode == Mode::train || mode == Mode::calibrate) {
      for (std::size_t r = 0; r < rows; ++r) {
        const T* row = x.data() + r * C;
        for (std::size_t c = 0; c < C; ++c) mean[c] += row[c];
      }
      const T inv_n = T(1) / static_cast<T>(rows);
      for (std::size_t c = 0; c < C; ++c) mean[c] *= inv_n;
      for (std::size_t r = 0; r < rows; ++r) {
        const T* row = x.data() + r * C;
        for (std::size_t c = 0; c < C; ++c) {
          const T d = row[c] - mean[c];
          var[c] += d * d;
        }
      }
      for (std::size_t c = 0; c < C; ++c) var[c] *= inv_n;
      if (mode == Mode::train) {
        for (std::size_t c = 0; c < C; ++c) {
          running_mean_[c] = momentum_ * running_mean_[c] + (T(1) - momentum_) * mean[c];
          running_var_[c] = momentum_ * running_var_[c] + (T(1) - momentum_) * var[c];
        }
      } else {
        // stat refresh: replace rather than blend
        for (std::size_t c = 0; c < C; ++c) {
          running_mean_[c] = mean[c];
          running_var_[c] = var[c];
        }
      }
      initialized_ = true;
    } else {
      if (!initialized_) {
        throw Error(name_ + ": eval before any train step and no loaded stats");
      }
      for (std::size_t c = 0; c < C; ++c) {
        mean[c] = running_mean_[c];
        var[c] = running_var_[c];
      }
    }

    for (std::size_t c = 0; c < C; ++c) {
      inv_std_[c] = T(1) / std::sqrt(var[c] + eps_);
    }
    Tensor<T> y(x.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      const T* row = x.data() + r * C;
      T* xh = xhat_.data() + r * C;
      T* yr = y.data() + r * C;
      for (std::size_t c = 0; c < C; ++c) {
        xh[c] = (row[c] - mean[c]) * inv_std_[c];
        yr[c] = gamma_[c] * xh[c] + beta_[c];
      }
    }
    debug_check_finite(y, "batchnorm forward");
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const std::size_t C = gamma_.size();
    const std::size_t rows = gy.size() / C;
    ggamma_.zero();
    gbeta_.zero();
    for (std::size_t r = 0; r < rows; ++r) {
      const T* g = gy.data() + r * C;
      const T* xh = xhat_.data() + r * C;
      for (std::size_t c = 0; c < C; ++c) {
        ggamma_[c] += g[c] * xh[c];
        gbeta_[c] += g[c];
      }
    }
    Tensor<T> gx(gy.shape());
    if (mode_ != Mode::eval) {
      const T inv_n = T(1) / static_cast<T>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const T* g = gy.data() + r * C;
        const T* xh = xhat_.data() + r * C;
        T* out = gx.data() + r * C;
        for (std::size_t c = 0; c < C; ++c) {
          out[c] = gamma_[c] * inv_std_[c] *
                   (g[c] - gbeta_[c] * inv_n - xh[c] * ggamma_[c] * inv_n);
        }
      }
    } else {
      for (std::size_t r = 0; r < rows; ++r) {
        const T* g = gy.data() + r * C;
        T* out = gx.data() + r * C;
        for (std::size_t c = 0; c < C; ++c) {
          out[c] = g[c] * gamma_[c] * inv_std_[c];
        }
      }
    }
    debug_check_finite(gx, "batchnorm backward");
    return gx;
  }

  void params(std::vector<ParamRef<T>>& out) override {
    out.push_back({name_ + ".gamma", &gamma_, &ggamma_});
    out.push_back({name_ + ".beta", &beta_, &gbeta_});
  }

  void state(std::vector<ParamRef<T>>& out) override {
    out.push_back({name_ + ".running_mean", &running_mean_, nullptr});
    out.push_back({name_ + ".running_var", &running_var_, nullptr});
  }

  void load_stats(const Tensor<T>& mean, const Tensor<T>& var) {
    running_mean_ = mean;
    running_var_ = var;
    initialized_ = true;
  }

  void mark_stats_loaded() { initialized_ = true; }
  bool stats_initialized() const { return initialized_; }

  const std::string& name() const override { return name_; }

 private:
  std::string name_;
  T momentum_, eps_;
  Tensor<T> gamma_, beta_, ggamma_, gbeta_;
  Tensor<T> running_mean_, running_var_;
  bool initialized_ = false;

  Mode mode_ = Mode::train;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
};

template <typename T>
class ReLU final : public Layer<T> {
 public:
  explicit ReLU(std::string name) : name_(std::move(name)) {}

  Tensor<T> forward(const Tensor<T>& x, Mode, Rng&) override {
    x_ = x;
    return relu_forward(x);
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    return relu_backward(gy, x_);
  }

  const std::string& name() const override { return name_; }

 private:
  std::string name_;
  Tensor<T> x_;
};

// Inverted dropout: survivors are scaled by 1/(1-rate) so eval is identity.
template <typename T>
class Dropout final : public Layer<T> {
 public:
  Dropout(std::string name, double rate) : name_(std::move(name)), rate_(rate) {
    if (rate < 0.0 || rate >= 1.0) {
      throw Error("dropout rate must be in [0,1): " + std::to_string(rate));
    }
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng& rng) override {
    if (mode != Mode::train || rate_ == 0.0) {
      identity_ = true;
      return x;
    }
    identity_ = false;
    const T scale = T(1.0 / (1.0 - rate_));
    mask_ = Tensor<T>(x.shape());
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask_[i] = rng.bernoulli(rate_) ? T{} : scale;
      y[i] = x[i] * mask_[i];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    if (identity_) return gy;
    Tensor<T> gx(gy.shape());
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = gy[i] * mask_[i];
    return gx;
  }

  const std::string& name() const override { return name_; }
  double rate() const { return rate_; }

 private:
  std::string name_;
  double rate_;
  bool identity_ = true;
  Tensor<T> mask_;
};

template <typename T>
class TemporalMean final : public Layer<T> {
 public:
  explicit TemporalMean(std::string name) : name_(std::move(name)) {}

  Tensor<T> forward(const Tensor<T>& x, Mode, Rng&) override {
    L_ = x.dim(1);
    return temporal_mean(x);
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    return temporal_mean_backward(gy, L_);
  }

  const std::string& name() const override { return name_; }

 private:
  std::string name_;
  std::size_t L_ = 0;
};

}  // namespace egoscene::nn
