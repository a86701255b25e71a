#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "egoscene/adam.hpp"
#include "egoscene/layers.hpp"
#include "egoscene/types.hpp"

namespace egoscene {

enum class ModelKind { mlp_baseline, tdnn_small, tdnn_big };

std::string_view model_kind_name(ModelKind k);
std::optional<ModelKind> model_kind_from_name(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::tdnn_small;
  int input_dim = kFeatureDim;
  int num_classes = kNumScenes;

  // TDNN stacks: conv widths and the statistics dimension feeding the pool.
  int conv_channels() const { return kind == ModelKind::tdnn_big ? 256 : 128; }
  int stats_dim() const { return kind == ModelKind::tdnn_big ? 512 : 256; }
  int dense_hidden() const { return kind == ModelKind::tdnn_big ? 256 : 128; }
  static constexpr std::array<std::pair<int, int>, 5> kConvSchedule = {
      {{5, 1}, {3, 2}, {3, 3}, {1, 1}, {1, 1}}};  // (kernel, dilation)

  // MLP baseline hidden widths.
  static constexpr std::array<int, 3> kMlpHidden = {512, 1024, 512};

  // Time-axis shrinkage of the conv stack: 500 -> 486.
  int receptive_context() const {
    int ctx = 0;
    for (auto [k, d] : kConvSchedule) ctx += (k - 1) * d;
    return ctx;
  }

  static ModelSpec of(ModelKind kind) {
    ModelSpec s;
    s.kind = kind;
    return s;
  }
};

namespace nn {

inline int argmax_class(const float* v, std::size_t n) {
  int best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

template <typename T>
int argmax_class(const std::vector<T>& v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace nn

// A built architecture: layer stack plus the index of the pooling layer that
// splits the frame-level stack from the utterance-level head.
template <typename T>
class Model {
 public:
  Model(const ModelSpec& spec, Rng& rng, double dropout_rate = 0.3)
      : spec_(spec) {
    using namespace nn;
    const std::size_t F = static_cast<std::size_t>(spec.input_dim);
    const std::size_t C = static_cast<std::size_t>(spec.num_classes);
    if (spec.kind == ModelKind::mlp_baseline) {
      layers_.push_back(std::make_unique<TemporalMean<T>>("input_mean"));
      pool_index_ = 0;
      std::size_t prev = F;
      int i = 1;
      for (int h : ModelSpec::kMlpHidden) {
        const std::string tag = "dense" + std::to_string(i++);
        layers_.push_back(std::make_unique<Dense<T>>(tag, prev, h, rng));
        layers_.push_back(std::make_unique<ReLU<T>>(tag + ".relu"));
        layers_.push_back(std::make_unique<Dropout<T>>(tag + ".drop", dropout_rate));
        prev = static_cast<std::size_t>(h);
      }
      layers_.push_back(std::make_unique<Dense<T>>("output", prev, C, rng));
    } else {
      const std::size_t width = static_cast<std::size_t>(spec.conv_channels());
      const std::size_t stats = static_cast<std::size_t>(spec.stats_dim());
      std::size_t prev = F;
      for (std::size_t i = 0; i < ModelSpec::kConvSchedule.size(); ++i) {
        auto [k, d] = ModelSpec::kConvSchedule[i];
        const std::size_t out = i + 1 == ModelSpec::kConvSchedule.size() ? stats : width;
        const std::string tag = "conv" + std::to_string(i + 1);
        layers_.push_back(std::make_unique<Conv1d<T>>(
            tag, prev, out, static_cast<std::size_t>(k), static_cast<std::size_t>(d), rng));
        layers_.push_back(std::make_unique<BatchNorm1d<T>>(tag + ".bn", out));
        layers_.push_back(std::make_unique<ReLU<T>>(tag + ".relu"));
        layers_.push_back(std::make_unique<Dropout<T>>(tag + ".drop", dropout_rate));
        prev = out;
      }
      pool_index_ = layers_.size();
      layers_.push_back(std::make_unique<TemporalMean<T>>("stats_mean"));
      const std::size_t h = static_cast<std::size_t>(spec.dense_hidden());
      for (int i = 1; i <= 2; ++i) {
        const std::string tag = "dense" + std::to_string(i);
        layers_.push_back(std::make_unique<Dense<T>>(tag, prev, h, rng));
        layers_.push_back(std::make_unique<BatchNorm1d<T>>(tag + ".bn", h));
        layers_.push_back(std::make_unique<ReLU<T>>(tag + ".relu"));
        layers_.push_back(std::make_unique<Dropout<T>>(tag + ".drop", dropout_rate));
        prev = h;
      }
      layers_.push_back(std::make_unique<Dense<T>>("output", prev, C, rng));
    }
  }

  const ModelSpec& spec() const { return spec_; }

  // x [B, L, F] -> logits [B, C]
  nn::Tensor<T> forward(const nn::Tensor<T>& x, nn::Mode mode, Rng& rng) {
    if (x.rank() != 3 || x.dim(2) != static_cast<std::size_t>(spec_.input_dim)) {
      throw ShapeError("model forward: want [B,L," +
                       std::to_string(spec_.input_dim) + "], got " +
                       x.shape_str());
    }
    nn::Tensor<T> cur = x;
    for (auto& layer : layers_) {
      cur = layer->forward(cur, mode, rng);
    }
    return cur;
  }

  nn::Tensor<T> forward_eval(const nn::Tensor<T>& x) {
    Rng dummy(0);
    return forward(x, nn::Mode::eval, dummy);
  }

  // d loss / d logits -> d loss / d input
  nn::Tensor<T> backward(const nn::Tensor<T>& glogits) {
    nn::Tensor<T> cur = glogits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
      cur = (*it)->backward(cur);
    }
    return cur;
  }

  // Pre-pooling embedding sequence [B, L', stats_dim]; TDNN only.
  nn::Tensor<T> embed(const nn::Tensor<T>& x) {
    if (spec_.kind == ModelKind::mlp_baseline) {
      throw Error("embed: the MLP baseline has no embedding sequence");
    }
    Rng dummy(0);
    nn::Tensor<T> cur = x;
    for (std::size_t i = 0; i < pool_index_; ++i) {
      cur = layers_[i]->forward(cur, nn::Mode::eval, dummy);
    }
    return cur;
  }

  // Head applied to an already-pooled vector [B, stats_dim] (eval mode).
  nn::Tensor<T> head_forward_eval(const nn::Tensor<T>& pooled) {
    Rng dummy(0);
    nn::Tensor<T> cur = pooled;
    for (std::size_t i = pool_index_ + 1; i < layers_.size(); ++i) {
      cur = layers_[i]->forward(cur, nn::Mode::eval, dummy);
    }
    return cur;
  }

  std::vector<nn::ParamRef<T>> params() {
    std::vector<nn::ParamRef<T>> out;
    for (auto& l : layers_) l->params(out);
    return out;
  }

  std::vector<nn::ParamRef<T>> state_tensors() {
    std::vector<nn::ParamRef<T>> out;
    for (auto& l : layers_) l->state(out);
    return out;
  }

  // Learnable scalars: weights, biases, gamma, beta. Running stats and
  // optimizer state excluded.
  long long count_params() {
    long long n = 0;
    for (const auto& p : params()) n += static_cast<long long>(p.value->size());
    return n;
  }

  void mark_bn_stats_loaded() {
    for (auto& l : layers_) {
      if (auto* bn = dynamic_cast<nn::BatchNorm1d<T>*>(l.get())) {
        bn->mark_stats_loaded();
      }
    }
  }

  // Value snapshot of params + state, for best-epoch selection.
  std::vector<nn::Tensor<T>> snapshot() {
    std::vector<nn::Tensor<T>> out;
    for (const auto& p : params()) out.push_back(*p.value);
    for (const auto& s : state_tensors()) out.push_back(*s.value);
    return out;
  }

  void restore(const std::vector<nn::Tensor<T>>& snap) {
    auto ps = params();
    auto ss = state_tensors();
    if (snap.size() != ps.size() + ss.size()) {
      throw ShapeError("restore: snapshot does not match model");
    }
    std::size_t i = 0;
    for (auto& p : ps) *p.value = snap[i++];
    for (auto& s : ss) *s.value = snap[i++];
    mark_bn_stats_loaded();
  }

 private:
  ModelSpec spec_;
  std::vector<std::unique_ptr<nn::Layer<T>>> layers_;
  std::size_t pool_index_ = 0;
};

// Batch assembly from segments: [B, L, F], one row block per segment.
nn::Tensor<float> batch_from_segments(std::span<const Segment* const> segments);

// Single-segment helpers on the float production model.
std::vector<float> forward_segment(Model<float>& model, const Segment& seg);
SceneLabel predict(Model<float>& model, const Segment& seg);

}  // namespace egoscene
