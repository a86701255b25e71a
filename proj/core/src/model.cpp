#include "egoscene/model.hpp"

namespace egoscene {

std::string_view model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::mlp_baseline: return "mlp";
    case ModelKind::tdnn_small: return "tdnn-small";
    case ModelKind::tdnn_big: return "tdnn-big";
  }
  return "?";
}

std::optional<ModelKind> model_kind_from_name(std::string_view name) {
  if (name == "mlp") return ModelKind::mlp_baseline;
  if (name == "tdnn-small") return ModelKind::tdnn_small;
  if (name == "tdnn-big") return ModelKind::tdnn_big;
  return std::nullopt;
}

nn::Tensor<float> batch_from_segments(std::span<const Segment* const> segments) {
  if (segments.empty()) {
    throw ShapeError("batch_from_segments: empty batch");
  }
  const std::size_t L = segments.front()->matrix.size() / kFeatureDim;
  nn::Tensor<float> batch({segments.size(), L, kFeatureDim});
  float* out = batch.data();
  for (const Segment* seg : segments) {
    if (seg->matrix.size() != L * kFeatureDim) {
      throw ShapeError("batch_from_segments: ragged segment lengths");
    }
    std::copy(seg->matrix.begin(), seg->matrix.end(), out);
    out += L * kFeatureDim;
  }
  return batch;
}

std::vector<float> forward_segment(Model<float>& model, const Segment& seg) {
  const Segment* one[] = {&seg};
  nn::Tensor<float> logits = model.forward_eval(batch_from_segments(one));
  return std::vector<float>(logits.data(), logits.data() + logits.size());
}

SceneLabel predict(Model<float>& model, const Segment& seg) {
  std::vector<float> logits = forward_segment(model, seg);
  return scene_from_index(nn::argmax_class(logits));
}

}  // namespace egoscene
