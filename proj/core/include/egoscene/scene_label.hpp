#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "egoscene/errors.hpp"

namespace egoscene {

// Canonical class order; confusion matrices and checkpoint heads use it.
enum class SceneLabel : int { ns = 0, pat = 1, med = 2, lounge = 3 };

inline constexpr int kNumScenes = 4;

inline constexpr std::array<SceneLabel, kNumScenes> kAllScenes = {
    SceneLabel::ns, SceneLabel::pat, SceneLabel::med, SceneLabel::lounge};

constexpr int scene_index(SceneLabel s) { return static_cast<int>(s); }

inline SceneLabel scene_from_index(int idx) {
  if (idx < 0 || idx >= kNumScenes) {
    throw Error("scene index out of range: " + std::to_string(idx));
  }
  return static_cast<SceneLabel>(idx);
}

constexpr std::string_view scene_name(SceneLabel s) {
  switch (s) {
    case SceneLabel::ns: return "ns";
    case SceneLabel::pat: return "pat";
    case SceneLabel::med: return "med";
    case SceneLabel::lounge: return "lounge";
  }
  return "?";
}

inline std::optional<SceneLabel> scene_from_name(std::string_view name) {
  for (SceneLabel s : kAllScenes) {
    if (scene_name(s) == name) return s;
  }
  return std::nullopt;
}

}  // namespace egoscene
