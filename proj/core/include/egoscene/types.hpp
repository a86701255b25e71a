#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "egoscene/scene_label.hpp"

namespace egoscene {

inline constexpr int kFeatureDim = 125;    // F
inline constexpr int kSegmentFrames = 500; // L
inline constexpr int kFrameHopMs = 10;

// One timestamped acoustic feature vector.
struct FeatureFrame {
  std::int64_t ts_ms = 0;
  std::vector<float> values;  // length kFeatureDim
};

// All frames of one participant-shift, strictly increasing in ts_ms.
struct FeatureStream {
  std::string participant_id;
  std::string shift_id;
  std::vector<FeatureFrame> frames;
};

// The classifier's input unit: L x F matrix plus provenance.
struct Segment {
  std::string participant_id;
  std::string shift_id;
  std::int64_t start_ts_ms = 0;                    // ts of the first frame
  std::vector<float> matrix;                       // row-major L x F
  std::optional<SceneLabel> label;                 // absent for inference-only
  bool fg_active = false;

  float at(int frame, int dim) const { return matrix[static_cast<std::size_t>(frame) * kFeatureDim + dim]; }
  float& at(int frame, int dim) { return matrix[static_cast<std::size_t>(frame) * kFeatureDim + dim]; }
};

// Temporally ordered scene labels of one participant-shift.
struct SceneSequence {
  std::string participant_id;
  std::string shift_id;
  std::vector<std::pair<std::int64_t, SceneLabel>> entries;  // (ts_ms, scene)
};

enum class Shift { day, night };
enum class Role { nursing, non_nursing };

std::string_view shift_name(Shift s);
std::string_view role_name(Role r);
std::optional<Shift> shift_from_name(std::string_view name);
std::optional<Role> role_from_name(std::string_view name);

struct ParticipantMeta {
  std::string participant_id;
  Shift shift = Shift::day;
  Role role = Role::nursing;
};

struct ParticipantData {
  ParticipantMeta meta;
  std::vector<Segment> segments;
  std::vector<SceneSequence> sequences;  // one per shift
};

struct Corpus {
  std::vector<ParticipantData> participants;
};

// Counts labeled segments per scene. Throws Error when the corpus carries
// no labeled segment at all.
std::array<std::int64_t, kNumScenes> class_histogram(const Corpus& corpus);

// Largest class count / total, over a histogram.
double majority_fraction(const std::array<std::int64_t, kNumScenes>& counts);

}  // namespace egoscene
