#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "egoscene/model.hpp"
#include "egoscene/types.hpp"

namespace egoscene::dynamics {

enum class Source { true_labels, predicted };

std::string_view source_name(Source s);

// Normalized scene-change count of one participant-shift sequence.
struct ChangeStats {
  std::string participant_id;
  std::string shift_id;
  double delta = 0.0;     // in [0, (T-1)/T]
  std::int64_t length = 0;  // T
  Source source = Source::true_labels;
};

// One prediction per segment, order preserved. Segments must arrive sorted
// by start_ts_ms; unsorted input is an error, never silently reordered.
SceneSequence predict_sequence(Model<float>& model,
                               const std::vector<const Segment*>& segments);

// Consecutive differences of class indices (T-1 values).
std::vector<int> diff_signal(const SceneSequence& seq);

// (number of nonzero consecutive differences) / T.
double normalized_changes(const SceneSequence& seq);

struct GroupMean {
  std::string group;  // "day"/"night" or "nursing"/"non_nursing"
  Source source = Source::true_labels;
  int participants = 0;
  double mean_delta = 0.0;
};

enum class Grouping { shift, role };

// Per-group arithmetic means. A participant's shift deltas are averaged
// first, then across participants, separately per source.
std::vector<GroupMean> group_means(
    const std::vector<ChangeStats>& stats,
    const std::map<std::string, ParticipantMeta>& meta, Grouping grouping);

struct Histogram {
  std::vector<std::int64_t> counts;  // equal-width bins over [0,1]
  double bin_width = 0.0;
  double mean = 0.0;  // annotation value
  std::int64_t total = 0;
};

// Right-open bins except the final bin, which is right-closed.
Histogram histogram_deltas(const std::vector<double>& deltas, int bins);

}  // namespace egoscene::dynamics
