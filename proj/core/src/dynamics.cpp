#include "egoscene/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "egoscene/experiment.hpp"

namespace egoscene::dynamics {

std::string_view source_name(Source s) {
  return s == Source::true_labels ? "true" : "predicted";
}

SceneSequence predict_sequence(Model<float>& model,
                               const std::vector<const Segment*>& segments) {
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (segments[i]->start_ts_ms <= segments[i - 1]->start_ts_ms) {
      throw Error("predict_sequence: segments not sorted by start_ts_ms (" +
                  std::to_string(segments[i]->start_ts_ms) + " after " +
                  std::to_string(segments[i - 1]->start_ts_ms) + ")");
    }
  }
  SceneSequence seq;
  if (segments.empty()) return seq;
  seq.participant_id = segments.front()->participant_id;
  seq.shift_id = segments.front()->shift_id;
  const std::vector<SceneLabel> preds = experiment::predict_batch(model, segments);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    seq.entries.emplace_back(segments[i]->start_ts_ms, preds[i]);
  }
  return seq;
}

std::vector<int> diff_signal(const SceneSequence& seq) {
  std::vector<int> out;
  if (seq.entries.size() < 2) return out;
  out.reserve(seq.entries.size() - 1);
  for (std::size_t i = 1; i < seq.entries.size(); ++i) {
    out.push_back(scene_index(seq.entries[i].second) -
                  scene_index(seq.entries[i - 1].second));
  }
  return out;
}

double normalized_changes(const SceneSequence& seq) {
  if (seq.entries.empty()) {
    throw Error("normalized_changes: empty sequence");
  }
  std::int64_t changes = 0;
  for (int d : diff_signal(seq)) {
    if (d != 0) ++changes;
  }
  return static_cast<double>(changes) / static_cast<double>(seq.entries.size());
}

std::vector<GroupMean> group_means(
    const std::vector<ChangeStats>& stats,
    const std::map<std::string, ParticipantMeta>& meta, Grouping grouping) {
  for (const auto& s : stats) {
    if (!meta.count(s.participant_id)) {
      throw Error("group_means: no metadata for participant " + s.participant_id);
    }
  }

  // participant-level means first (a participant may contribute several shifts)
  struct Acc {
    double sum = 0.0;
    int n = 0;
  };
  std::array<std::map<std::string, Acc>, 2> per_participant;  // by source
  for (const auto& s : stats) {
    auto& acc = per_participant[static_cast<int>(s.source)][s.participant_id];
    acc.sum += s.delta;
    acc.n += 1;
  }

  std::vector<GroupMean> out;
  for (Source source : {Source::true_labels, Source::predicted}) {
    std::map<std::string, Acc> groups;
    for (const auto& [pid, acc] : per_participant[static_cast<int>(source)]) {
      const ParticipantMeta& m = meta.at(pid);
      const std::string group =
          grouping == Grouping::shift ? std::string(shift_name(m.shift))
                                      : std::string(role_name(m.role));
      auto& g = groups[group];
      g.sum += acc.sum / acc.n;
      g.n += 1;
    }
    for (const auto& [name, acc] : groups) {
      GroupMean gm;
      gm.group = name;
      gm.source = source;
      gm.participants = acc.n;
      gm.mean_delta = acc.sum / acc.n;
      out.push_back(std::move(gm));
    }
  }
  return out;
}

Histogram histogram_deltas(const std::vector<double>& deltas, int bins) {
  if (bins < 1) {
    throw Error("histogram_deltas: bins must be >= 1");
  }
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  h.bin_width = 1.0 / bins;
  double sum = 0.0;
  for (double d : deltas) {
    if (d < 0.0 || d > 1.0) {
      throw Error("histogram_deltas: delta outside [0,1]: " + std::to_string(d));
    }
    int idx = static_cast<int>(d * bins);
    if (idx == bins) idx = bins - 1;  // right-closed final bin
    ++h.counts[static_cast<std::size_t>(idx)];
    sum += d;
    ++h.total;
  }
  h.mean = h.total > 0 ? sum / static_cast<double>(h.total) : 0.0;
  return h;
}

}  // namespace egoscene::dynamics
