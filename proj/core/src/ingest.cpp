#include "egoscene/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "egoscene/csv.hpp"
#include "egoscene/log.hpp"

namespace egoscene::ingest {

namespace {

void check_header(const csv::FileLines& file, const std::filesystem::path& path,
                  const std::string& expected) {
  if (file.lines.empty()) {
    throw ParseError(path.string() + ": empty file (missing header)");
  }
  if (std::string(file.lines[0]) != expected) {
    csv::fail(path, 1, "bad header, expected '" + expected + "'");
  }
}

std::string feature_header() {
  std::string h = "ts_ms";
  for (int i = 0; i < kFeatureDim; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "f%03d", i);
    h += ',';
    h += buf;
  }
  return h;
}

}  // namespace

FeatureStream read_feature_stream(const std::filesystem::path& path) {
  csv::FileLines file = csv::read_lines(path);
  check_header(file, path, feature_header());

  FeatureStream stream;
  stream.frames.reserve(file.lines.size() - 1);
  std::vector<std::string_view> fields;
  for (std::size_t i = 1; i < file.lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    csv::split(file.lines[i], fields);
    if (fields.size() != kFeatureDim + 1) {
      csv::fail(path, line_no,
                "expected " + std::to_string(kFeatureDim + 1) + " columns, got " +
                    std::to_string(fields.size()));
    }
    FeatureFrame frame;
    frame.ts_ms = csv::parse_i64(fields[0], path, line_no);
    frame.values.resize(kFeatureDim);
    for (int d = 0; d < kFeatureDim; ++d) {
      const float v = csv::parse_float(fields[d + 1], path, line_no);
      if (!std::isfinite(v)) {
        csv::fail(path, line_no, "non-finite feature value in column f" +
                                     std::to_string(d));
      }
      frame.values[d] = v;
    }
    if (!stream.frames.empty() && frame.ts_ms <= stream.frames.back().ts_ms) {
      csv::fail(path, line_no,
                "timestamps not strictly increasing (" +
                    std::to_string(frame.ts_ms) + " after " +
                    std::to_string(stream.frames.back().ts_ms) + ")");
    }
    stream.frames.push_back(std::move(frame));
  }

  // frames are expected at a 10 ms hop; warn on gross deviation, never resample
  if (stream.frames.size() > 2) {
    std::vector<std::int64_t> gaps;
    gaps.reserve(stream.frames.size() - 1);
    for (std::size_t i = 1; i < stream.frames.size(); ++i) {
      gaps.push_back(stream.frames[i].ts_ms - stream.frames[i - 1].ts_ms);
    }
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    const double median = static_cast<double>(gaps[gaps.size() / 2]);
    if (std::abs(median - kFrameHopMs) > 0.2 * kFrameHopMs) {
      LOG_WARN(path.string() << ": median inter-frame gap " << median
                             << " ms deviates from the expected "
                             << kFrameHopMs << " ms hop");
    }
  }
  return stream;
}

std::vector<RssiRecord> read_rssi(const std::filesystem::path& path) {
  csv::FileLines file = csv::read_lines(path);
  check_header(file, path, "ts_ms,room_id,rssi_dbm");
  std::vector<RssiRecord> records;
  records.reserve(file.lines.size() - 1);
  std::vector<std::string_view> fields;
  for (std::size_t i = 1; i < file.lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    csv::split(file.lines[i], fields);
    if (fields.size() != 3) {
      csv::fail(path, line_no, "expected 3 columns");
    }
    RssiRecord r;
    r.ts_ms = csv::parse_i64(fields[0], path, line_no);
    r.room_id = std::string(fields[1]);
    if (r.room_id.empty()) {
      csv::fail(path, line_no, "empty room_id");
    }
    r.rssi_dbm = csv::parse_double(fields[2], path, line_no);
    if (!std::isfinite(r.rssi_dbm)) {
      csv::fail(path, line_no, "non-finite rssi");
    }
    records.push_back(std::move(r));
  }
  return records;
}

RoomMap read_room_map(const std::filesystem::path& path) {
  csv::FileLines file = csv::read_lines(path);
  check_header(file, path, "room_id,scene");
  RoomMap map;
  std::vector<std::string_view> fields;
  for (std::size_t i = 1; i < file.lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    csv::split(file.lines[i], fields);
    if (fields.size() != 2) {
      csv::fail(path, line_no, "expected 2 columns");
    }
    const std::string room(fields[0]);
    if (fields[1] == "ignore") {
      map.entries[room] = std::nullopt;
    } else if (auto scene = scene_from_name(fields[1])) {
      map.entries[room] = scene;
    } else {
      csv::fail(path, line_no, "unknown scene '" + std::string(fields[1]) + "'");
    }
  }
  return map;
}

FgMask read_fg_mask(const std::filesystem::path& path) {
  csv::FileLines file = csv::read_lines(path);
  check_header(file, path, "start_ms,end_ms");
  FgMask mask;
  std::vector<std::string_view> fields;
  for (std::size_t i = 1; i < file.lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    csv::split(file.lines[i], fields);
    if (fields.size() != 2) {
      csv::fail(path, line_no, "expected 2 columns");
    }
    const std::int64_t start = csv::parse_i64(fields[0], path, line_no);
    const std::int64_t end = csv::parse_i64(fields[1], path, line_no);
    if (end <= start) {
      csv::fail(path, line_no, "empty or negative interval");
    }
    if (!mask.intervals.empty() && start < mask.intervals.back().second) {
      csv::fail(path, line_no, "overlapping or unordered intervals");
    }
    mask.intervals.emplace_back(start, end);
  }
  return mask;
}

std::vector<ParticipantMeta> read_participants(const std::filesystem::path& path) {
  csv::FileLines file = csv::read_lines(path);
  check_header(file, path, "participant_id,shift,role");
  std::vector<ParticipantMeta> out;
  std::set<std::string> seen;
  std::vector<std::string_view> fields;
  for (std::size_t i = 1; i < file.lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    csv::split(file.lines[i], fields);
    if (fields.size() != 3) {
      csv::fail(path, line_no, "expected 3 columns");
    }
    ParticipantMeta meta;
    meta.participant_id = std::string(fields[0]);
    if (!seen.insert(meta.participant_id).second) {
      csv::fail(path, line_no, "duplicate participant_id '" + meta.participant_id + "'");
    }
    auto shift = shift_from_name(fields[1]);
    auto role = role_from_name(fields[2]);
    if (!shift) csv::fail(path, line_no, "unknown shift '" + std::string(fields[1]) + "'");
    if (!role) csv::fail(path, line_no, "unknown role '" + std::string(fields[2]) + "'");
    meta.shift = *shift;
    meta.role = *role;
    out.push_back(std::move(meta));
  }
  return out;
}

SceneSequence localize(const std::vector<RssiRecord>& records,
                       const RoomMap& rooms, std::int64_t bucket_ms) {
  if (records.empty()) {
    throw Error("localize: no rssi records");
  }
  if (bucket_ms <= 0) {
    throw Error("localize: bucket_ms must be positive");
  }

  std::set<std::string> unknown;
  for (const auto& r : records) {
    if (rooms.entries.find(r.room_id) == rooms.entries.end()) {
      unknown.insert(r.room_id);
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& r : unknown) {
      if (!list.empty()) list += ", ";
      list += r;
    }
    throw ConfigError("localize: rooms missing from room map: " + list);
  }

  // bucket -> winning record under (rssi desc, ts asc, room_id asc)
  std::map<std::int64_t, const RssiRecord*> winners;
  for (const auto& r : records) {
    const std::int64_t bucket = r.ts_ms >= 0 ? r.ts_ms / bucket_ms
                                             : (r.ts_ms - bucket_ms + 1) / bucket_ms;
    auto [it, inserted] = winners.try_emplace(bucket, &r);
    if (!inserted) {
      const RssiRecord* cur = it->second;
      const bool better =
          r.rssi_dbm > cur->rssi_dbm ||
          (r.rssi_dbm == cur->rssi_dbm &&
           (r.ts_ms < cur->ts_ms ||
            (r.ts_ms == cur->ts_ms && r.room_id < cur->room_id)));
      if (better) it->second = &r;
    }
  }

  SceneSequence seq;
  for (const auto& [bucket, rec] : winners) {
    const auto& scene = rooms.entries.at(rec->room_id);
    if (!scene) continue;  // ignored room
    seq.entries.emplace_back(bucket * bucket_ms, *scene);
  }
  return seq;
}

std::vector<Segment> mine_segments(const FeatureStream& features,
                                   const SceneSequence& labels,
                                   MiningReport* report, int segment_frames,
                                   std::int64_t bucket_ms) {
  std::vector<Segment> out;
  MiningReport local;
  const auto& frames = features.frames;
  const std::size_t L = static_cast<std::size_t>(segment_frames);

  std::size_t next_free = 0;  // first frame index not claimed by a segment
  for (const auto& [t, scene] : labels.entries) {
    ++local.labels;
    // first frame at or after the label time, never reusing claimed frames
    auto it = std::lower_bound(
        frames.begin() + static_cast<std::ptrdiff_t>(next_free), frames.end(), t,
        [](const FeatureFrame& f, std::int64_t ts) { return f.ts_ms < ts; });
    const std::size_t start = static_cast<std::size_t>(it - frames.begin());
    const std::int64_t bucket_end = t + bucket_ms;
    if (start + L > frames.size() || frames[start + L - 1].ts_ms >= bucket_end) {
      ++local.skipped;
      continue;
    }
    Segment seg;
    seg.participant_id = features.participant_id;
    seg.shift_id = features.shift_id;
    seg.start_ts_ms = frames[start].ts_ms;
    seg.label = scene;
    seg.matrix.resize(L * kFeatureDim);
    for (std::size_t f = 0; f < L; ++f) {
      const auto& vals = frames[start + f].values;
      std::copy(vals.begin(), vals.end(),
                seg.matrix.begin() + static_cast<std::ptrdiff_t>(f * kFeatureDim));
    }
    next_free = start + L;
    ++local.emitted;
    ++local.per_class[scene_index(scene)];
    out.push_back(std::move(seg));
  }
  if (report) *report = local;
  return out;
}

std::vector<double> participant_mean(
    const std::vector<const FeatureStream*>& streams) {
  std::vector<double> sum(kFeatureDim, 0.0);
  std::int64_t count = 0;
  for (const FeatureStream* s : streams) {
    for (const auto& frame : s->frames) {
      for (int d = 0; d < kFeatureDim; ++d) sum[d] += frame.values[d];
      ++count;
    }
  }
  if (count == 0) {
    throw Error("participant_mean: no frames");
  }
  for (double& v : sum) v /= static_cast<double>(count);
  return sum;
}

std::vector<Segment> normalize_segments(std::vector<Segment> segments,
                                        const std::vector<double>& mean) {
  if (mean.size() != kFeatureDim) {
    throw ShapeError("normalize_segments: mean has " + std::to_string(mean.size()) +
                     " dims, want " + std::to_string(kFeatureDim));
  }
  for (Segment& seg : segments) {
    const std::size_t frames = seg.matrix.size() / kFeatureDim;
    for (std::size_t f = 0; f < frames; ++f) {
      float* row = seg.matrix.data() + f * kFeatureDim;
      for (int d = 0; d < kFeatureDim; ++d) {
        row[d] = static_cast<float>(static_cast<double>(row[d]) - mean[d]);
      }
    }
  }
  return segments;
}

std::vector<Segment> apply_fg_mask(std::vector<Segment> segments,
                                   const FgMask& mask, FgMode mode, int hop_ms) {
  auto overlap_ms = [&mask](std::int64_t lo, std::int64_t hi) {
    std::int64_t total = 0;
    for (const auto& [s, e] : mask.intervals) {
      const std::int64_t a = std::max(lo, s);
      const std::int64_t b = std::min(hi, e);
      if (b > a) total += b - a;
      if (s >= hi) break;
    }
    return total;
  };

  for (Segment& seg : segments) {
    const std::int64_t lo = seg.start_ts_ms;
    std::int64_t dur =
        static_cast<std::int64_t>(seg.matrix.size() / kFeatureDim) * hop_ms;
    if (dur <= 0) dur = static_cast<std::int64_t>(kSegmentFrames) * hop_ms;
    seg.fg_active = 2 * overlap_ms(lo, lo + dur) >= dur;
  }
  if (mode == FgMode::full) {
    return segments;
  }
  std::vector<Segment> kept;
  for (Segment& seg : segments) {
    if (seg.fg_active) kept.push_back(std::move(seg));
  }
  return kept;
}

DatasetLoad load_dataset(const std::filesystem::path& data_root, FgMode mode,
                         std::int64_t bucket_ms) {
  namespace fs = std::filesystem;
  const auto shifts = discover_shifts(data_root);
  if (shifts.empty()) {
    throw ConfigError("no participants found under " + data_root.string());
  }
  const RoomMap rooms = read_room_map(data_root / "rooms.csv");
  const fs::path participants_csv = data_root / "participants.csv";
  if (!fs::exists(participants_csv)) {
    throw ConfigError("missing participants.csv under " + data_root.string());
  }
  std::map<std::string, ParticipantMeta> meta;
  for (auto& m : read_participants(participants_csv)) {
    meta[m.participant_id] = std::move(m);
  }

  std::map<std::string, std::vector<const ShiftDir*>> by_participant;
  for (const auto& sd : shifts) by_participant[sd.participant_id].push_back(&sd);

  DatasetLoad out;
  for (const auto& [pid, dirs] : by_participant) {
    auto meta_it = meta.find(pid);
    if (meta_it == meta.end()) {
      throw ConfigError("participant " + pid + " missing from participants.csv");
    }
    ParticipantData data;
    data.meta = meta_it->second;

    std::vector<FeatureStream> streams;
    streams.reserve(dirs.size());
    for (const auto* sd : dirs) {
      FeatureStream stream = read_feature_stream(sd->dir / "features.csv");
      stream.participant_id = sd->participant_id;
      stream.shift_id = sd->shift_id;
      streams.push_back(std::move(stream));
    }
    std::vector<const FeatureStream*> stream_ptrs;
    for (const auto& s : streams) stream_ptrs.push_back(&s);
    const std::vector<double> mean = participant_mean(stream_ptrs);

    for (std::size_t i = 0; i < streams.size(); ++i) {
      const auto* sd = dirs[i];
      SceneSequence labels =
          localize(read_rssi(sd->dir / "rssi.csv"), rooms, bucket_ms);
      labels.participant_id = pid;
      labels.shift_id = sd->shift_id;

      ShiftLoadReport rep;
      rep.participant_id = pid;
      rep.shift_id = sd->shift_id;
      std::vector<Segment> segs = mine_segments(streams[i], labels, &rep.mining,
                                                kSegmentFrames, bucket_ms);
      segs = normalize_segments(std::move(segs), mean);

      FgMask mask;
      if (fs::exists(sd->dir / "fgmask.csv")) {
        mask = read_fg_mask(sd->dir / "fgmask.csv");
      }
      segs = apply_fg_mask(std::move(segs), mask, mode);
      rep.kept = static_cast<std::int64_t>(segs.size());
      out.reports.push_back(std::move(rep));

      data.segments.insert(data.segments.end(),
                           std::make_move_iterator(segs.begin()),
                           std::make_move_iterator(segs.end()));
      data.sequences.push_back(std::move(labels));
    }
    out.corpus.participants.push_back(std::move(data));
  }
  return out;
}

std::vector<ShiftDir> discover_shifts(const std::filesystem::path& data_root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(data_root)) {
    throw ConfigError("data root is not a directory: " + data_root.string());
  }
  std::vector<ShiftDir> out;
  for (const auto& p : fs::directory_iterator(data_root)) {
    if (!p.is_directory()) continue;
    for (const auto& s : fs::directory_iterator(p.path())) {
      if (!s.is_directory()) continue;
      if (!fs::exists(s.path() / "features.csv")) continue;
      out.push_back({p.path().filename().string(), s.path().filename().string(),
                     s.path()});
    }
  }
  std::sort(out.begin(), out.end(), [](const ShiftDir& a, const ShiftDir& b) {
    return std::tie(a.participant_id, a.shift_id) <
           std::tie(b.participant_id, b.shift_id);
  });
  return out;
}

}  // namespace egoscene::ingest
