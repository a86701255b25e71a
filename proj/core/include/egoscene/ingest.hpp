#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "egoscene/types.hpp"

namespace egoscene::ingest {

inline constexpr std::int64_t kDefaultBucketMs = 60000;

struct RssiRecord {
  std::int64_t ts_ms = 0;
  std::string room_id;
  double rssi_dbm = 0.0;
};

// room_id -> scene, or nullopt for rooms explicitly marked `ignore`.
struct RoomMap {
  std::map<std::string, std::optional<SceneLabel>> entries;
};

// Time intervals with an active foreground speaker; non-overlapping,
// strictly increasing.
struct FgMask {
  std::vector<std::pair<std::int64_t, std::int64_t>> intervals;  // [start, end)
};

enum class FgMode { fg_active, full };

// --- file readers (formats in the README) -------------------------------

FeatureStream read_feature_stream(const std::filesystem::path& path);
std::vector<RssiRecord> read_rssi(const std::filesystem::path& path);
RoomMap read_room_map(const std::filesystem::path& path);
FgMask read_fg_mask(const std::filesystem::path& path);
std::vector<ParticipantMeta> read_participants(const std::filesystem::path& path);

// --- pipeline steps ------------------------------------------------------

// Buckets records by floor(ts/bucket_ms); the room with the maximum RSSI in
// each bucket determines the scene. Ties: earlier timestamp, then smaller
// room_id. Buckets whose winner maps to `ignore` are omitted.
SceneSequence localize(const std::vector<RssiRecord>& records,
                       const RoomMap& rooms,
                       std::int64_t bucket_ms = kDefaultBucketMs);

struct MiningReport {
  std::int64_t labels = 0;
  std::int64_t emitted = 0;
  std::int64_t skipped = 0;  // label buckets with fewer than L frames
  std::array<std::int64_t, kNumScenes> per_class{};
};

// For each label entry at time t, takes the first L consecutive frames with
// ts in [t, t+bucket_ms). Buckets with fewer than L frames are skipped and
// counted. Emitted segments never overlap in frame ranges.
std::vector<Segment> mine_segments(const FeatureStream& features,
                                   const SceneSequence& labels,
                                   MiningReport* report = nullptr,
                                   int segment_frames = kSegmentFrames,
                                   std::int64_t bucket_ms = kDefaultBucketMs);

// Arithmetic mean per feature dimension over every frame of every shift.
std::vector<double> participant_mean(
    const std::vector<const FeatureStream*>& streams);

std::vector<Segment> normalize_segments(std::vector<Segment> segments,
                                        const std::vector<double>& mean);

// full: returns everything with fg_active flags set; fg_active: keeps only
// segments whose span overlaps mask intervals by >= 50% of the segment
// duration (L * hop).
std::vector<Segment> apply_fg_mask(std::vector<Segment> segments,
                                   const FgMask& mask, FgMode mode,
                                   int hop_ms = kFrameHopMs);

// --- dataset layout ------------------------------------------------------

struct ShiftDir {
  std::string participant_id;
  std::string shift_id;
  std::filesystem::path dir;
};

// <data_root>/<participant_id>/<shift_id>/features.csv|rssi.csv|fgmask.csv.
// Sorted by (participant_id, shift_id) for deterministic processing order.
std::vector<ShiftDir> discover_shifts(const std::filesystem::path& data_root);

struct ShiftLoadReport {
  std::string participant_id;
  std::string shift_id;
  MiningReport mining;
  std::int64_t kept = 0;  // after the fg filter
};

struct DatasetLoad {
  Corpus corpus;  // normalized segments + localized label sequences
  std::vector<ShiftLoadReport> reports;
};

// Full ingestion of a dataset directory: discover shifts, localize, mine,
// normalize per participant over all shifts, apply the fg mode. Requires
// rooms.csv and participants.csv at the root; fgmask.csv is optional per
// shift (absent means no foreground anywhere).
DatasetLoad load_dataset(const std::filesystem::path& data_root, FgMode mode,
                         std::int64_t bucket_ms = kDefaultBucketMs);

}  // namespace egoscene::ingest
