#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "egoscene/rng.hpp"
#include "egoscene/types.hpp"

namespace egoscene::synth {

// Generator spec for synthetic corpora with known ground truth. Defaults
// mirror the skewed scene distribution and a 2:1 nursing mobility contrast.
struct SynthSpec {
  enum class Kind { basic, temporal };
  Kind kind = Kind::basic;

  int num_participants = 16;
  int shifts_per_participant = 1;
  int labels_per_shift = 40;
  std::array<double, kNumScenes> priors = {0.46, 0.40, 0.04, 0.10};

  // basic corpus: classes separated by mean offsets on interleaved dims
  double class_mean_amplitude = 1.0;
  double noise_sigma = 0.5;
  double participant_offset_sigma = 0.5;

  // scene-change probability per 1-minute label step, by role; on change
  // the scene is resampled from the priors (marginals stay at the priors)
  double mobility_nursing = 0.85;
  double mobility_non_nursing = 0.35;
  double nursing_fraction = 0.5;
  double night_fraction = 0.5;

  double fg_active_fraction = 0.35;

  // trajectory room leads by at least this margin; noisy_rssi shrinks the
  // margin to exercise argmax tie-breaking
  double rssi_margin_dbm = 10.0;
  bool noisy_rssi = false;

  int frames_per_label = kSegmentFrames;
  int hop_ms = kFrameHopMs;
  std::int64_t bucket_ms = 60000;

  // temporal corpus: class-specific sinusoid cycle counts per segment window
  // on the first pattern_dims dims; whole cycles, so segment means carry no
  // class information
  double pattern_amplitude = 1.0;
  int pattern_dims = 12;
  std::array<int, kNumScenes> pattern_cycles = {17, 25, 38, 55};

  std::uint64_t seed = 1;

  void validate() const;
};

// Strict JSON (unknown keys rejected); missing keys keep defaults.
SynthSpec spec_from_json(const std::string& text);
std::string spec_to_json(const SynthSpec& spec);

// The scene chain behind every generated shift: with probability `mobility`
// the scene is resampled from `priors`, otherwise it stays. The marginal
// distribution of every step equals the priors; the expected fraction of
// observed changes is mobility * (1 - sum(priors^2)).
std::vector<SceneLabel> scene_trajectory(
    const std::array<double, kNumScenes>& priors, double mobility, int length,
    Rng& rng);

struct LedgerRow {
  std::string participant_id;
  std::string shift_id;
  std::int64_t ts_ms = 0;
  SceneLabel scene = SceneLabel::ns;
};

std::vector<LedgerRow> read_ledger(const std::filesystem::path& path);

struct GenerateSummary {
  int participants = 0;
  int shifts = 0;
  std::int64_t labels = 0;
};

// Writes the ingest directory layout plus ledger.csv and synthspec.json.
GenerateSummary generate_corpus(const SynthSpec& spec,
                                const std::filesystem::path& out_dir);

// Same machinery with kind forced to temporal: stationary feature means are
// class-uninformative, frame order carries all class information.
GenerateSummary generate_temporal_corpus(SynthSpec spec,
                                         const std::filesystem::path& out_dir);

}  // namespace egoscene::synth
