#include "egoscene/synth.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "egoscene/csv.hpp"
#include "egoscene/errors.hpp"
#include "egoscene/rng.hpp"

namespace egoscene::synth {

namespace {

using nlohmann::json;

std::string participant_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "P%03d", i + 1);
  return buf;
}

std::string shift_name_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%02d", i + 1);
  return buf;
}

// even spread of `fraction` over indices 0..n-1
bool spread_hit(int i, double fraction, double phase) {
  const double a = std::floor((i + 1) * fraction + phase);
  const double b = std::floor(i * fraction + phase);
  return a - b > 0.5;
}

void append_fixed(std::string& out, double v) {
  char tmp[32];
  auto [ptr, ec] =
      std::to_chars(tmp, tmp + sizeof tmp, v, std::chars_format::fixed, 4);
  out.append(tmp, ptr);
}

const std::array<std::string, kNumScenes> kRoomIds = {
    "room_ns", "room_pat", "room_med", "room_lounge"};

double class_mean(const SynthSpec& spec, int scene, int dim) {
  if (spec.kind == SynthSpec::Kind::temporal) return 0.0;
  return dim % kNumScenes == scene ? spec.class_mean_amplitude : 0.0;
}

}  // namespace

void SynthSpec::validate() const {
  double sum = 0.0;
  for (double p : priors) {
    if (p < 0.0) throw ConfigError("synth spec: negative prior");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("synth spec: priors must sum to 1");
  }
  if (num_participants < 1 || shifts_per_participant < 1 || labels_per_shift < 1) {
    throw ConfigError("synth spec: counts must be positive");
  }
  if (noise_sigma < 0 || participant_offset_sigma < 0 || class_mean_amplitude < 0 ||
      pattern_amplitude < 0) {
    throw ConfigError("synth spec: scales must be non-negative");
  }
  for (double m : {mobility_nursing, mobility_non_nursing}) {
    if (m < 0.0 || m > 1.0) throw ConfigError("synth spec: mobility must be in [0,1]");
  }
  for (double f : {nursing_fraction, night_fraction, fg_active_fraction}) {
    if (f < 0.0 || f > 1.0) throw ConfigError("synth spec: fractions must be in [0,1]");
  }
  if (frames_per_label < 1 || hop_ms < 1 || bucket_ms < 1) {
    throw ConfigError("synth spec: frame geometry must be positive");
  }
  if (static_cast<std::int64_t>(frames_per_label) * hop_ms > bucket_ms) {
    throw ConfigError("synth spec: frames_per_label*hop_ms exceeds bucket_ms");
  }
  if (pattern_dims < 0 || pattern_dims > kFeatureDim) {
    throw ConfigError("synth spec: pattern_dims out of range");
  }
}

SynthSpec spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth spec: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("synth spec: top level must be an object");

  SynthSpec s;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "kind") {
        const std::string k = value.get<std::string>();
        if (k == "basic") {
          s.kind = SynthSpec::Kind::basic;
        } else if (k == "temporal") {
          s.kind = SynthSpec::Kind::temporal;
        } else {
          throw ConfigError("synth spec: unknown kind '" + k + "'");
        }
      } else if (key == "num_participants") {
        s.num_participants = value.get<int>();
      } else if (key == "shifts_per_participant") {
        s.shifts_per_participant = value.get<int>();
      } else if (key == "labels_per_shift") {
        s.labels_per_shift = value.get<int>();
      } else if (key == "priors") {
        auto v = value.get<std::vector<double>>();
        if (v.size() != kNumScenes) {
          throw ConfigError("synth spec: priors needs 4 entries");
        }
        std::copy(v.begin(), v.end(), s.priors.begin());
      } else if (key == "class_mean_amplitude") {
        s.class_mean_amplitude = value.get<double>();
      } else if (key == "noise_sigma") {
        s.noise_sigma = value.get<double>();
      } else if (key == "participant_offset_sigma") {
        s.participant_offset_sigma = value.get<double>();
      } else if (key == "mobility_nursing") {
        s.mobility_nursing = value.get<double>();
      } else if (key == "mobility_non_nursing") {
        s.mobility_non_nursing = value.get<double>();
      } else if (key == "nursing_fraction") {
        s.nursing_fraction = value.get<double>();
      } else if (key == "night_fraction") {
        s.night_fraction = value.get<double>();
      } else if (key == "fg_active_fraction") {
        s.fg_active_fraction = value.get<double>();
      } else if (key == "rssi_margin_dbm") {
        s.rssi_margin_dbm = value.get<double>();
      } else if (key == "noisy_rssi") {
        s.noisy_rssi = value.get<bool>();
      } else if (key == "frames_per_label") {
        s.frames_per_label = value.get<int>();
      } else if (key == "hop_ms") {
        s.hop_ms = value.get<int>();
      } else if (key == "bucket_ms") {
        s.bucket_ms = value.get<std::int64_t>();
      } else if (key == "pattern_amplitude") {
        s.pattern_amplitude = value.get<double>();
      } else if (key == "pattern_dims") {
        s.pattern_dims = value.get<int>();
      } else if (key == "pattern_cycles") {
        auto v = value.get<std::vector<int>>();
        if (v.size() != kNumScenes) {
          throw ConfigError("synth spec: pattern_cycles needs 4 entries");
        }
        std::copy(v.begin(), v.end(), s.pattern_cycles.begin());
      } else if (key == "seed") {
        s.seed = value.get<std::uint64_t>();
      } else {
        throw ConfigError("synth spec: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth spec: bad value type: ") + e.what());
  }
  s.validate();
  return s;
}

std::string spec_to_json(const SynthSpec& spec) {
  json j;
  j["kind"] = spec.kind == SynthSpec::Kind::basic ? "basic" : "temporal";
  j["num_participants"] = spec.num_participants;
  j["shifts_per_participant"] = spec.shifts_per_participant;
  j["labels_per_shift"] = spec.labels_per_shift;
  j["priors"] = spec.priors;
  j["class_mean_amplitude"] = spec.class_mean_amplitude;
  j["noise_sigma"] = spec.noise_sigma;
  j["participant_offset_sigma"] = spec.participant_offset_sigma;
  j["mobility_nursing"] = spec.mobility_nursing;
  j["mobility_non_nursing"] = spec.mobility_non_nursing;
  j["nursing_fraction"] = spec.nursing_fraction;
  j["night_fraction"] = spec.night_fraction;
  j["fg_active_fraction"] = spec.fg_active_fraction;
  j["rssi_margin_dbm"] = spec.rssi_margin_dbm;
  j["noisy_rssi"] = spec.noisy_rssi;
  j["frames_per_label"] = spec.frames_per_label;
  j["hop_ms"] = spec.hop_ms;
  j["bucket_ms"] = spec.bucket_ms;
  j["pattern_amplitude"] = spec.pattern_amplitude;
  j["pattern_dims"] = spec.pattern_dims;
  j["pattern_cycles"] = spec.pattern_cycles;
  j["seed"] = spec.seed;
  return j.dump(2) + "\n";
}

std::vector<SceneLabel> scene_trajectory(
    const std::array<double, kNumScenes>& priors, double mobility, int length,
    Rng& rng) {
  const std::vector<double> p(priors.begin(), priors.end());
  std::vector<SceneLabel> out;
  out.reserve(static_cast<std::size_t>(length));
  SceneLabel cur = scene_from_index(static_cast<int>(rng.categorical(p)));
  out.push_back(cur);
  for (int t = 1; t < length; ++t) {
    if (rng.bernoulli(mobility)) {
      cur = scene_from_index(static_cast<int>(rng.categorical(p)));
    }
    out.push_back(cur);
  }
  return out;
}

std::vector<LedgerRow> read_ledger(const std::filesystem::path& path) {
  csv::FileLines file = csv::read_lines(path);
  if (file.lines.empty() ||
      std::string(file.lines[0]) != "participant_id,shift_id,ts_ms,scene") {
    throw ParseError(path.string() + ": bad ledger header");
  }
  std::vector<LedgerRow> rows;
  std::vector<std::string_view> fields;
  for (std::size_t i = 1; i < file.lines.size(); ++i) {
    csv::split(file.lines[i], fields);
    if (fields.size() != 4) csv::fail(path, i + 1, "expected 4 columns");
    LedgerRow r;
    r.participant_id = std::string(fields[0]);
    r.shift_id = std::string(fields[1]);
    r.ts_ms = csv::parse_i64(fields[2], path, i + 1);
    auto scene = scene_from_name(fields[3]);
    if (!scene) csv::fail(path, i + 1, "unknown scene '" + std::string(fields[3]) + "'");
    r.scene = *scene;
    rows.push_back(std::move(r));
  }
  return rows;
}

GenerateSummary generate_corpus(const SynthSpec& spec,
                                const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  spec.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) {
    throw IoError("cannot create output directory " + out_dir.string());
  }

  // rooms.csv: one beacon room per scene
  {
    csv::Writer w;
    w.field("room_id");
    w.field("scene");
    w.end_row();
    for (int c = 0; c < kNumScenes; ++c) {
      w.field(kRoomIds[c]);
      w.field(scene_name(scene_from_index(c)));
      w.end_row();
    }
    w.save(out_dir / "rooms.csv");
  }

  csv::Writer participants_csv;
  participants_csv.field("participant_id");
  participants_csv.field("shift");
  participants_csv.field("role");
  participants_csv.end_row();
  csv::Writer ledger;
  ledger.field("participant_id");
  ledger.field("shift_id");
  ledger.field("ts_ms");
  ledger.field("scene");
  ledger.end_row();

  GenerateSummary summary;
  std::string feature_header = "ts_ms";
  for (int d = 0; d < kFeatureDim; ++d) {
    char buf[8];
    std::snprintf(buf, sizeof buf, ",f%03d", d);
    feature_header += buf;
  }

  for (int p = 0; p < spec.num_participants; ++p) {
    const std::string pid = participant_name(p);
    const bool nursing = spread_hit(p, spec.nursing_fraction, 0.0);
    const bool night = spread_hit(p, spec.night_fraction, 0.5);
    const double mobility =
        nursing ? spec.mobility_nursing : spec.mobility_non_nursing;
    participants_csv.field(pid);
    participants_csv.field(night ? "night" : "day");
    participants_csv.field(nursing ? "nursing" : "non_nursing");
    participants_csv.end_row();

    Rng participant_rng(derive_seed(spec.seed, "participant", p));
    std::vector<double> offset(kFeatureDim);
    {
      Rng offset_rng = participant_rng.derive("offset");
      for (auto& v : offset) {
        v = offset_rng.normal(0.0, spec.participant_offset_sigma);
      }
    }

    for (int sh = 0; sh < spec.shifts_per_participant; ++sh) {
      const std::string sid = shift_name_id(sh);
      const fs::path dir = out_dir / pid / sid;
      fs::create_directories(dir);

      Rng traj_rng = participant_rng.derive("traj", sh);
      const std::vector<SceneLabel> trajectory =
          scene_trajectory(spec.priors, mobility, spec.labels_per_shift, traj_rng);

      // rssi: one ping per room per label step, trajectory room strongest
      {
        Rng rssi_rng = participant_rng.derive("rssi", sh);
        csv::Writer w;
        w.field("ts_ms");
        w.field("room_id");
        w.field("rssi_dbm");
        w.end_row();
        for (int t = 0; t < spec.labels_per_shift; ++t) {
          const std::int64_t ts = t * spec.bucket_ms;
          const int win = scene_index(trajectory[t]);
          for (int c = 0; c < kNumScenes; ++c) {
            double rssi = -40.0;
            if (c != win) {
              rssi = -40.0 - spec.rssi_margin_dbm - rssi_rng.uniform(0.0, 4.0);
              if (spec.noisy_rssi) {
                rssi += rssi_rng.uniform(0.0, spec.rssi_margin_dbm + 4.0);
              }
            }
            w.field(ts);
            w.field(kRoomIds[c]);
            w.field(rssi);
            w.end_row();
          }
        }
        w.save(dir / "rssi.csv");
      }

      // fg mask: a full-segment interval on a random subset of label steps
      {
        Rng fg_rng = participant_rng.derive("fg", sh);
        csv::Writer w;
        w.field("start_ms");
        w.field("end_ms");
        w.end_row();
        const std::int64_t span =
            static_cast<std::int64_t>(spec.frames_per_label) * spec.hop_ms;
        for (int t = 0; t < spec.labels_per_shift; ++t) {
          if (fg_rng.bernoulli(spec.fg_active_fraction)) {
            const std::int64_t ts = t * spec.bucket_ms;
            w.field(ts);
            w.field(ts + span);
            w.end_row();
          }
        }
        w.save(dir / "fgmask.csv");
      }

      // features: frames_per_label frames per labeled bucket at hop_ms
      {
        Rng feat_rng = participant_rng.derive("feat", sh);
        std::string buf = feature_header;
        buf += '\n';
        buf.reserve(buf.size() + static_cast<std::size_t>(spec.labels_per_shift) *
                                     spec.frames_per_label * kFeatureDim * 8);
        for (int t = 0; t < spec.labels_per_shift; ++t) {
          const std::int64_t ts0 = t * spec.bucket_ms;
          const int scene = scene_index(trajectory[t]);
          double phase = 0.0;
          if (spec.kind == SynthSpec::Kind::temporal) {
            phase = feat_rng.uniform(0.0, 2.0 * std::numbers::pi);
          }
          for (int f = 0; f < spec.frames_per_label; ++f) {
            char ts_buf[24];
            auto [ptr, _] = std::to_chars(ts_buf, ts_buf + sizeof ts_buf,
                                          ts0 + static_cast<std::int64_t>(f) * spec.hop_ms);
            buf.append(ts_buf, ptr);
            for (int d = 0; d < kFeatureDim; ++d) {
              double v = class_mean(spec, scene, d) + offset[d] +
                         feat_rng.normal(0.0, spec.noise_sigma);
              if (spec.kind == SynthSpec::Kind::temporal && d < spec.pattern_dims) {
                v += spec.pattern_amplitude *
                     std::sin(2.0 * std::numbers::pi * spec.pattern_cycles[scene] *
                                  f / spec.frames_per_label +
                              phase);
              }
              buf += ',';
              append_fixed(buf, v);
            }
            buf += '\n';
          }
          ledger.field(pid);
          ledger.field(sid);
          ledger.field(ts0);
          ledger.field(scene_name(trajectory[t]));
          ledger.end_row();
          ++summary.labels;
        }
        csv::write_file_atomic(dir / "features.csv", buf);
      }
      ++summary.shifts;
    }
    ++summary.participants;
  }
  summary.participants = spec.num_participants;

  participants_csv.save(out_dir / "participants.csv");
  ledger.save(out_dir / "ledger.csv");
  csv::write_file_atomic(out_dir / "synthspec.json", spec_to_json(spec));
  return summary;
}

GenerateSummary generate_temporal_corpus(SynthSpec spec,
                                         const std::filesystem::path& out_dir) {
  spec.kind = SynthSpec::Kind::temporal;
  return generate_corpus(spec, out_dir);
}

}  // namespace egoscene::synth
