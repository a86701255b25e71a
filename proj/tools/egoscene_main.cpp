// egoscene: synthetic-data acoustic scene pipeline driver.
//
// Subcommands: synth, mine, train-cv, dynamics, report.
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "egoscene/checkpoint.hpp"
#include "egoscene/csv.hpp"
#include "egoscene/dynamics.hpp"
#include "egoscene/experiment.hpp"
#include "egoscene/gemm.hpp"
#include "egoscene/ingest.hpp"
#include "egoscene/log.hpp"
#include "egoscene/runconfig.hpp"
#include "egoscene/segment_store.hpp"
#include "egoscene/synth.hpp"

namespace fs = std::filesystem;
using namespace egoscene;

namespace {

struct SeedOverride {
  bool set = false;
  std::uint64_t value = 0;
};

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open " + path.string());
  }
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

fs::path store_path(const RunConfig& cfg) {
  return cfg.output_dir / ("segments_" + std::string(fg_mode_name(cfg.mode)) + ".egsg");
}

int run_synth(const std::string& spec_path, const std::string& out_dir,
              const SeedOverride& seed) {
  synth::SynthSpec spec = synth::spec_from_json(read_text_file(spec_path));
  if (seed.set) spec.seed = seed.value;
  const synth::GenerateSummary s = synth::generate_corpus(spec, out_dir);
  std::cout << "generated " << s.participants << " participants, " << s.shifts
            << " shifts, " << s.labels << " labels -> " << out_dir << "\n";
  return 0;
}

int run_mine(const RunConfig& cfg) {
  const ingest::DatasetLoad load = ingest::load_dataset(cfg.data_root, cfg.mode);
  fs::create_directories(cfg.output_dir);

  csv::Writer report;
  report.field("participant_id");
  report.field("shift_id");
  report.field("labels");
  report.field("emitted");
  report.field("skipped");
  for (int c = 0; c < kNumScenes; ++c) report.field(scene_name(scene_from_index(c)));
  report.end_row();

  std::vector<Segment> all;
  std::array<std::int64_t, kNumScenes> totals{};
  std::int64_t total_labels = 0, total_skipped = 0;
  std::map<std::pair<std::string, std::string>, std::array<std::int64_t, kNumScenes>>
      kept_classes;
  for (const auto& p : load.corpus.participants) {
    for (const auto& s : p.segments) {
      if (s.label) {
        ++kept_classes[{s.participant_id, s.shift_id}][scene_index(*s.label)];
      }
      all.push_back(s);
    }
  }
  for (const auto& rep : load.reports) {
    report.field(rep.participant_id);
    report.field(rep.shift_id);
    report.field(rep.mining.labels);
    report.field(rep.kept);
    report.field(rep.mining.skipped);
    const auto& kept = kept_classes[{rep.participant_id, rep.shift_id}];
    for (int c = 0; c < kNumScenes; ++c) {
      report.field(kept[c]);
      totals[c] += kept[c];
    }
    report.end_row();
    total_labels += rep.mining.labels;
    total_skipped += rep.mining.skipped;
    LOG_INFO("mined " << rep.participant_id << "/" << rep.shift_id << ": "
                      << rep.kept << " segments, " << rep.mining.skipped
                      << " skipped");
  }
  report.field("TOTAL");
  report.field("");
  report.field(total_labels);
  report.field(static_cast<std::int64_t>(all.size()));
  report.field(total_skipped);
  for (int c = 0; c < kNumScenes; ++c) report.field(totals[c]);
  report.end_row();

  write_segment_store(store_path(cfg), all);
  report.save(cfg.output_dir /
              ("mining_report_" + std::string(fg_mode_name(cfg.mode)) + ".csv"));
  std::cout << "mined " << all.size() << " segments (" << fg_mode_name(cfg.mode)
            << ") -> " << store_path(cfg).string() << "\n";
  return 0;
}

Corpus corpus_from_store(const RunConfig& cfg, bool require_labels) {
  const fs::path participants_csv = cfg.data_root / "participants.csv";
  if (!fs::exists(participants_csv)) {
    throw ConfigError("missing participants.csv under " + cfg.data_root.string());
  }
  const auto metas = ingest::read_participants(participants_csv);
  std::map<std::string, ParticipantMeta> meta_by_id;
  for (const auto& m : metas) meta_by_id[m.participant_id] = m;

  std::vector<Segment> segments = read_segment_store(store_path(cfg));
  std::map<std::string, std::vector<Segment>> grouped;
  for (auto& s : segments) {
    if (require_labels && !s.label) {
      throw Error("segment store contains unlabeled segments; cannot train");
    }
    if (!meta_by_id.count(s.participant_id)) {
      throw ConfigError("participant " + s.participant_id +
                        " missing from participants.csv");
    }
    grouped[s.participant_id].push_back(std::move(s));
  }

  Corpus corpus;
  for (auto& [pid, segs] : grouped) {
    ParticipantData p;
    p.meta = meta_by_id.at(pid);
    std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) {
      return std::tie(a.shift_id, a.start_ts_ms) < std::tie(b.shift_id, b.start_ts_ms);
    });
    std::map<std::string, SceneSequence> seqs;
    for (const auto& s : segs) {
      if (!s.label) continue;
      auto& seq = seqs[s.shift_id];
      seq.participant_id = pid;
      seq.shift_id = s.shift_id;
      seq.entries.emplace_back(s.start_ts_ms, *s.label);
    }
    p.segments = std::move(segs);
    for (auto& [sid, seq] : seqs) p.sequences.push_back(std::move(seq));
    corpus.participants.push_back(std::move(p));
  }
  return corpus;
}

void write_confusion(const fs::path& path,
                     const std::array<std::array<double, kNumScenes>, kNumScenes>& m) {
  csv::Writer w;
  w.field("true\\pred");
  for (int c = 0; c < kNumScenes; ++c) w.field(scene_name(scene_from_index(c)));
  w.end_row();
  for (int r = 0; r < kNumScenes; ++r) {
    w.field(scene_name(scene_from_index(r)));
    for (int c = 0; c < kNumScenes; ++c) w.field(m[r][c]);
    w.end_row();
  }
  w.save(path);
}

int run_train_cv(const RunConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  const fs::path marker = cfg.output_dir / "INCOMPLETE";
  {
    std::ofstream m(marker);
    m << "train-cv in progress\n";
  }

  Corpus corpus = corpus_from_store(cfg, /*require_labels=*/true);

  experiment::TrainConfig tcfg = cfg.train;
  tcfg.seed = cfg.seed;

  csv::Writer report;
  report.field("model");
  report.field("mode");
  report.field("params");
  report.field("mean_acc");
  for (int f = 0; f < cfg.folds; ++f) report.field("acc_fold" + std::to_string(f));
  report.end_row();

  for (ModelKind kind : cfg.models) {
    auto hook = [&](int fold, Model<float>& model,
                    const experiment::FoldRecord& rec) {
      CheckpointMeta meta;
      meta.seed = derive_seed(cfg.seed, "fold", fold);
      meta.epoch = static_cast<std::uint32_t>(rec.train_result.best_epoch);
      meta.val_loss = static_cast<float>(rec.train_result.best_val_loss);
      char name[64];
      std::snprintf(name, sizeof name, "checkpoint_%s_fold%d.ckpt",
                    std::string(model_kind_name(kind)).c_str(), fold);
      save_checkpoint(model, meta, cfg.output_dir / name);

      csv::Writer curves;
      curves.field("epoch");
      curves.field("train_loss");
      curves.field("val_loss");
      curves.end_row();
      for (const auto& pt : rec.train_result.curve) {
        curves.field(static_cast<std::int64_t>(pt.epoch));
        curves.field(pt.train_loss);
        curves.field(pt.val_loss);
        curves.end_row();
      }
      char cname[64];
      std::snprintf(cname, sizeof cname, "curves_%s_%d.csv",
                    std::string(model_kind_name(kind)).c_str(), fold);
      curves.save(cfg.output_dir / cname);
      LOG_INFO(model_kind_name(kind) << " fold " << fold << " acc "
                                     << rec.accuracy);
    };

    const experiment::ModelReport mr =
        experiment::cross_validate(corpus, kind, cfg.folds, tcfg, hook);

    report.field(model_kind_name(kind));
    report.field(fg_mode_name(cfg.mode));
    report.field(static_cast<std::int64_t>(mr.param_count));
    report.field(mr.mean_accuracy);
    for (const auto& f : mr.folds) report.field(f.accuracy);
    report.end_row();

    write_confusion(cfg.output_dir /
                        ("confusion_" + std::string(model_kind_name(kind)) + "_" +
                         std::string(fg_mode_name(cfg.mode)) + ".csv"),
                    mr.mean_confusion);
    std::cout << model_kind_name(kind) << " (" << fg_mode_name(cfg.mode)
              << "): mean accuracy " << mr.mean_accuracy << " over " << cfg.folds
              << " folds\n";
  }

  report.save(cfg.output_dir / "report.csv");
  fs::remove(marker);
  return 0;
}

int run_dynamics(const RunConfig& cfg, const std::string& checkpoint_path) {
  Model<float> model = load_checkpoint(checkpoint_path);
  Corpus corpus = corpus_from_store(cfg, /*require_labels=*/false);
  fs::create_directories(cfg.output_dir);

  std::map<std::string, ParticipantMeta> meta;
  for (const auto& p : corpus.participants) meta[p.meta.participant_id] = p.meta;

  std::vector<dynamics::ChangeStats> stats;
  for (const auto& p : corpus.participants) {
    // per participant-shift segment lists, sorted by construction
    std::map<std::string, std::vector<const Segment*>> by_shift;
    for (const auto& s : p.segments) by_shift[s.shift_id].push_back(&s);
    for (const auto& [sid, segs] : by_shift) {
      SceneSequence true_seq;
      true_seq.participant_id = p.meta.participant_id;
      true_seq.shift_id = sid;
      for (const Segment* s : segs) {
        if (s->label) true_seq.entries.emplace_back(s->start_ts_ms, *s->label);
      }
      if (!true_seq.entries.empty()) {
        stats.push_back({p.meta.participant_id, sid,
                         dynamics::normalized_changes(true_seq),
                         static_cast<std::int64_t>(true_seq.entries.size()),
                         dynamics::Source::true_labels});
      }
      const SceneSequence pred_seq = dynamics::predict_sequence(model, segs);
      if (!pred_seq.entries.empty()) {
        stats.push_back({p.meta.participant_id, sid,
                         dynamics::normalized_changes(pred_seq),
                         static_cast<std::int64_t>(pred_seq.entries.size()),
                         dynamics::Source::predicted});
      }
    }
  }

  // dynamics.csv: one row per participant-shift and source
  {
    csv::Writer w;
    w.field("participant_id");
    w.field("shift");
    w.field("role");
    w.field("source");
    w.field("T");
    w.field("delta");
    w.end_row();
    for (const auto& s : stats) {
      const auto& m = meta.at(s.participant_id);
      w.field(s.participant_id);
      w.field(shift_name(m.shift));
      w.field(role_name(m.role));
      w.field(dynamics::source_name(s.source));
      w.field(s.length);
      w.field(s.delta);
      w.end_row();
    }
    w.save(cfg.output_dir / "dynamics.csv");
  }

  // groups.csv over both groupings
  {
    csv::Writer w;
    w.field("grouping");
    w.field("group");
    w.field("source");
    w.field("n");
    w.field("mean_delta");
    w.end_row();
    for (auto grouping : {dynamics::Grouping::shift, dynamics::Grouping::role}) {
      for (const auto& g : dynamics::group_means(stats, meta, grouping)) {
        w.field(grouping == dynamics::Grouping::shift ? "shift" : "role");
        w.field(g.group);
        w.field(dynamics::source_name(g.source));
        w.field(static_cast<std::int64_t>(g.participants));
        w.field(g.mean_delta);
        w.end_row();
      }
    }
    w.save(cfg.output_dir / "groups.csv");
  }

  // per-group histograms, both the per-shift and the per-participant view
  auto in_group = [&](const dynamics::ChangeStats& s, const std::string& group) {
    const auto& m = meta.at(s.participant_id);
    return group == shift_name(m.shift) || group == role_name(m.role);
  };
  for (const std::string group : {"day", "night", "nursing", "non_nursing"}) {
    for (auto source : {dynamics::Source::true_labels, dynamics::Source::predicted}) {
      std::vector<double> per_shift;
      std::map<std::string, std::pair<double, int>> per_participant;
      for (const auto& s : stats) {
        if (s.source != source || !in_group(s, group)) continue;
        per_shift.push_back(s.delta);
        auto& acc = per_participant[s.participant_id];
        acc.first += s.delta;
        acc.second += 1;
      }
      auto write_hist = [&](const std::vector<double>& deltas, const fs::path& path) {
        const dynamics::Histogram h = dynamics::histogram_deltas(deltas, 10);
        csv::Writer w;
        w.field("bin_lo");
        w.field("bin_hi");
        w.field("count");
        w.end_row();
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
          w.field(b * h.bin_width);
          w.field((b + 1) * h.bin_width);
          w.field(h.counts[b]);
          w.end_row();
        }
        w.raw("mean=");
        w.field(h.mean);
        w.raw("\n");
        w.save(path);
      };
      const std::string base = "hist_" + group + "_" +
                               std::string(dynamics::source_name(source));
      write_hist(per_shift, cfg.output_dir / (base + ".csv"));
      std::vector<double> per_p;
      for (const auto& [pid, acc] : per_participant) {
        per_p.push_back(acc.first / acc.second);
      }
      write_hist(per_p, cfg.output_dir / (base + "_byparticipant.csv"));
    }
  }

  std::cout << "dynamics written to " << cfg.output_dir.string() << "\n";
  return 0;
}

int run_report(const RunConfig& cfg) {
  const fs::path path = cfg.output_dir / "report.csv";
  csv::FileLines file = csv::read_lines(path);
  if (file.lines.empty()) {
    throw Error("empty report " + path.string());
  }
  std::vector<std::string_view> fields;
  for (const auto& line : file.lines) {
    csv::split(line, fields);
    for (std::size_t i = 0; i < std::min<std::size_t>(fields.size(), 4); ++i) {
      std::printf("%-12s", std::string(fields[i]).c_str());
    }
    std::printf("\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"egocentric acoustic scene pipeline (synthetic-data toolkit)"};
  app.require_subcommand(1);

  SeedOverride seed;
  int jobs = 0;
  std::string mode_flag;
  std::string config_path;

  auto add_common = [&](CLI::App* cmd, bool with_mode) {
    cmd->add_option("--config", config_path, "JSON run configuration")->required();
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&seed](std::uint64_t v) { seed = {true, v}; },
        "override the config seed");
    cmd->add_option("--jobs", jobs, "worker threads (0 = default)");
    if (with_mode) {
      cmd->add_option("--mode", mode_flag, "fg_active|full (overrides config)");
    }
  };

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string spec_path, out_dir;
  synth_cmd->add_option("--spec", spec_path, "synth spec JSON")->required();
  synth_cmd->add_option("--out", out_dir, "output dataset directory")->required();
  synth_cmd->add_option_function<std::uint64_t>(
      "--seed", [&seed](std::uint64_t v) { seed = {true, v}; },
      "override the spec seed");

  auto* mine_cmd = app.add_subcommand("mine", "localize, mine and normalize segments");
  add_common(mine_cmd, true);
  auto* train_cmd = app.add_subcommand("train-cv", "cross-validated training and evaluation");
  add_common(train_cmd, true);
  auto* dyn_cmd = app.add_subcommand("dynamics", "scene-change dynamics reports");
  add_common(dyn_cmd, true);
  std::string checkpoint_path;
  dyn_cmd->add_option("--checkpoint", checkpoint_path, "trained model checkpoint")->required();
  auto* report_cmd = app.add_subcommand("report", "print the evaluation report");
  add_common(report_cmd, true);

  std::vector<std::string> model_flags;
  train_cmd->add_option("--model", model_flags, "mlp|tdnn-small|tdnn-big (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth_cmd->parsed()) {
      return run_synth(spec_path, out_dir, seed);
    }

    RunConfig cfg = load_config(config_path);
    if (seed.set) cfg.seed = seed.value;
    if (jobs > 0) cfg.jobs = jobs;
    if (!mode_flag.empty()) cfg.mode = fg_mode_from_name(mode_flag);
    if (!model_flags.empty()) {
      cfg.models.clear();
      for (const auto& m : model_flags) {
        auto kind = model_kind_from_name(m);
        if (!kind) throw ConfigError("unknown model '" + m + "'");
        cfg.models.push_back(*kind);
      }
    }
    nn::set_num_threads(cfg.jobs);

    if (mine_cmd->parsed()) return run_mine(cfg);
    if (train_cmd->parsed()) return run_train_cv(cfg);
    if (dyn_cmd->parsed()) return run_dynamics(cfg, checkpoint_path);
    if (report_cmd->parsed()) return run_report(cfg);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
