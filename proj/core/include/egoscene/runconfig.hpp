#pragma once

#include <filesystem>
#include <vector>

#include "egoscene/experiment.hpp"
#include "egoscene/ingest.hpp"
#include "egoscene/model.hpp"

namespace egoscene {

// JSON run configuration shared by the mine/train-cv/dynamics subcommands.
// Parsing is strict: unknown keys are rejected.
struct RunConfig {
  std::filesystem::path data_root;
  std::filesystem::path output_dir;
  ingest::FgMode mode = ingest::FgMode::full;
  std::vector<ModelKind> models = {ModelKind::mlp_baseline,
                                   ModelKind::tdnn_small, ModelKind::tdnn_big};
  int folds = 10;
  experiment::TrainConfig train;
  std::uint64_t seed = 1;
  int jobs = 0;  // 0: library default thread count
};

RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

std::string_view fg_mode_name(ingest::FgMode mode);
ingest::FgMode fg_mode_from_name(std::string_view name);

}  // namespace egoscene
