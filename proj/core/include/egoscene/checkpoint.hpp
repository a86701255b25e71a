#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "egoscene/model.hpp"

namespace egoscene {

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::uint32_t epoch = 0;
  float val_loss = 0.0f;
};

// Little-endian binary: magic "EGSC", u32 version, length-prefixed spec
// block (kind, dims, training metadata), then per-tensor records
// (name, rank, dims, f32 payload). Save-load-save is byte identical.
void save_checkpoint(Model<float>& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path);

Model<float> load_checkpoint(const std::filesystem::path& path,
                             CheckpointMeta* meta = nullptr,
                             std::optional<ModelKind> expected_kind = {});

}  // namespace egoscene
