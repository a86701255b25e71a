#pragma once

#include <filesystem>
#include <vector>

#include "egoscene/types.hpp"

namespace egoscene {

// Binary segment store: magic "EGSG", u32 version, u64 count, then one
// record per segment (ids, timestamp, label, fg flag, L, and the L x F
// f32 matrix). Little-endian.
void write_segment_store(const std::filesystem::path& path,
                         const std::vector<Segment>& segments);

std::vector<Segment> read_segment_store(const std::filesystem::path& path);

}  // namespace egoscene
