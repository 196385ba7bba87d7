#pragma once

#include <filesystem>
#include <vector>

#include "gazekit/model.hpp"

namespace gazekit {

/// Trained parameters plus the crop schedule they were trained with
/// (empty when the producer did not record one).
struct Checkpoint {
    BackboneParams params;
    std::vector<int> crops;
};

/// Flat binary checkpoint: magic "GZK1", then one record per tensor of
/// u32 name length, name bytes, u32 rank, u64 dims, little-endian f64 data.
/// Model configuration travels as scalar "config/..." tensors. The file is
/// written to a temporary path and renamed, so a failed run never leaves a
/// partial checkpoint.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gazekit
