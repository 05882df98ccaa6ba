#pragma once

#include <filesystem>
#include <string>

#include "veal/dualbranch/model.hpp"

namespace veal::dualbranch {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// params.bin, little-endian:
//   "VEALCKPT" | u32 version
//   u32 n_config, then n_config u64 config fields in declaration order of
//     DualBranchConfig (bools as 0/1)
//   u32 n_sections, then per section in DualBranchParams::named() order:
//     u32 name_len, name bytes, u32 rank, rank x u64 dims, u64 count,
//     count x f32 values
//   u64 total f32 count
// Values are stored as float32; a loaded checkpoint holds the f32-rounded
// parameters.
struct Checkpoint {
  DualBranchConfig config;
  DualBranchParams params;
};

std::string checkpoint_bytes(const DualBranchConfig& config, const DualBranchParams& params);
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const DualBranchConfig& config,
                     const DualBranchParams& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace veal::dualbranch
