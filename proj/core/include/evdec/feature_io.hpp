#pragma once

#include <cstdint>
#include <filesystem>

#include "evdec/features.hpp"

namespace evdec {

/// Feature file (little-endian):
///   "NFEA" | u16 version=1 | u8 mode | u16 n_channels | u16 n_segments |
///   u32 t_bin_ms | u32 t_s_ms | u64 n_samples | u64 config_hash
///   f32 x[n_samples * width] | f32 y[n_samples * 2] | u32 reach_id[n_samples]
/// Sample times are implied: the first multiple of T_s >= T_bin, then every T_s.
struct FeatureFile {
  FeatureFrame frame;
  std::uint64_t config_hash = 0;
};

void write_features(const FeatureFrame& frame, const std::filesystem::path& path,
                    std::uint64_t config_hash = 0);
FeatureFile read_features(const std::filesystem::path& path);

}  // namespace evdec
