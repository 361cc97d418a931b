#pragma once

#include <cstdint>
#include <filesystem>

#include "evdec/decoder_model.hpp"

namespace evdec {

/// Model file (little-endian):
///   "NDEC" | u16 version=1 | u8 kind | u64 config_hash | u32 n_tensors
///   per tensor: u16 name_len | name | u32 rows | u32 cols
///   f32 values of every tensor, in table order
///   u32 json_len | JSON {"spec": ..., "seed": ..., "training": ...}
struct ModelFile {
  DecoderModel model;
  std::uint64_t config_hash = 0;
};

std::string serialize_model(const DecoderModel& model, std::uint64_t config_hash = 0);
ModelFile deserialize_model(std::string_view bytes);

void write_model(const DecoderModel& model, const std::filesystem::path& path,
                 std::uint64_t config_hash = 0);
ModelFile read_model(const std::filesystem::path& path);

}  // namespace evdec
