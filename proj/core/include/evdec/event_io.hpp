#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>

#include "evdec/events.hpp"

namespace evdec {

enum class EventFormat { Binary, Csv };

/// `.csv` selects CSV, anything else the binary layout.
EventFormat format_for_path(const std::filesystem::path& path);

/// Binary layout (little-endian):
///   "NEVT" | u16 version=1 | u16 n_channels | u64 duration_us | u64 count
///   count x { u16 channel | u64 timestamp_us | i8 polarity }
inline constexpr std::size_t kEventHeaderBytes = 24;
inline constexpr std::size_t kEventRecordBytes = 11;
inline constexpr std::uint16_t kEventFormatVersion = 1;

struct ReadEventsResult {
  EventStream stream;
  bool resorted = false;
};

/// CSV input may omit the `# n_channels=.. duration_us=..` preamble that
/// write_events emits; `n_channels_hint` then bounds the channel range,
/// defaulting to the largest channel seen plus one.
ReadEventsResult read_events(const std::filesystem::path& path,
                             EventFormat format,
                             std::optional<std::size_t> n_channels_hint = {});

void write_events(const EventStream& stream, const std::filesystem::path& path,
                  EventFormat format);

}  // namespace evdec
