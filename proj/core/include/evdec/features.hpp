#pragma once

// Event-count features for the decoders and their alignment with kinematic
// targets.
//
//   frame      x_i(t)   = events of channel i in (t - T_bin, t]
//   segmented  c^k_i(t) = events of channel i in the k-th of b equal
//              sub-windows of (t - T_bin, t], k = 1 oldest, flattened
//              channel-major at index i*b + (k-1)
//   binary     u(x_i(t)) with T_bin = T_s
//
// Sample times are multiples of T_s starting at the first one >= T_bin; the
// warm-up before it is dropped.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evdec/events.hpp"
#include "evdec/synth.hpp"

namespace evdec {

enum class FeatureMode : std::uint8_t { Frame = 0, Segmented = 1, Binary = 2 };

const char* to_string(FeatureMode mode);
/// Throws ConfigError on an unknown name.
FeatureMode feature_mode_from_string(const std::string& name);

struct FeatureConfig {
  FeatureMode mode = FeatureMode::Frame;
  std::uint32_t t_bin_ms = 200;
  std::uint32_t t_s_ms = 4;
  std::uint32_t n_segments = 1;

  /// Every rule the config breaks, empty if valid.
  std::vector<std::string> violations() const;
  /// Throws ConfigError listing the violations.
  void validate() const;
  std::size_t width(std::size_t n_channels) const;
};

struct FeatureFrame {
  FeatureMode mode = FeatureMode::Frame;
  std::size_t n_channels = 0;
  std::uint32_t n_segments = 1;
  std::uint32_t t_bin_ms = 0;
  std::uint32_t t_s_ms = 0;
  std::size_t width = 0;
  std::vector<std::uint64_t> sample_times_us;
  std::vector<float> x;         // size() x width, row-major
  std::vector<float> y;         // size() x 2: (V_x, V_y)
  std::vector<std::uint32_t> reach_ids;

  std::size_t size() const noexcept { return sample_times_us.size(); }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(x).subspan(i * width, width);
  }
  std::span<const float> target(std::size_t i) const {
    return std::span<const float>(y).subspan(i * 2, 2);
  }
  std::size_t n_reaches() const noexcept;
  FeatureConfig config() const { return {mode, t_bin_ms, t_s_ms, n_segments}; }

  bool operator==(const FeatureFrame&) const = default;
};

FeatureFrame bin_counts(const EventStream& stream, const FeatureConfig& cfg);
FeatureFrame segmented_bin_counts(const EventStream& stream, const FeatureConfig& cfg);
FeatureFrame binarize_stream(const EventStream& stream, const FeatureConfig& cfg);

/// Dispatches on cfg.mode.
FeatureFrame extract_features(const EventStream& stream, const FeatureConfig& cfg);

/// Fills targets and reach ids: sample time t takes the velocity of the
/// trajectory sample covering (t - T_s, t]. Samples past the trajectory end
/// are dropped.
void attach_targets(FeatureFrame& frame, const ReachTrajectory& traj);

FeatureFrame featurize(const EventStream& stream, const FeatureConfig& cfg,
                       const ReachTrajectory& traj);

/// One event (ON) per spike, so ground-truth spikes share the event path.
EventStream spike_train_to_stream(const SpikeTrain& train);

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Chronological 50/25/25 split of reach indices. Throws ConfigError for
/// fewer than 4 reaches.
DatasetSplit split_reaches(std::size_t n_reaches);

/// Reaches from target changes, then split_reaches.
DatasetSplit segment_and_split(const ReachTrajectory& traj);

/// Rows whose reach id is in `reaches`, in their original order.
FeatureFrame select_reaches(const FeatureFrame& frame, std::span<const std::size_t> reaches);

}  // namespace evdec
