#pragma once

// Synthetic stand-ins for a reaching dataset: minimum-jerk reach kinematics,
// cosine-tuned Poisson spiking, a noisy multichannel waveform and a
// delta-modulation event encoder.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "evdec/events.hpp"

namespace evdec {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

struct Workspace {
  double half_width = 1.0;  // targets are drawn from [-w, w]^2
};

struct ReachOptions {
  double min_movement_ms = 600.0;
  double max_movement_ms = 1000.0;
  double hold_ms = 100.0;
  Vec2 start{};
};

/// Sampled hand kinematics. Sample i covers [i*T_s, (i+1)*T_s).
struct ReachTrajectory {
  std::uint64_t sample_period_us = 4000;
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;  // units/s, forward difference of positions
  std::vector<Vec2> target_positions;
  std::vector<std::size_t> reach_boundaries;  // first sample of each reach

  std::size_t size() const noexcept { return positions.size(); }
  std::size_t n_reaches() const noexcept { return reach_boundaries.size(); }
  std::uint64_t duration_us() const noexcept { return size() * sample_period_us; }
  /// Index of the reach containing sample i.
  std::size_t reach_of(std::size_t sample) const;
  /// Throws DomainError if lengths disagree, values are non-finite, or
  /// boundaries are not target changes.
  void validate() const;

  bool operator==(const ReachTrajectory&) const = default;
};

/// Reaches to uniformly drawn targets, each a minimum-jerk movement followed
/// by a hold at the target.
ReachTrajectory gen_reaches(std::size_t n_reaches, std::uint64_t sample_period_us,
                            const Workspace& workspace, std::uint64_t seed,
                            const ReachOptions& options = {});

/// Deterministic variant: one reach per target with the given movement
/// durations (ms).
ReachTrajectory reaches_through(std::span<const Vec2> targets,
                                std::span<const double> movement_ms,
                                std::uint64_t sample_period_us,
                                const ReachOptions& options = {});

/// Recomputes reach boundaries from target changes (sample 0 always opens a
/// reach).
std::vector<std::size_t> detect_reach_boundaries(std::span<const Vec2> targets);

/// CSV `t_us,x,y,vx,vy,target_x,target_y`, optionally preceded by one
/// `# comment` line. The reader skips leading `#` lines.
void write_trajectory_csv(const ReachTrajectory& traj, const std::filesystem::path& path,
                          const std::string& comment = {});
ReachTrajectory read_trajectory_csv(const std::filesystem::path& path);

struct TuningModel {
  std::vector<double> preferred_direction;  // radians
  std::vector<double> baseline_rate_hz;
  std::vector<double> modulation_depth;  // Hz per unit speed

  std::size_t n_channels() const noexcept { return preferred_direction.size(); }
  /// max(0, baseline + depth * |v| * cos(angle(v) - preferred)).
  double rate_hz(std::size_t channel, Vec2 velocity) const;
};

struct TuningRanges {
  double baseline_min_hz = 1.0;
  double baseline_max_hz = 3.0;
  double depth_min = 4.0;
  double depth_max = 8.0;
};

TuningModel make_tuning(std::size_t n_channels, std::uint64_t seed,
                        const TuningRanges& ranges = {});

struct SpikeOptions {
  std::uint64_t resolution_us = 100;   // thinning grid
  std::uint64_t refractory_us = 1000;  // absolute refractory period
};

/// Inhomogeneous Poisson spiking by Bernoulli thinning. The rate is held
/// piecewise constant over each trajectory sample.
SpikeTrain gen_spikes(const ReachTrajectory& traj, const TuningModel& tuning,
                      std::uint64_t seed, const SpikeOptions& options = {});

struct EncoderParams {
  double delta = 1.0;
  double spike_amplitude = 2.3;
  std::vector<double> spike_template;  // empty: biphasic_template(sample_rate_hz)
  double noise_std = 0.26;
  std::uint32_t sample_rate_hz = 24000;

  void validate() const;
  /// spike_template, or the default biphasic shape when none is set.
  std::vector<double> resolved_template() const;
};

/// 1 ms biphasic extracellular spike shape: a sharp trough normalized to -1
/// followed by a smaller positive rebound.
std::vector<double> biphasic_template(std::uint32_t sample_rate_hz);

struct MultiChannelSignal {
  std::uint32_t sample_rate_hz = 0;
  std::uint64_t duration_us = 0;
  std::vector<std::vector<double>> channels;

  std::size_t n_channels() const noexcept { return channels.size(); }
  std::size_t n_samples() const noexcept { return channels.empty() ? 0 : channels[0].size(); }
};

inline std::uint64_t sample_count(std::uint64_t duration_us, std::uint32_t sample_rate_hz) {
  return duration_us * sample_rate_hz / 1'000'000ULL;
}

/// Microsecond timestamp of sample `index`, floored.
inline std::uint64_t sample_time_us(std::uint64_t index, std::uint32_t sample_rate_hz) {
  return index * 1'000'000ULL / sample_rate_hz;
}

MultiChannelSignal synth_waveform(const SpikeTrain& spikes, const EncoderParams& params,
                                  std::uint64_t seed);

/// Delta modulation of every channel into ON/OFF events.
EventStream ncns_encode(const MultiChannelSignal& signal, const EncoderParams& params);

/// synth_waveform followed by ncns_encode, one channel at a time so the full
/// waveform is never held in memory. Bitwise identical to the two-step path.
EventStream synthesize_events(const SpikeTrain& spikes, const EncoderParams& params,
                              std::uint64_t seed);

/// Appends channel events for one sampled signal.
void encode_channel(std::span<const double> signal, std::uint16_t channel, double delta,
                    std::uint32_t sample_rate_hz, std::vector<Event>& out);

}  // namespace evdec
