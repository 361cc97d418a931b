#pragma once

// Temporal-neighborhood event filter. An event on channel c passes when at
// least n_th earlier events of c (passed or blocked, either polarity) fall in
// [t - tau, t), and, with a refractory period, no event of c passed during
// [t - t_ref, t). Setting t_ref to 1 ms turns the filter into a spike
// detector that reports one event per action potential.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "evdec/events.hpp"

namespace evdec {

inline constexpr std::uint64_t kSpikeDetectorRefractoryUs = 1000;

struct FilterParams {
  std::uint32_t n_th = 2;
  std::uint64_t tau_us = 500;
  std::uint64_t t_ref_us = 0;  // 0 disables refraction

  /// Throws ConfigError if tau_us is zero.
  void validate() const;

  static FilterParams spike_detector(std::uint32_t n_th = 2, std::uint64_t tau_us = 500) {
    return {n_th, tau_us, kSpikeDetectorRefractoryUs};
  }
};

/// Recent history of one channel: run-length groups of equal timestamps in a
/// fixed ring. Only as many groups are kept as needed to decide whether n_th
/// events precede the newest timestamp.
class ChannelWindow {
 public:
  explicit ChannelWindow(std::uint32_t n_th = 0);

  /// Number of recorded events with timestamp in [t - tau, t), saturated at
  /// n_th. `t` must not precede the newest recorded timestamp.
  std::uint32_t count_before(std::uint64_t t, std::uint64_t tau_us) const;
  void record(std::uint64_t t);
  void clear();

  std::optional<std::uint64_t> last_pass;

 private:
  struct Group {
    std::uint64_t timestamp;
    std::uint32_t count;
  };
  const Group& at(std::size_t i) const { return ring_[(head_ + i) % ring_.size()]; }
  Group& at(std::size_t i) { return ring_[(head_ + i) % ring_.size()]; }

  std::uint32_t n_th_;
  std::vector<Group> ring_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  std::uint64_t held_ = 0;  // events in all groups except the newest
};

/// Streaming filter over interleaved channels.
class EventFilter {
 public:
  EventFilter(std::size_t n_channels, FilterParams params);

  /// Records `e` and returns whether it passes. Throws DomainError if `e`
  /// precedes an earlier event of its channel.
  bool process(const Event& e);
  void reset();

  const FilterParams& params() const noexcept { return params_; }

 private:
  FilterParams params_;
  std::vector<ChannelWindow> windows_;
  std::vector<std::uint64_t> newest_;
  std::vector<bool> seen_;
};

EventStream filter_events(const EventStream& stream, const FilterParams& params);

/// filter_events with the 1 ms refractory period.
EventStream detect_spikes(const EventStream& stream, std::uint32_t n_th = 2,
                          std::uint64_t tau_us = 500);

struct CompressionRatio {
  std::size_t raw = 0;
  std::size_t filtered = 0;

  bool is_infinite() const noexcept { return filtered == 0; }
  double value() const noexcept {
    return is_infinite() ? std::numeric_limits<double>::infinity()
                         : static_cast<double>(raw) / static_cast<double>(filtered);
  }
};

/// Throws DomainError when `raw` is empty.
CompressionRatio compression_ratio(const EventStream& raw, const EventStream& filtered);

}  // namespace evdec
