#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace evdec {

enum class Polarity : std::int8_t { Off = -1, On = 1 };

/// One address event from the sensing front-end.
///
/// Member order defines the stream's total order: timestamp, then channel,
/// then polarity (OFF before ON).
struct Event {
  std::uint64_t timestamp_us = 0;
  std::uint16_t channel = 0;
  Polarity polarity = Polarity::On;

  auto operator<=>(const Event&) const = default;
};

/// A sorted, validated sequence of events recorded on `n_channels` channels.
class EventStream {
 public:
  EventStream() = default;

  /// Throws DomainError if the events are out of order, reference a channel
  /// outside [0, n_channels), or lie past `duration_us`.
  EventStream(std::size_t n_channels, std::uint64_t duration_us,
              std::vector<Event> events);

  /// Sorts `events` into stream order first. `resorted`, when given, reports
  /// whether the input order had to change.
  static EventStream from_unordered(std::size_t n_channels,
                                    std::uint64_t duration_us,
                                    std::vector<Event> events,
                                    bool* resorted = nullptr);

  std::size_t n_channels() const noexcept { return n_channels_; }
  std::uint64_t duration_us() const noexcept { return duration_us_; }
  std::span<const Event> events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

  bool operator==(const EventStream&) const = default;

 private:
  std::size_t n_channels_ = 1;
  std::uint64_t duration_us_ = 0;
  std::vector<Event> events_;
};

/// Sorts in place with the deterministic tie-break. Returns true if the order
/// changed.
bool sort_events(std::vector<Event>& events);

/// Ground-truth spike times per channel.
struct SpikeTrain {
  std::size_t n_channels = 0;
  std::uint64_t duration_us = 0;
  std::vector<std::vector<std::uint64_t>> spike_times_us;

  SpikeTrain() = default;
  SpikeTrain(std::size_t channels, std::uint64_t duration)
      : n_channels(channels), duration_us(duration), spike_times_us(channels) {}

  /// Throws DomainError unless every channel's times are strictly increasing
  /// and within the duration.
  void validate() const;
  std::size_t total_spikes() const noexcept;

  bool operator==(const SpikeTrain&) const = default;
};

struct StreamStats {
  std::vector<std::size_t> per_channel;
  std::size_t total = 0;
  double rate_hz = 0.0;
};

StreamStats stream_stats(const EventStream& stream);

}  // namespace evdec
