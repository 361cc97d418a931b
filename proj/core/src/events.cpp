#include "evdec/events.hpp"

#include <algorithm>
#include <string>

#include "evdec/error.hpp"

namespace evdec {

namespace {

void check_events(std::size_t n_channels, std::uint64_t duration_us,
                  const std::vector<Event>& events) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.channel >= n_channels) {
      throw DomainError("event " + std::to_string(i) + ": channel " +
                        std::to_string(e.channel) + " >= n_channels " +
                        std::to_string(n_channels));
    }
    if (e.polarity != Polarity::On && e.polarity != Polarity::Off) {
      throw DomainError("event " + std::to_string(i) + ": invalid polarity");
    }
    if (e.timestamp_us > duration_us) {
      throw DomainError("event " + std::to_string(i) + ": timestamp " +
                        std::to_string(e.timestamp_us) + " past duration " +
                        std::to_string(duration_us));
    }
    if (i > 0 && e < events[i - 1]) {
      throw DomainError("event " + std::to_string(i) + " is out of order");
    }
  }
}

}  // namespace

EventStream::EventStream(std::size_t n_channels, std::uint64_t duration_us,
                         std::vector<Event> events)
    : n_channels_(n_channels), duration_us_(duration_us), events_(std::move(events)) {
  if (n_channels_ == 0 || n_channels_ > 0xFFFF) {
    throw DomainError("n_channels must be in [1, 65535], got " +
                      std::to_string(n_channels_));
  }
  check_events(n_channels_, duration_us_, events_);
}

EventStream EventStream::from_unordered(std::size_t n_channels,
                                        std::uint64_t duration_us,
                                        std::vector<Event> events,
                                        bool* resorted) {
  const bool changed = sort_events(events);
  if (resorted != nullptr) *resorted = changed;
  return EventStream(n_channels, duration_us, std::move(events));
}

bool sort_events(std::vector<Event>& events) {
  if (std::is_sorted(events.begin(), events.end())) return false;
  std::stable_sort(events.begin(), events.end());
  return true;
}

void SpikeTrain::validate() const {
  if (spike_times_us.size() != n_channels) {
    throw DomainError("spike train has " + std::to_string(spike_times_us.size()) +
                      " channel lists, expected " + std::to_string(n_channels));
  }
  for (std::size_t ch = 0; ch < n_channels; ++ch) {
    const auto& times = spike_times_us[ch];
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (i > 0 && times[i] <= times[i - 1]) {
        throw DomainError("channel " + std::to_string(ch) +
                          ": spike times not strictly increasing at index " +
                          std::to_string(i));
      }
      if (times[i] > duration_us) {
        throw DomainError("channel " + std::to_string(ch) + ": spike at " +
                          std::to_string(times[i]) + " us past duration");
      }
    }
  }
}

std::size_t SpikeTrain::total_spikes() const noexcept {
  std::size_t n = 0;
  for (const auto& times : spike_times_us) n += times.size();
  return n;
}

StreamStats stream_stats(const EventStream& stream) {
  StreamStats stats;
  stats.per_channel.assign(stream.n_channels(), 0);
  for (const Event& e : stream.events()) ++stats.per_channel[e.channel];
  stats.total = stream.size();
  if (stream.duration_us() > 0) {
    stats.rate_hz = static_cast<double>(stats.total) /
                    (static_cast<double>(stream.duration_us()) * 1e-6);
  }
  return stats;
}

}  // namespace evdec
