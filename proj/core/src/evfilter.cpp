#include "evdec/evfilter.hpp"

#include <string>

#include "evdec/error.hpp"

namespace evdec {

void FilterParams::validate() const {
  if (tau_us == 0) throw ConfigError("filter tau_us must be > 0");
}

ChannelWindow::ChannelWindow(std::uint32_t n_th) : n_th_(n_th), ring_(n_th + 1) {}

std::uint32_t ChannelWindow::count_before(std::uint64_t t, std::uint64_t tau_us) const {
  if (n_th_ == 0) return 0;
  const std::uint64_t lo = t >= tau_us ? t - tau_us : 0;
  std::uint64_t count = 0;
  for (std::size_t i = size_; i-- > 0;) {
    const Group& g = at(i);
    if (g.timestamp >= t) continue;  // same-time events are not predecessors
    if (g.timestamp < lo) break;
    count += g.count;
    if (count >= n_th_) return n_th_;
  }
  return static_cast<std::uint32_t>(count);
}

void ChannelWindow::record(std::uint64_t t) {
  if (n_th_ == 0) return;
  if (size_ > 0 && at(size_ - 1).timestamp == t) {
    ++at(size_ - 1).count;
    return;
  }
  if (size_ > 0) held_ += at(size_ - 1).count;
  if (size_ == ring_.size()) {
    held_ -= at(0).count;
    head_ = (head_ + 1) % ring_.size();
    --size_;
  }
  at(size_) = {t, 1};
  ++size_;
  // Drop the oldest group while the rest still cover n_th predecessors.
  while (size_ > 1 && held_ - at(0).count >= n_th_) {
    held_ -= at(0).count;
    head_ = (head_ + 1) % ring_.size();
    --size_;
  }
}

void ChannelWindow::clear() {
  head_ = 0;
  size_ = 0;
  held_ = 0;
  last_pass.reset();
}

EventFilter::EventFilter(std::size_t n_channels, FilterParams params)
    : params_(params),
      windows_(n_channels, ChannelWindow(params.n_th)),
      newest_(n_channels, 0),
      seen_(n_channels, false) {
  params_.validate();
}

bool EventFilter::process(const Event& e) {
  if (e.channel >= windows_.size()) {
    throw DomainError("event channel " + std::to_string(e.channel) + " outside filter range");
  }
  if (seen_[e.channel] && e.timestamp_us < newest_[e.channel]) {
    throw DomainError("unsorted input: channel " + std::to_string(e.channel) + " went back to " +
                      std::to_string(e.timestamp_us) + " us");
  }
  seen_[e.channel] = true;
  newest_[e.channel] = e.timestamp_us;

  ChannelWindow& w = windows_[e.channel];
  const bool enough = w.count_before(e.timestamp_us, params_.tau_us) >= params_.n_th;
  const bool ready = !w.last_pass || e.timestamp_us >= *w.last_pass + params_.t_ref_us;
  w.record(e.timestamp_us);
  if (enough && ready) {
    w.last_pass = e.timestamp_us;
    return true;
  }
  return false;
}

void EventFilter::reset() {
  for (auto& w : windows_) w.clear();
  std::fill(newest_.begin(), newest_.end(), 0);
  std::fill(seen_.begin(), seen_.end(), false);
}

EventStream filter_events(const EventStream& stream, const FilterParams& params) {
  EventFilter filter(stream.n_channels(), params);
  std::vector<Event> out;
  for (const Event& e : stream.events()) {
    if (filter.process(e)) out.push_back(e);
  }
  return EventStream(stream.n_channels(), stream.duration_us(), std::move(out));
}

EventStream detect_spikes(const EventStream& stream, std::uint32_t n_th, std::uint64_t tau_us) {
  return filter_events(stream, FilterParams::spike_detector(n_th, tau_us));
}

CompressionRatio compression_ratio(const EventStream& raw, const EventStream& filtered) {
  if (raw.empty()) throw DomainError("compression ratio undefined for an empty raw stream");
  return {raw.size(), filtered.size()};
}

}  // namespace evdec
