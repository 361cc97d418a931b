#include "evdec/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "evdec/error.hpp"

namespace evdec {

namespace {

constexpr std::uint64_t kUsPerMs = 1000;

// Per-channel timestamps, each sorted ascending.
std::vector<std::vector<std::uint64_t>> channel_times(const EventStream& stream) {
  std::vector<std::vector<std::uint64_t>> times(stream.n_channels());
  for (const Event& e : stream.events()) times[e.channel].push_back(e.timestamp_us);
  return times;
}

FeatureFrame empty_frame(const EventStream& stream, const FeatureConfig& cfg) {
  FeatureFrame f;
  f.mode = cfg.mode;
  f.n_channels = stream.n_channels();
  f.n_segments = cfg.mode == FeatureMode::Segmented ? cfg.n_segments : 1;
  f.t_bin_ms = cfg.t_bin_ms;
  f.t_s_ms = cfg.t_s_ms;
  f.width = cfg.width(stream.n_channels());
  const std::uint64_t step = std::uint64_t{cfg.t_s_ms} * kUsPerMs;
  const std::uint64_t window = std::uint64_t{cfg.t_bin_ms} * kUsPerMs;
  std::uint64_t t = (window + step - 1) / step * step;
  if (t == 0) t = step;
  for (; t <= stream.duration_us(); t += step) f.sample_times_us.push_back(t);
  f.x.assign(f.size() * f.width, 0.0f);
  f.y.assign(f.size() * 2, 0.0f);
  f.reach_ids.assign(f.size(), 0);
  return f;
}

// Counts events of every channel in `n_sub` consecutive sub-windows of
// (t - window, t] for each sample time t. Sub-window k of channel i lands at
// x[row * width + i * n_sub + k].
void accumulate(const EventStream& stream, std::uint64_t window, std::uint32_t n_sub,
                FeatureFrame& f) {
  const auto times = channel_times(stream);
  const std::uint64_t sub = window / n_sub;
  for (std::size_t ch = 0; ch < times.size(); ++ch) {
    const auto& ts = times[ch];
    if (ts.empty()) continue;
    // cursor[k] = number of events with timestamp <= boundary k, where
    // boundary k = t - window + k * sub for k = 0..n_sub.
    std::vector<std::size_t> cursor(n_sub + 1, 0);
    for (std::size_t row = 0; row < f.size(); ++row) {
      const std::uint64_t t = f.sample_times_us[row];
      for (std::uint32_t k = 0; k <= n_sub; ++k) {
        const std::uint64_t edge = t - window + k * sub;
        while (cursor[k] < ts.size() && ts[cursor[k]] <= edge) ++cursor[k];
      }
      float* out = f.x.data() + row * f.width + ch * n_sub;
      for (std::uint32_t k = 0; k < n_sub; ++k) {
        out[k] = static_cast<float>(cursor[k + 1] - cursor[k]);
      }
    }
  }
}

}  // namespace

const char* to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::Frame: return "frame";
    case FeatureMode::Segmented: return "segmented";
    case FeatureMode::Binary: return "binary";
  }
  return "?";
}

FeatureMode feature_mode_from_string(const std::string& name) {
  if (name == "frame") return FeatureMode::Frame;
  if (name == "segmented") return FeatureMode::Segmented;
  if (name == "binary") return FeatureMode::Binary;
  throw ConfigError("unknown feature mode '" + name + "'");
}

std::vector<std::string> FeatureConfig::violations() const {
  std::vector<std::string> out;
  if (t_bin_ms == 0) out.push_back("t_bin_ms must be positive");
  if (t_s_ms == 0) out.push_back("t_s_ms must be positive");
  if (n_segments == 0) out.push_back("n_segments must be >= 1");
  if (mode == FeatureMode::Segmented && n_segments != 0 && t_bin_ms % n_segments != 0) {
    out.push_back("t_bin_ms " + std::to_string(t_bin_ms) + " is not divisible by n_segments " +
                  std::to_string(n_segments));
  }
  if (mode == FeatureMode::Binary && t_bin_ms != t_s_ms) {
    out.push_back("binary mode requires t_bin_ms == t_s_ms");
  }
  if (mode != FeatureMode::Binary && t_s_ms != 0 && t_bin_ms < t_s_ms) {
    out.push_back("t_bin_ms must be >= t_s_ms");
  }
  return out;
}

void FeatureConfig::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg = "invalid feature config:";
  for (const auto& s : v) msg += " " + s + ";";
  throw ConfigError(msg);
}

std::size_t FeatureConfig::width(std::size_t n_channels) const {
  return mode == FeatureMode::Segmented ? n_channels * n_segments : n_channels;
}

std::size_t FeatureFrame::n_reaches() const noexcept {
  return reach_ids.empty() ? 0 : *std::max_element(reach_ids.begin(), reach_ids.end()) + 1;
}

FeatureFrame bin_counts(const EventStream& stream, const FeatureConfig& cfg) {
  FeatureConfig c = cfg;
  c.mode = FeatureMode::Frame;
  c.n_segments = 1;
  c.validate();
  FeatureFrame f = empty_frame(stream, c);
  accumulate(stream, std::uint64_t{c.t_bin_ms} * kUsPerMs, 1, f);
  return f;
}

FeatureFrame segmented_bin_counts(const EventStream& stream, const FeatureConfig& cfg) {
  FeatureConfig c = cfg;
  c.mode = FeatureMode::Segmented;
  c.validate();
  FeatureFrame f = empty_frame(stream, c);
  accumulate(stream, std::uint64_t{c.t_bin_ms} * kUsPerMs, c.n_segments, f);
  return f;
}

FeatureFrame binarize_stream(const EventStream& stream, const FeatureConfig& cfg) {
  FeatureConfig c = cfg;
  c.mode = FeatureMode::Binary;
  c.t_bin_ms = c.t_s_ms;
  c.n_segments = 1;
  c.validate();
  FeatureFrame f = empty_frame(stream, c);
  accumulate(stream, std::uint64_t{c.t_s_ms} * kUsPerMs, 1, f);
  for (auto& v : f.x) v = v > 0.0f ? 1.0f : 0.0f;
  return f;
}

FeatureFrame extract_features(const EventStream& stream, const FeatureConfig& cfg) {
  switch (cfg.mode) {
    case FeatureMode::Frame: return bin_counts(stream, cfg);
    case FeatureMode::Segmented: return segmented_bin_counts(stream, cfg);
    case FeatureMode::Binary: return binarize_stream(stream, cfg);
  }
  throw ConfigError("unknown feature mode");
}

void attach_targets(FeatureFrame& frame, const ReachTrajectory& traj) {
  const std::uint64_t period = traj.sample_period_us;
  const std::uint64_t step = std::uint64_t{frame.t_s_ms} * kUsPerMs;
  if (period == 0 || step % period != 0) {
    throw ConfigError("feature stride " + std::to_string(step) +
                      " us is not a multiple of the trajectory period " + std::to_string(period) +
                      " us");
  }
  std::size_t keep = 0;
  while (keep < frame.size() && frame.sample_times_us[keep] / period <= traj.size()) ++keep;
  frame.sample_times_us.resize(keep);
  frame.x.resize(keep * frame.width);
  frame.y.resize(keep * 2);
  frame.reach_ids.resize(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t s = frame.sample_times_us[i] / period - 1;
    frame.y[2 * i] = static_cast<float>(traj.velocities[s].x);
    frame.y[2 * i + 1] = static_cast<float>(traj.velocities[s].y);
    frame.reach_ids[i] = static_cast<std::uint32_t>(traj.reach_of(s));
  }
}

FeatureFrame featurize(const EventStream& stream, const FeatureConfig& cfg,
                       const ReachTrajectory& traj) {
  FeatureFrame f = extract_features(stream, cfg);
  attach_targets(f, traj);
  return f;
}

EventStream spike_train_to_stream(const SpikeTrain& train) {
  train.validate();
  std::vector<Event> events;
  events.reserve(train.total_spikes());
  for (std::size_t ch = 0; ch < train.n_channels; ++ch) {
    for (const auto t : train.spike_times_us[ch]) {
      events.push_back({t, static_cast<std::uint16_t>(ch), Polarity::On});
    }
  }
  sort_events(events);
  return EventStream(std::max<std::size_t>(1, train.n_channels), train.duration_us,
                     std::move(events));
}

DatasetSplit split_reaches(std::size_t n_reaches) {
  if (n_reaches < 4) {
    throw ConfigError("need at least 4 reaches to split, got " + std::to_string(n_reaches));
  }
  // Round-half-up quotas keep train and val within 0.5 of 50% / 25%, and the
  // remainder within 1 of 25%.
  const std::size_t n_train = (n_reaches + 1) / 2;
  const std::size_t n_val = (n_reaches + 2) / 4;
  DatasetSplit split;
  for (std::size_t r = 0; r < n_reaches; ++r) {
    if (r < n_train) {
      split.train.push_back(r);
    } else if (r < n_train + n_val) {
      split.val.push_back(r);
    } else {
      split.test.push_back(r);
    }
  }
  return split;
}

DatasetSplit segment_and_split(const ReachTrajectory& traj) {
  return split_reaches(detect_reach_boundaries(traj.target_positions).size());
}

FeatureFrame select_reaches(const FeatureFrame& frame, std::span<const std::size_t> reaches) {
  const std::unordered_set<std::size_t> wanted(reaches.begin(), reaches.end());
  FeatureFrame out = frame;
  out.sample_times_us.clear();
  out.x.clear();
  out.y.clear();
  out.reach_ids.clear();
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (!wanted.contains(frame.reach_ids[i])) continue;
    out.sample_times_us.push_back(frame.sample_times_us[i]);
    const auto r = frame.row(i);
    out.x.insert(out.x.end(), r.begin(), r.end());
    out.y.push_back(frame.y[2 * i]);
    out.y.push_back(frame.y[2 * i + 1]);
    out.reach_ids.push_back(frame.reach_ids[i]);
  }
  return out;
}

}  // namespace evdec
