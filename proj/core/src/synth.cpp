#include "evdec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <thread>

#include "evdec/error.hpp"
#include "evdec/random.hpp"

namespace evdec {

namespace {

double min_jerk(double s) { return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s); }

std::vector<double> channel_waveform(std::span<const std::uint64_t> spike_times_us,
                                     std::uint64_t n_samples,
                                     const EncoderParams& params,
                                     std::span<const double> shape, Rng rng) {
  std::vector<double> signal(n_samples, 0.0);
  if (params.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, params.noise_std);
    for (auto& v : signal) v = noise(rng);
  }
  for (const std::uint64_t t : spike_times_us) {
    const std::uint64_t start = t * params.sample_rate_hz / 1'000'000ULL;
    for (std::size_t k = 0; k < shape.size() && start + k < n_samples; ++k) {
      signal[start + k] += params.spike_amplitude * shape[k];
    }
  }
  return signal;
}

// Runs fn(channel) for every channel over a small pool of threads. Results
// must be written to per-channel slots so the outcome is order independent.
template <typename Fn>
void for_each_channel(std::size_t n_channels, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n_channels, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t ch = 0; ch < n_channels; ++ch) fn(ch);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t ch = w; ch < n_channels; ch += workers) fn(ch);
    });
  }
}

}  // namespace

std::size_t ReachTrajectory::reach_of(std::size_t sample) const {
  if (reach_boundaries.empty() || sample >= size()) {
    throw DomainError("sample " + std::to_string(sample) + " outside trajectory");
  }
  auto it = std::upper_bound(reach_boundaries.begin(), reach_boundaries.end(), sample);
  return static_cast<std::size_t>(it - reach_boundaries.begin()) - 1;
}

void ReachTrajectory::validate() const {
  if (sample_period_us == 0) throw DomainError("sample period must be positive");
  if (velocities.size() != positions.size() || target_positions.size() != positions.size()) {
    throw DomainError("trajectory arrays differ in length");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    for (double v : {positions[i].x, positions[i].y, velocities[i].x, velocities[i].y,
                     target_positions[i].x, target_positions[i].y}) {
      if (!std::isfinite(v)) throw DomainError("non-finite trajectory value at sample " + std::to_string(i));
    }
  }
  if (!positions.empty() && (reach_boundaries.empty() || reach_boundaries.front() != 0)) {
    throw DomainError("first reach must start at sample 0");
  }
  for (std::size_t k = 0; k < reach_boundaries.size(); ++k) {
    const std::size_t b = reach_boundaries[k];
    if (b >= size()) throw DomainError("reach boundary past trajectory end");
    if (k > 0 && b <= reach_boundaries[k - 1]) throw DomainError("reach boundaries not increasing");
    if (k > 0 && target_positions[b] == target_positions[b - 1]) {
      throw DomainError("reach boundary " + std::to_string(b) + " is not a target change");
    }
  }
}

ReachTrajectory reaches_through(std::span<const Vec2> targets,
                                std::span<const double> movement_ms,
                                std::uint64_t sample_period_us,
                                const ReachOptions& options) {
  if (targets.empty()) throw ConfigError("at least one reach is required");
  if (movement_ms.size() != targets.size()) throw ConfigError("one movement duration per target");
  if (sample_period_us == 0) throw ConfigError("sample period must be positive");

  const double ts_ms = static_cast<double>(sample_period_us) * 1e-3;
  const auto hold = static_cast<std::size_t>(std::llround(options.hold_ms / ts_ms));

  ReachTrajectory traj;
  traj.sample_period_us = sample_period_us;
  Vec2 from = options.start;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const Vec2 to = targets[k];
    traj.reach_boundaries.push_back(traj.size());
    const auto moving =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(movement_ms[k] / ts_ms)));
    for (std::size_t i = 0; i < moving; ++i) {
      const double s = min_jerk(static_cast<double>(i) / static_cast<double>(moving));
      traj.positions.push_back({from.x + (to.x - from.x) * s, from.y + (to.y - from.y) * s});
      traj.target_positions.push_back(to);
    }
    for (std::size_t i = 0; i < hold; ++i) {
      traj.positions.push_back(to);
      traj.target_positions.push_back(to);
    }
    from = to;
  }

  const double ts_s = static_cast<double>(sample_period_us) * 1e-6;
  traj.velocities.resize(traj.size());
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    traj.velocities[i] = {(traj.positions[i + 1].x - traj.positions[i].x) / ts_s,
                          (traj.positions[i + 1].y - traj.positions[i].y) / ts_s};
  }
  return traj;
}

ReachTrajectory gen_reaches(std::size_t n_reaches, std::uint64_t sample_period_us,
                            const Workspace& workspace, std::uint64_t seed,
                            const ReachOptions& options) {
  if (n_reaches == 0) throw ConfigError("n_reaches must be at least 1");
  if (options.min_movement_ms <= 0.0 || options.max_movement_ms < options.min_movement_ms) {
    throw ConfigError("invalid movement duration range");
  }
  Rng rng = make_rng(seed, 0);
  std::uniform_real_distribution<double> coord(-workspace.half_width, workspace.half_width);
  std::uniform_real_distribution<double> duration(options.min_movement_ms, options.max_movement_ms);
  std::vector<Vec2> targets;
  std::vector<double> durations;
  for (std::size_t k = 0; k < n_reaches; ++k) {
    const double x = coord(rng);
    const double y = coord(rng);
    targets.push_back({x, y});
    durations.push_back(duration(rng));
  }
  return reaches_through(targets, durations, sample_period_us, options);
}

std::vector<std::size_t> detect_reach_boundaries(std::span<const Vec2> targets) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (i == 0 || !(targets[i] == targets[i - 1])) out.push_back(i);
  }
  return out;
}

void write_trajectory_csv(const ReachTrajectory& traj, const std::filesystem::path& path,
                          const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "t_us,x,y,vx,vy,target_x,target_y\n" << std::setprecision(17);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << i * traj.sample_period_us << ',' << traj.positions[i].x << ',' << traj.positions[i].y
        << ',' << traj.velocities[i].x << ',' << traj.velocities[i].y << ','
        << traj.target_positions[i].x << ',' << traj.target_positions[i].y << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

ReachTrajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  bool have = static_cast<bool>(std::getline(in, line));
  while (have && line.rfind('#', 0) == 0) {
    ++line_no;
    have = static_cast<bool>(std::getline(in, line));
  }
  if (!have || line.rfind("t_us,x,y,vx,vy,target_x,target_y", 0) != 0) {
    throw ParseError("expected trajectory header", line_no);
  }
  ReachTrajectory traj;
  std::vector<std::uint64_t> times;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    std::uint64_t t;
    Vec2 p, v, g;
    if (!(row >> t >> p.x >> p.y >> v.x >> v.y >> g.x >> g.y)) {
      throw ParseError("malformed trajectory row", line_no);
    }
    times.push_back(t);
    traj.positions.push_back(p);
    traj.velocities.push_back(v);
    traj.target_positions.push_back(g);
  }
  if (times.size() >= 2) traj.sample_period_us = times[1] - times[0];
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] != i * traj.sample_period_us) {
      throw ParseError("trajectory samples are not uniformly spaced from 0", i + 2);
    }
  }
  traj.reach_boundaries = detect_reach_boundaries(traj.target_positions);
  traj.validate();
  return traj;
}

double TuningModel::rate_hz(std::size_t channel, Vec2 velocity) const {
  const double speed = std::hypot(velocity.x, velocity.y);
  double rate = baseline_rate_hz[channel];
  if (speed > 0.0) {
    const double angle = std::atan2(velocity.y, velocity.x);
    rate += modulation_depth[channel] * speed * std::cos(angle - preferred_direction[channel]);
  }
  return std::max(0.0, rate);
}

TuningModel make_tuning(std::size_t n_channels, std::uint64_t seed, const TuningRanges& ranges) {
  if (ranges.baseline_min_hz < 0.0 || ranges.depth_min < 0.0 ||
      ranges.baseline_max_hz < ranges.baseline_min_hz || ranges.depth_max < ranges.depth_min) {
    throw ConfigError("invalid tuning ranges");
  }
  TuningModel model;
  Rng rng = make_rng(seed, 1);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> base(ranges.baseline_min_hz, ranges.baseline_max_hz);
  std::uniform_real_distribution<double> depth(ranges.depth_min, ranges.depth_max);
  for (std::size_t ch = 0; ch < n_channels; ++ch) {
    model.preferred_direction.push_back(angle(rng));
    model.baseline_rate_hz.push_back(base(rng));
    model.modulation_depth.push_back(depth(rng));
  }
  return model;
}

SpikeTrain gen_spikes(const ReachTrajectory& traj, const TuningModel& tuning,
                      std::uint64_t seed, const SpikeOptions& options) {
  if (options.resolution_us == 0) throw ConfigError("spike resolution must be positive");
  const std::size_t n_channels = tuning.n_channels();
  SpikeTrain train(n_channels, traj.duration_us());
  for_each_channel(n_channels, [&](std::size_t ch) {
    Rng rng = make_rng(seed, 1000 + ch);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto& times = train.spike_times_us[ch];
    const double step_s = static_cast<double>(options.resolution_us) * 1e-6;
    bool has_last = false;
    std::uint64_t last = 0;
    std::size_t sample = 0;
    double p = 0.0;
    for (std::uint64_t t = 0; t < traj.duration_us(); t += options.resolution_us) {
      const std::size_t s = t / traj.sample_period_us;
      if (t == 0 || s != sample) {
        sample = s;
        p = tuning.rate_hz(ch, traj.velocities[s]) * step_s;
      }
      // Draw unconditionally so the random sequence does not depend on
      // refractory history.
      const double u = unit(rng);
      if (has_last && t - last < options.refractory_us) continue;
      if (u < p) {
        times.push_back(t);
        last = t;
        has_last = true;
      }
    }
  });
  return train;
}

void EncoderParams::validate() const {
  if (!(delta > 0.0)) throw ConfigError("encoder delta must be > 0");
  if (sample_rate_hz == 0) throw ConfigError("encoder sample_rate_hz must be > 0");
  if (!(noise_std >= 0.0)) throw ConfigError("encoder noise_std must be >= 0");
}

std::vector<double> EncoderParams::resolved_template() const {
  return spike_template.empty() ? biphasic_template(sample_rate_hz) : spike_template;
}

std::vector<double> biphasic_template(std::uint32_t sample_rate_hz) {
  const auto n = static_cast<std::size_t>(std::max<std::uint32_t>(1, sample_rate_hz / 1000));
  std::vector<double> shape(n);
  double lowest = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t_ms = static_cast<double>(k) * 1000.0 / sample_rate_hz;
    const double trough = -std::exp(-std::pow((t_ms - 0.25) / 0.08, 2));
    const double rebound = 0.25 * std::exp(-std::pow((t_ms - 0.55) / 0.15, 2));
    shape[k] = trough + rebound;
    lowest = std::min(lowest, shape[k]);
  }
  if (lowest < 0.0) {
    for (auto& v : shape) v /= -lowest;
  }
  return shape;
}

MultiChannelSignal synth_waveform(const SpikeTrain& spikes, const EncoderParams& params,
                                  std::uint64_t seed) {
  params.validate();
  spikes.validate();
  const auto shape = params.resolved_template();
  MultiChannelSignal signal;
  signal.sample_rate_hz = params.sample_rate_hz;
  signal.duration_us = spikes.duration_us;
  signal.channels.resize(spikes.n_channels);
  const auto n_samples = sample_count(spikes.duration_us, params.sample_rate_hz);
  for_each_channel(spikes.n_channels, [&](std::size_t ch) {
    signal.channels[ch] = channel_waveform(spikes.spike_times_us[ch], n_samples, params, shape,
                                           make_rng(seed, 2000 + ch));
  });
  return signal;
}

void encode_channel(std::span<const double> signal, std::uint16_t channel, double delta,
                    std::uint32_t sample_rate_hz, std::vector<Event>& out) {
  if (signal.empty()) return;
  double reference = signal[0];
  for (std::size_t i = 0; i < signal.size(); ++i) {
    const double v = signal[i];
    const std::uint64_t t = sample_time_us(i, sample_rate_hz);
    while (v - reference >= delta) {
      out.push_back({t, channel, Polarity::On});
      reference += delta;
    }
    while (reference - v >= delta) {
      out.push_back({t, channel, Polarity::Off});
      reference -= delta;
    }
  }
}

EventStream ncns_encode(const MultiChannelSignal& signal, const EncoderParams& params) {
  if (!(params.delta > 0.0)) throw ConfigError("encoder delta must be > 0");
  if (signal.sample_rate_hz == 0) throw ConfigError("signal sample rate must be > 0");
  std::vector<std::vector<Event>> per_channel(signal.n_channels());
  for_each_channel(signal.n_channels(), [&](std::size_t ch) {
    encode_channel(signal.channels[ch], static_cast<std::uint16_t>(ch), params.delta,
                   signal.sample_rate_hz, per_channel[ch]);
  });
  std::vector<Event> events;
  for (auto& ch : per_channel) events.insert(events.end(), ch.begin(), ch.end());
  sort_events(events);
  return EventStream(std::max<std::size_t>(1, signal.n_channels()), signal.duration_us,
                     std::move(events));
}

EventStream synthesize_events(const SpikeTrain& spikes, const EncoderParams& params,
                              std::uint64_t seed) {
  params.validate();
  spikes.validate();
  const auto shape = params.resolved_template();
  const auto n_samples = sample_count(spikes.duration_us, params.sample_rate_hz);
  std::vector<std::vector<Event>> per_channel(spikes.n_channels);
  for_each_channel(spikes.n_channels, [&](std::size_t ch) {
    const auto signal = channel_waveform(spikes.spike_times_us[ch], n_samples, params, shape,
                                         make_rng(seed, 2000 + ch));
    encode_channel(signal, static_cast<std::uint16_t>(ch), params.delta, params.sample_rate_hz,
                   per_channel[ch]);
  });
  std::vector<Event> events;
  std::size_t total = 0;
  for (const auto& ch : per_channel) total += ch.size();
  events.reserve(total);
  for (auto& ch : per_channel) events.insert(events.end(), ch.begin(), ch.end());
  sort_events(events);
  return EventStream(spikes.n_channels, spikes.duration_us, std::move(events));
}

}  // namespace evdec
