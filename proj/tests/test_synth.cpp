#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "evdec/error.hpp"
#include "evdec/synth.hpp"
#include "test_helpers.hpp"

using namespace evdec;

namespace {

ReachTrajectory still_trajectory(std::uint64_t duration_us, Vec2 velocity = {}) {
  ReachTrajectory t;
  t.sample_period_us = 4000;
  const std::size_t n = duration_us / t.sample_period_us;
  t.positions.assign(n, {});
  t.velocities.assign(n, velocity);
  t.target_positions.assign(n, {});
  t.reach_boundaries = {0};
  return t;
}

TuningModel single_tuning(double baseline, double depth, double preferred = 0.0) {
  return {{preferred}, {baseline}, {depth}};
}

}  // namespace

TEST(GenReaches, StartEqualsTargetGivesZeroVelocity) {
  const std::vector<Vec2> targets{{0.3, -0.2}};
  const std::vector<double> ms{800.0};
  ReachOptions opt;
  opt.start = targets[0];
  const auto traj = reaches_through(targets, ms, 4000, opt);
  for (const auto& v : traj.velocities) {
    EXPECT_EQ(v.x, 0.0);
    EXPECT_EQ(v.y, 0.0);
  }
}

TEST(GenReaches, VelocityIsForwardDifference) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto traj = gen_reaches(12, 4000, {}, seed);
    const double ts = 4000e-6;
    ASSERT_EQ(traj.velocities.size(), traj.positions.size());
    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
      const double dx = traj.positions[i + 1].x - traj.positions[i].x;
      const double dy = traj.positions[i + 1].y - traj.positions[i].y;
      EXPECT_NEAR(traj.velocities[i].x * ts, dx, 1e-9 * std::max(1.0, std::abs(dx)));
      EXPECT_NEAR(traj.velocities[i].y * ts, dy, 1e-9 * std::max(1.0, std::abs(dy)));
    }
  }
}

TEST(GenReaches, BoundariesMatchTargetChanges) {
  const auto traj = gen_reaches(25, 4000, {}, 9);
  EXPECT_EQ(traj.n_reaches(), 25u);
  EXPECT_EQ(detect_reach_boundaries(traj.target_positions), traj.reach_boundaries);
  EXPECT_NO_THROW(traj.validate());
}

TEST(GenReaches, MinimumJerkStartsAndEndsAtRest) {
  const std::vector<Vec2> targets{{1.0, 0.0}};
  const std::vector<double> ms{800.0};
  const auto traj = reaches_through(targets, ms, 4000);
  EXPECT_EQ(traj.positions.front(), (Vec2{0.0, 0.0}));
  EXPECT_EQ(traj.positions.back(), (Vec2{1.0, 0.0}));
  EXPECT_LT(std::abs(traj.velocities.front().x), 1e-3);
  const std::size_t mid = 100;
  EXPECT_NEAR(traj.velocities[mid].x, 1.875 / 0.8, 0.05);
}

TEST(GenReaches, SameSeedSameTrajectory) {
  EXPECT_EQ(gen_reaches(10, 4000, {}, 77), gen_reaches(10, 4000, {}, 77));
  EXPECT_NE(gen_reaches(10, 4000, {}, 77), gen_reaches(10, 4000, {}, 78));
}

TEST(GenReaches, RejectsZeroReaches) { EXPECT_THROW(gen_reaches(0, 4000, {}, 1), ConfigError); }

TEST(TrajectoryCsv, RoundTrip) {
  test::TempDir dir;
  const auto traj = gen_reaches(6, 4000, {}, 3);
  write_trajectory_csv(traj, dir / "t.csv");
  const auto back = read_trajectory_csv(dir / "t.csv");
  ASSERT_EQ(back.size(), traj.size());
  EXPECT_EQ(back.reach_boundaries, traj.reach_boundaries);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    EXPECT_EQ(back.positions[i], traj.positions[i]);
    EXPECT_EQ(back.velocities[i], traj.velocities[i]);
  }
}

TEST(TrajectoryCsv, LeadingCommentIsSkipped) {
  test::TempDir dir;
  const auto traj = gen_reaches(4, 4000, {}, 5);
  write_trajectory_csv(traj, dir / "t.csv", "config_hash=0123456789abcdef");
  EXPECT_EQ(test::slurp(dir / "t.csv").rfind("# config_hash=0123456789abcdef\nt_us,", 0), 0u);
  EXPECT_EQ(read_trajectory_csv(dir / "t.csv"), traj);
  test::spit(dir / "bad.csv", "# only a comment\n");
  EXPECT_THROW(read_trajectory_csv(dir / "bad.csv"), ParseError);
}

TEST(GenSpikes, PoissonCountAtConstantRate) {
  const auto traj = still_trajectory(100'000'000);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto st = gen_spikes(traj, single_tuning(10.0, 0.0), seed);
    const double n = static_cast<double>(st.spike_times_us[0].size());
    EXPECT_GE(n, 1000.0 - 4.0 * std::sqrt(1000.0));
    EXPECT_LE(n, 1000.0 + 4.0 * std::sqrt(1000.0));
  }
}

TEST(GenSpikes, SilentTuningGivesNoSpikes) {
  const auto traj = gen_reaches(5, 4000, {}, 1);
  const auto st = gen_spikes(traj, single_tuning(0.0, 0.0), 4);
  EXPECT_EQ(st.total_spikes(), 0u);
}

TEST(GenSpikes, PreferredDirectionFiresMore) {
  const auto traj = still_trajectory(100'000'000, {1.0, 0.0});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto pref = gen_spikes(traj, single_tuning(10.0, 4.0, 0.0), seed);
    const auto anti = gen_spikes(traj, single_tuning(10.0, 4.0, std::numbers::pi), seed);
    EXPECT_GT(pref.total_spikes(), anti.total_spikes());
  }
}

TEST(GenSpikes, RespectsRefractoryPeriod) {
  const auto traj = gen_reaches(20, 4000, {}, 2);
  const auto st = gen_spikes(traj, make_tuning(32, 5, {50.0, 200.0, 50.0, 100.0}), 6);
  ASSERT_GT(st.total_spikes(), 1000u);
  for (const auto& ch : st.spike_times_us) {
    for (std::size_t i = 1; i < ch.size(); ++i) EXPECT_GE(ch[i] - ch[i - 1], 1000u);
  }
  EXPECT_NO_THROW(st.validate());
}

TEST(GenSpikes, Deterministic) {
  const auto traj = gen_reaches(4, 4000, {}, 2);
  const auto tuning = make_tuning(8, 5);
  EXPECT_EQ(gen_spikes(traj, tuning, 1), gen_spikes(traj, tuning, 1));
}

TEST(Waveform, SilentNoiselessIsZero) {
  EncoderParams p;
  p.noise_std = 0.0;
  const auto sig = synth_waveform(SpikeTrain(3, 10'000), p, 1);
  ASSERT_EQ(sig.n_channels(), 3u);
  EXPECT_EQ(sig.n_samples(), 240u);
  for (const auto& ch : sig.channels) {
    for (double v : ch) EXPECT_EQ(v, 0.0);
  }
}

TEST(Waveform, SingleSpikePlacesTemplate) {
  EncoderParams p;
  p.noise_std = 0.0;
  SpikeTrain st(1, 20'000);
  st.spike_times_us[0] = {5000};
  const auto sig = synth_waveform(st, p, 1);
  const auto shape = biphasic_template(p.sample_rate_hz);
  const std::size_t start = 5000 * 24000 / 1'000'000;
  for (std::size_t i = 0; i < sig.n_samples(); ++i) {
    const double expect =
        i >= start && i < start + shape.size() ? p.spike_amplitude * shape[i - start] : 0.0;
    EXPECT_EQ(sig.channels[0][i], expect) << i;
  }
}

TEST(Waveform, OverlappingSpikesSuperpose) {
  EncoderParams p;
  p.noise_std = 0.0;
  p.spike_amplitude = 1.0;
  SpikeTrain st(1, 20'000);
  st.spike_times_us[0] = {5000, 5500};
  const auto sig = synth_waveform(st, p, 1);
  const auto shape = biphasic_template(p.sample_rate_hz);
  std::vector<double> expect(sig.n_samples(), 0.0);
  for (std::uint64_t t : st.spike_times_us[0]) {
    const std::size_t s = t * 24 / 1000;
    for (std::size_t k = 0; k < shape.size(); ++k) expect[s + k] += shape[k];
  }
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(sig.channels[0][i], expect[i], 1e-15);
}

TEST(Waveform, SpikePastDurationIsDomainError) {
  SpikeTrain st(1, 1000);
  st.spike_times_us[0] = {5000};
  EXPECT_THROW(synth_waveform(st, {}, 1), DomainError);
}

TEST(BiphasicTemplate, OneMillisecondNormalizedTrough) {
  const auto shape = biphasic_template(24000);
  EXPECT_EQ(shape.size(), 24u);
  EXPECT_DOUBLE_EQ(*std::min_element(shape.begin(), shape.end()), -1.0);
  EXPECT_GT(*std::max_element(shape.begin(), shape.end()), 0.0);
}

namespace {

MultiChannelSignal ramp_signal(double from, double to, std::size_t n, std::size_t channels) {
  MultiChannelSignal sig;
  sig.sample_rate_hz = 24000;
  sig.duration_us = sample_time_us(n, 24000);
  for (std::size_t c = 0; c < channels; ++c) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = from + (to - from) * i / static_cast<double>(n - 1);
    sig.channels.push_back(std::move(v));
  }
  return sig;
}

}  // namespace

TEST(NcnsEncode, ConstantSignalIsSilent) {
  auto sig = ramp_signal(0.7, 0.7, 500, 2);
  EXPECT_TRUE(ncns_encode(sig, {}).empty());
}

TEST(NcnsEncode, RisingRampGivesTenOnEventsPerChannel) {
  EncoderParams p;
  p.delta = 1.0;
  const auto ev = ncns_encode(ramp_signal(0.0, 10.0, 2400, 3), p);
  EXPECT_EQ(ev.size(), 30u);
  std::vector<int> per(3, 0);
  for (const auto& e : ev.events()) {
    EXPECT_EQ(e.polarity, Polarity::On);
    ++per[e.channel];
  }
  for (int c : per) EXPECT_EQ(c, 10);
}

TEST(NcnsEncode, FallingRampGivesOnlyOffEvents) {
  const auto ev = ncns_encode(ramp_signal(5.0, -5.0, 2400, 2), {});
  EXPECT_EQ(ev.size(), 20u);
  for (const auto& e : ev.events()) EXPECT_EQ(e.polarity, Polarity::Off);
}

TEST(NcnsEncode, DoublingDeltaNeverAddsEvents) {
  SpikeTrain st(4, 2'000'000);
  const auto traj = still_trajectory(2'000'000);
  st = gen_spikes(traj, make_tuning(4, 1, {20, 40, 0, 0}), 3);
  EncoderParams p;
  p.noise_std = 0.3;
  const auto sig = synth_waveform(st, p, 5);
  for (double delta : {0.1, 0.25, 0.5, 1.0}) {
    EncoderParams a = p, b = p;
    a.delta = delta;
    b.delta = 2 * delta;
    EXPECT_GE(ncns_encode(sig, a).size(), ncns_encode(sig, b).size()) << delta;
  }
}

TEST(NcnsEncode, StaircaseTracksSignalWithinDelta) {
  SpikeTrain st(2, 500'000);
  st.spike_times_us = {{1000, 20000, 20800}, {300000}};
  EncoderParams p;
  p.noise_std = 0.4;
  p.delta = 0.5;
  const auto sig = synth_waveform(st, p, 9);
  const auto ev = ncns_encode(sig, p);
  for (std::size_t c = 0; c < 2; ++c) {
    double r = sig.channels[c][0];
    auto it = ev.events().begin();
    for (std::size_t i = 0; i < sig.n_samples(); ++i) {
      const auto t = sample_time_us(i, p.sample_rate_hz);
      for (; it != ev.events().end() && it->timestamp_us <= t; ++it) {
        if (it->channel != c) continue;
        r += it->polarity == Polarity::On ? p.delta : -p.delta;
      }
      EXPECT_LT(std::abs(sig.channels[c][i] - r), p.delta) << "ch " << c << " sample " << i;
    }
  }
}

TEST(NcnsEncode, DeterministicAndEqualToStreamingPath) {
  const auto traj = gen_reaches(3, 4000, {}, 1);
  const auto spikes = gen_spikes(traj, make_tuning(6, 2), 3);
  const EncoderParams p;
  const auto two_step = ncns_encode(synth_waveform(spikes, p, 4), p);
  EXPECT_EQ(two_step, ncns_encode(synth_waveform(spikes, p, 4), p));
  EXPECT_EQ(synthesize_events(spikes, p, 4), two_step);
}

TEST(EncoderParams, Validation) {
  EncoderParams p;
  p.delta = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p.delta = 1.0;
  p.sample_rate_hz = 0;
  EXPECT_THROW(p.validate(), ConfigError);
}
