#include <benchmark/benchmark.h>

#include <random>

#include "evdec/decoder_model.hpp"
#include "evdec/evfilter.hpp"
#include "evdec/features.hpp"
#include "evdec/synth.hpp"

namespace {

using namespace evdec;

// Noisy raw events for ~2 s of 96-channel recording at the default settings.
const EventStream& raw_stream() {
  static const EventStream raw = [] {
    const auto traj = gen_reaches(2, 4000, {}, 1);
    const auto spikes = gen_spikes(traj, make_tuning(96, 2), 3);
    return synthesize_events(spikes, EncoderParams{}, 4);
  }();
  return raw;
}

const EventStream& spike_stream() {
  static const EventStream gt = [] {
    const auto traj = gen_reaches(20, 4000, {}, 1);
    return spike_train_to_stream(gen_spikes(traj, make_tuning(96, 2), 3));
  }();
  return gt;
}

void BM_EvFilter(benchmark::State& state) {
  const auto& raw = raw_stream();
  const FilterParams p{2, 500, static_cast<std::uint64_t>(state.range(0))};
  for (auto _ : state) {
    auto out = filter_events(raw, p);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * raw.size()));
}
BENCHMARK(BM_EvFilter)->Arg(0)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_EvFilterPerEvent(benchmark::State& state) {
  const auto& raw = raw_stream();
  EventFilter f(raw.n_channels(), FilterParams::spike_detector());
  std::size_t i = 0;
  const auto ev = raw.events();
  for (auto _ : state) {
    if (i == ev.size()) {
      state.PauseTiming();
      f.reset();
      i = 0;
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(f.process(ev[i++]));
  }
}
BENCHMARK(BM_EvFilterPerEvent);

void BM_BinCounts(benchmark::State& state) {
  const auto& gt = spike_stream();
  FeatureConfig cfg;
  cfg.mode = static_cast<FeatureMode>(state.range(0));
  cfg.t_bin_ms = cfg.mode == FeatureMode::Binary ? 4 : 200;
  cfg.n_segments = cfg.mode == FeatureMode::Segmented ? 8 : 1;
  for (auto _ : state) {
    auto f = extract_features(gt, cfg);
    benchmark::DoNotOptimize(f);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * gt.size()));
}
BENCHMARK(BM_BinCounts)
    ->Arg(static_cast<int>(FeatureMode::Frame))
    ->Arg(static_cast<int>(FeatureMode::Segmented))
    ->Arg(static_cast<int>(FeatureMode::Binary))
    ->Unit(benchmark::kMillisecond);

std::vector<float> sparse_input(std::size_t n, bool binary, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution active(0.3);
  std::vector<float> x(n);
  for (auto& v : x) v = active(rng) ? (binary ? 1.0f : 2.0f) : 0.0f;
  return x;
}

void BM_InferenceStep(benchmark::State& state) {
  ModelSpec spec;
  spec.kind = static_cast<DecoderKind>(state.range(0));
  if (spec.kind == DecoderKind::STNN) spec.input = 96 * 8;
  const DecoderModel model(spec, 1);
  const auto x = sparse_input(spec.input, spec.kind == DecoderKind::SNN, 2);
  Predictor p(model);
  nn::OpCounter ops;
  for (auto _ : state) benchmark::DoNotOptimize(p.step(x, &ops));
  state.counters["MACs/step"] = static_cast<double>(ops.macs) / static_cast<double>(state.iterations());
  state.counters["ACs/step"] = static_cast<double>(ops.acs) / static_cast<double>(state.iterations());
  state.SetLabel(to_string(spec.kind));
}
BENCHMARK(BM_InferenceStep)
    ->Arg(static_cast<int>(DecoderKind::NN))
    ->Arg(static_cast<int>(DecoderKind::STNN))
    ->Arg(static_cast<int>(DecoderKind::LSTM))
    ->Arg(static_cast<int>(DecoderKind::SNN));

void BM_LifStep(benchmark::State& state) {
  ModelSpec spec;
  spec.kind = DecoderKind::SNN;
  const DecoderModel model(spec, 1);
  const auto& snn = std::get<nn::SnnDecoder<float>>(model.net());
  auto st = snn.initial_state();
  std::mt19937_64 rng(5);
  std::bernoulli_distribution spike(static_cast<double>(state.range(0)) / 100.0);
  std::vector<float> x(96);
  for (auto& v : x) v = spike(rng) ? 1.0f : 0.0f;
  for (auto _ : state) {
    nn::lif_step<float>(snn.layers[0], x, st.u[0], st.s[0]);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_LifStep)->Arg(1)->Arg(10)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
