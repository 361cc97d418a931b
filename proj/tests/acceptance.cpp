// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// fails. Tolerances and time budgets are fixed below.
//
//   evdec_acceptance [name-substring ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "evdec/evfilter.hpp"
#include "evdec/metrics.hpp"
#include "evdec/pipeline.hpp"
#include "evdec/snn.hpp"
#include "evdec/synth.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace evdec;

namespace {

// Filter oracle equivalence.
constexpr std::size_t kOracleStreams = 50;
constexpr std::size_t kOracleEvents = 100'000;
constexpr std::size_t kOracleChannels = 96;
constexpr double kOracleBudgetS = 60.0;

// Spike-detector recovery on a clean recording.
constexpr std::size_t kRecoveryReaches = 20;
constexpr double kRecoveryAmplitude = 3.0;
constexpr double kRecoveryNoise = 0.1;
constexpr std::uint64_t kRecoveryBurstUs = 500;
constexpr std::size_t kRecoveryMinBurst = 3;
constexpr double kRecoveryMinBurstFraction = 0.99;
constexpr std::uint64_t kRecoveryMatchUs = 1000;
constexpr double kRecoveryMinRecall = 0.90;
constexpr double kRecoveryMaxPerSpike = 1.0;
constexpr double kRecoveryBudgetS = 30.0;

// Compression direction.
constexpr double kMinCompression = 10.0;

// Gradient suite.
constexpr int kGradSeeds = 5;
constexpr double kGradBudgetS = 300.0;

// Model size.
constexpr double kNnSizeKb = 20.856;
constexpr double kSnnSizeKb = 19.628;
constexpr double kSizeTolerance = 0.10;

// End-to-end decoding.
constexpr double kMinNnR2 = 0.5;
constexpr double kMinSnnR2 = 0.4;
constexpr double kLinearMargin = 0.05;
constexpr double kSpdVsGtMargin = 0.1;
constexpr double kEndToEndBudgetS = 15 * 60.0;

// R^2 suite.
constexpr double kR2Tolerance = 1e-12;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// The default pipeline runs once for compression, decoding and determinism.
struct SharedRun {
  std::filesystem::path root;
  std::optional<PipelineResult> first;
  double first_seconds = 0.0;

  const PipelineResult& get() {
    if (!first) {
      const auto t0 = Clock::now();
      first = run_pipeline(config(root / "run_a"));
      first_seconds = seconds_since(t0);
    }
    return *first;
  }

  static PipelineConfig config(const std::filesystem::path& out) {
    PipelineConfig c = PipelineConfig::from_json("{}");
    c.output_dir = out;
    return c;
  }
};

Outcome filter_oracle() {
  const auto t0 = Clock::now();
  std::size_t combos = 0, mismatches = 0, passed_events = 0;
  for (std::size_t s = 0; s < kOracleStreams; ++s) {
    const auto stream = oracle::random_filter_stream(kOracleEvents, kOracleChannels, 1000 + s);
    for (std::uint32_t n_th = 0; n_th <= 4; ++n_th) {
      for (std::uint64_t tau : {100, 500, 2000}) {
        for (std::uint64_t t_ref : {0, 1000}) {
          const FilterParams p{n_th, tau, t_ref};
          const auto fast = filter_events(stream, p);
          const auto slow = oracle::filter_reference(stream, p);
          ++combos;
          passed_events += slow.size();
          const auto fe = fast.events();
          if (fe.size() != slow.size() || !std::equal(fe.begin(), fe.end(), slow.begin())) ++mismatches;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < kOracleBudgetS,
          std::to_string(combos) + " stream x parameter combinations, " + std::to_string(mismatches) +
              " mismatches, " + std::to_string(passed_events) + " events compared, " +
              fmt("%.1f", secs) + " s (budget " + fmt("%.0f", kOracleBudgetS) + " s)"};
}

Outcome spike_recovery() {
  const auto t0 = Clock::now();
  const auto traj = gen_reaches(kRecoveryReaches, 4000, {}, 11);
  const auto spikes = gen_spikes(traj, make_tuning(96, 12), 13);
  EncoderParams enc;
  enc.spike_amplitude = kRecoveryAmplitude;
  enc.noise_std = kRecoveryNoise;
  const auto raw = synthesize_events(spikes, enc, 14);
  const auto det = filter_events(raw, FilterParams::spike_detector());

  std::vector<std::vector<std::uint64_t>> raw_by(96), det_by(96);
  for (const auto& e : raw.events()) raw_by[e.channel].push_back(e.timestamp_us);
  for (const auto& e : det.events()) det_by[e.channel].push_back(e.timestamp_us);

  std::size_t gt = 0, bursty = 0, matched = 0;
  for (std::size_t ch = 0; ch < 96; ++ch) {
    const auto& r = raw_by[ch];
    const auto& d = det_by[ch];
    std::vector<bool> used(d.size(), false);
    for (const auto t : spikes.spike_times_us[ch]) {
      ++gt;
      const auto lo = std::lower_bound(r.begin(), r.end(), t);
      const auto hi = std::upper_bound(r.begin(), r.end(), t + kRecoveryBurstUs);
      if (static_cast<std::size_t>(hi - lo) >= kRecoveryMinBurst) ++bursty;
      const std::uint64_t from = t > kRecoveryMatchUs ? t - kRecoveryMatchUs : 0;
      for (auto it = std::lower_bound(d.begin(), d.end(), from);
           it != d.end() && *it <= t + kRecoveryMatchUs; ++it) {
        const auto k = static_cast<std::size_t>(it - d.begin());
        if (!used[k]) {
          used[k] = true;
          ++matched;
          break;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  const double burst_frac = static_cast<double>(bursty) / static_cast<double>(gt);
  const double recall = static_cast<double>(matched) / static_cast<double>(gt);
  const double per_spike = static_cast<double>(det.size()) / static_cast<double>(gt);
  const bool ok = gt > 0 && burst_frac >= kRecoveryMinBurstFraction && recall >= kRecoveryMinRecall &&
                  per_spike <= kRecoveryMaxPerSpike && secs < kRecoveryBudgetS;
  return {ok, std::to_string(gt) + " GT spikes, " + fmt("%.4f", burst_frac) + " with >=3 events in 500 us, recall " +
                  fmt("%.4f", recall) + " within +-1 ms, " + std::to_string(det.size()) + " detections (" +
                  fmt("%.4f", per_spike) + " per spike), " + fmt("%.1f", secs) + " s"};
}

Outcome compression(SharedRun& run) {
  const auto& r = run.get();
  const double evf = r.evfilter->value(), spd = r.spike_detector->value();
  return {evf >= kMinCompression && spd >= kMinCompression && spd > evf,
          "raw " + std::to_string(r.evfilter->raw) + " events, EvFilter " + fmt("%.2f", evf) +
              "x, EvFilter-SPD " + fmt("%.2f", spd) + "x"};
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  std::size_t runs = 0, failures = 0, checked = 0, skipped = 0;
  double worst = 0.0;
  std::string worst_where;
  auto take = [&](const gradcheck::Result& r, const std::string& where) {
    ++runs;
    checked += r.checked;
    skipped += r.skipped;
    if (!r.ok()) ++failures;
    if (r.worst() > worst) {
      worst = r.worst();
      worst_where = where + " " + r.worst_name();
    }
  };
  for (int s = 0; s < kGradSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(100 + s);
    take(gradcheck::mlp(seed, 1, true), "nn(train)");
    take(gradcheck::mlp(seed, 1, false), "nn(eval)");
    take(gradcheck::mlp(seed, 2, true), "stnn(train)");
    take(gradcheck::lstm(seed), "lstm");
    take(gradcheck::snn(seed), "snn");
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < kGradBudgetS,
          std::to_string(runs) + " checks, " + std::to_string(checked) + " entries (" +
              std::to_string(skipped) + " kink-crossing skipped), worst relative error " +
              fmt("%.2e", worst) + " at " + worst_where + ", " + fmt("%.1f", secs) + " s"};
}

Outcome lif_literal() {
  nn::LifLayer<double> L;
  L.w = nn::Param<double>("w", 1, 3);
  L.b = nn::Param<double>("b", 1, 1);
  L.beta_raw = nn::Param<double>("beta", 1, 1, 0.0);  // sigmoid(0) = 0.5
  L.threshold = nn::Param<double>("thr", 1, 1, 0.8);
  L.reset = nn::ResetMode::Zero;
  L.w.value = {1.0, 0.4, 0.0};
  std::vector<double> u{0.0}, s{0.0};
  const std::vector<std::vector<double>> x{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const double want_u[3] = {1.0, 0.0, 0.0}, want_s[3] = {1.0, 0.0, 0.0};
  bool ok = true;
  std::string trace;
  for (std::size_t t = 0; t < 3; ++t) {
    nn::lif_step<double>(L, x[t], u, s);
    ok = ok && u[0] == want_u[t] && s[0] == want_s[t];
    trace += (t ? ", " : "") + fmt("%.17g", u[0]);
  }
  return {ok, "membrane [" + trace + "], exact comparison"};
}

FeatureFrame one_frame(std::size_t rows_n, FeatureMode mode, std::uint64_t seed) {
  FeatureFrame f;
  f.mode = mode;
  f.n_channels = 96;
  f.width = 96;
  f.t_bin_ms = mode == FeatureMode::Binary ? 4 : 200;
  f.t_s_ms = 4;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution bit(0.15);
  std::uniform_real_distribution<float> count(0.5f, 5.0f);
  for (std::size_t i = 0; i < rows_n; ++i) {
    f.sample_times_us.push_back((i + 50) * 4000);
    f.reach_ids.push_back(0);
    for (int c = 0; c < 96; ++c) {
      f.x.push_back(mode == FeatureMode::Binary ? (bit(rng) ? 1.0f : 0.0f) : count(rng));
    }
    f.y.push_back(static_cast<float>(i));
    f.y.push_back(0.0f);
  }
  return f;
}

Outcome dense_ops() {
  ModelSpec nn_spec;
  DecoderModel nn_model(nn_spec, 1);
  // Zero batch-norm gains and unit shifts hold every hidden activation at 1.
  auto& mlp = std::get<nn::MlpDecoder<float>>(nn_model.net());
  for (auto* p : {&mlp.bn1_gain, &mlp.bn2_gain}) std::fill(p->value.begin(), p->value.end(), 0.0f);
  for (auto* p : {&mlp.bn1_shift, &mlp.bn2_shift}) std::fill(p->value.begin(), p->value.end(), 1.0f);
  const double nn_macs = count_ops(nn_model, one_frame(16, FeatureMode::Frame, 1)).macs;
  const double nn_want = 96 * 32 + 32 * 48 + 48 * 2;

  ModelSpec snn_spec;
  snn_spec.kind = DecoderKind::SNN;
  double snn_macs_max = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const DecoderModel snn_model(snn_spec, s);
    snn_macs_max = std::max(snn_macs_max, count_ops(snn_model, one_frame(200, FeatureMode::Binary, s)).macs);
  }

  ModelSpec lstm_spec;
  lstm_spec.kind = DecoderKind::LSTM;
  const DecoderModel lstm_model(lstm_spec, 1);
  const auto lstm = count_ops(lstm_model, one_frame(16, FeatureMode::Frame, 2));
  const double lstm_macs_want = 4 * 32 * (96 + 32) + 32 * 2;
  const double lstm_acs_want = 4 * 32 + 2;

  const bool ok = nn_macs == nn_want && nn_want == 4704 && snn_macs_max == 0.0 &&
                  lstm.macs == lstm_macs_want && lstm.acs == lstm_acs_want;
  return {ok, "NN " + fmt("%.0f", nn_macs) + " MACs (want 4704), SNN max " + fmt("%.0f", snn_macs_max) +
                  " MACs over 5 models x 200 steps, LSTM " + fmt("%.0f", lstm.macs) + " MACs + " +
                  fmt("%.0f", lstm.acs) + " ACs per step (want " + fmt("%.0f", lstm_macs_want) + " + " +
                  fmt("%.0f", lstm_acs_want) + ")"};
}

Outcome model_size() {
  ModelSpec nn_spec;
  ModelSpec snn_spec;
  snn_spec.kind = DecoderKind::SNN;
  const double nn_kb = model_size_kb(DecoderModel(nn_spec, 1));
  const double snn_kb = model_size_kb(DecoderModel(snn_spec, 1));
  const double nn_rel = std::abs(nn_kb / kNnSizeKb - 1.0), snn_rel = std::abs(snn_kb / kSnnSizeKb - 1.0);
  return {nn_rel <= kSizeTolerance && snn_rel <= kSizeTolerance,
          "NN " + fmt("%.3f", nn_kb) + " KB (" + fmt("%.1f", 100 * nn_rel) + "% off 20.856), SNN " +
              fmt("%.3f", snn_kb) + " KB (" + fmt("%.1f", 100 * snn_rel) + "% off 19.628)"};
}

Outcome end_to_end(SharedRun& run) {
  const auto& r = run.get();
  std::map<std::string, std::map<std::string, double>> r2;  // decoder -> input -> mean R^2
  for (const auto& rep : r.reports) r2[rep.decoder][rep.input] = rep.r2.mean;
  bool ok = run.first_seconds < kEndToEndBudgetS;
  std::ostringstream d;
  ok = ok && r2["nn"]["gt"] >= kMinNnR2 && r2["snn"]["gt"] >= kMinSnnR2;
  d << "NN " << fmt("%.3f", r2["nn"]["gt"]) << ", SNN " << fmt("%.3f", r2["snn"]["gt"]) << " (gt)";
  double worst_vs_linear = 1e300, worst_spd = 1e300;
  for (const auto& [dec, by_input] : r2) {
    for (const auto& [input, v] : by_input) {
      if (dec != "linear") worst_vs_linear = std::min(worst_vs_linear, v - r2["linear"][input]);
    }
    worst_spd = std::min(worst_spd, by_input.at("spd") - by_input.at("gt"));
  }
  ok = ok && worst_vs_linear >= -kLinearMargin && worst_spd >= -kSpdVsGtMargin;
  d << "; min(decoder - linear) " << fmt("%+.3f", worst_vs_linear) << "; min(spd - gt) "
    << fmt("%+.3f", worst_spd) << "; " << r.reports.size() << " cells in " << fmt("%.0f", run.first_seconds)
    << " s";
  return {ok, d.str()};
}

Outcome r2_suite() {
  const std::vector<double> y{1, 2, 3, 4};
  bool ok = std::abs(r2_score(y, y) - 1.0) <= kR2Tolerance;
  ok = ok && std::abs(r2_score(y, std::vector<double>(4, 2.5))) <= kR2Tolerance;
  ok = ok && std::abs(r2_score(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 2}) - 0.5) <= kR2Tolerance;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  std::vector<double> a(500), b(500);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = n(rng);
    b[i] = 0.7 * a[i] + 0.5 * n(rng);
  }
  const double base = r2_score(a, b);
  double worst = 0.0;
  for (const auto& [scale, shift] : {std::pair{2.0, 3.0}, std::pair{-1.5, 0.25}, std::pair{1e-3, -4.0}}) {
    std::vector<double> as(a.size()), bs(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      as[i] = scale * a[i] + shift;
      bs[i] = scale * b[i] + shift;
    }
    worst = std::max(worst, std::abs(r2_score(as, bs) - base));
  }
  ok = ok && worst <= kR2Tolerance;
  return {ok, "examples 1, 0, 0.5 exact; affine invariance max deviation " + fmt("%.2e", worst)};
}

std::map<std::string, std::string> read_tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[std::filesystem::relative(e.path(), root).generic_string()] = ss.str();
  }
  return files;
}

Outcome determinism(SharedRun& run) {
  run.get();
  run_pipeline(SharedRun::config(run.root / "run_b"));
  const auto a = read_tree(run.root / "run_a");
  const auto b = read_tree(run.root / "run_b");
  std::size_t reports = 0, differing = 0;
  for (const auto& [name, bytes] : a) {
    if (name.rfind("reports/", 0) == 0) ++reports;
    const auto it = b.find(name);
    if (it == b.end() || it->second != bytes) ++differing;
  }
  const bool ok = reports > 0 && a.size() == b.size() && differing == 0;
  return {ok, std::to_string(a.size()) + " output files (" + std::to_string(reports) + " reports), " +
                  std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> only(argv + 1, argv + argc);
  SharedRun shared;
  shared.root = std::filesystem::temp_directory_path() / ("evdec_acceptance_" + std::to_string(::getpid()));
  std::filesystem::remove_all(shared.root);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"filter_oracle_equivalence", filter_oracle},
      {"spike_detector_recovery", spike_recovery},
      {"compression_direction", [&] { return compression(shared); }},
      {"gradient_suite", gradient_suite},
      {"lif_literal_dynamics", lif_literal},
      {"dense_op_counts", dense_ops},
      {"model_size", model_size},
      {"end_to_end_decoding", [&] { return end_to_end(shared); }},
      {"r2_unit_suite", r2_suite},
      {"determinism", [&] { return determinism(shared); }},
  };

  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && std::none_of(only.begin(), only.end(), [&](const std::string& s) {
          return name.find(s) != std::string::npos;
        })) {
      continue;
    }
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " ["
              << fmt("%.1f", seconds_since(t0)) << " s]" << std::endl;
  }
  std::filesystem::remove_all(shared.root);
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
  return failed == 0 ? 0 : 1;
}
