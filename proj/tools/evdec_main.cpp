// evdec: command-line front end. Exit codes: 0 ok, 2 config error, 3 data
// error, 4 numeric error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "evdec/error.hpp"
#include "evdec/event_io.hpp"
#include "evdec/evfilter.hpp"
#include "evdec/feature_io.hpp"
#include "evdec/features.hpp"
#include "evdec/metrics.hpp"
#include "evdec/model_io.hpp"
#include "evdec/pipeline.hpp"
#include "evdec/synth.hpp"
#include "evdec/train.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

evdec::EventStream load_stream(const fs::path& path) {
  auto r = evdec::read_events(path, evdec::format_for_path(path));
  if (r.resorted) std::cerr << "warning: " << path.string() << " was not time-ordered; sorted\n";
  return std::move(r.stream);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw evdec::ConfigError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    evdec::write_atomic(path, text);
  }
}

evdec::DatasetSplit split_for(const evdec::FeatureFrame& frame) {
  std::size_t n = 0;
  for (auto id : frame.reach_ids) n = std::max<std::size_t>(n, std::size_t{id} + 1);
  return evdec::split_reaches(n);
}

evdec::FeatureFrame partition(const evdec::FeatureFrame& frame, const std::string& which) {
  if (which == "all") return frame;
  const auto split = split_for(frame);
  if (which == "train") return evdec::select_reaches(frame, split.train);
  if (which == "val") return evdec::select_reaches(frame, split.val);
  if (which == "test") return evdec::select_reaches(frame, split.test);
  throw evdec::ConfigError("unknown partition '" + which + "' (train, val, test or all)");
}

struct SynthArgs {
  evdec::SynthConfig synth;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

struct EncodeArgs {
  std::string spikes, out;
  std::uint64_t seed = 4;
  evdec::EncoderParams encoder;
};

struct FilterArgs {
  std::string in, out, stats;
  evdec::FilterParams params;
};

struct FeaturizeArgs {
  std::string events, trajectory, out, mode = "frame";
  evdec::FeatureConfig cfg;
};

struct TrainArgs {
  std::string model, features, out, config, log;
  std::uint64_t seed = 5;
  std::optional<int> epochs;
};

struct EvalArgs {
  std::string model_file, features, partition = "test", report;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-based neural decoding toolkit"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate reaches and ground-truth spikes");
  synth->add_option("--reaches", sa.synth.n_reaches, "Number of reaches")->capture_default_str();
  synth->add_option("--channels", sa.synth.n_channels, "Recording channels")->capture_default_str();
  synth->add_option("--period-ms", sa.synth.sample_period_ms, "Kinematic sample period")
      ->capture_default_str();
  synth->add_option("--baseline-min", sa.synth.tuning.baseline_min_hz)->capture_default_str();
  synth->add_option("--baseline-max", sa.synth.tuning.baseline_max_hz)->capture_default_str();
  synth->add_option("--depth-min", sa.synth.tuning.depth_min)->capture_default_str();
  synth->add_option("--depth-max", sa.synth.tuning.depth_max)->capture_default_str();
  synth->add_option("--seed", sa.seed, "Base seed (trajectory, tuning and spikes derive from it)")
      ->capture_default_str();
  synth->add_option("--out-dir", sa.out_dir, "Writes trajectory.csv and gt_spikes.nevt")
      ->capture_default_str();

  EncodeArgs ea;
  auto* encode = app.add_subcommand("encode", "Delta-modulate synthetic waveforms into events");
  encode->add_option("--spikes", ea.spikes, "Ground-truth spike event file")->required();
  encode->add_option("--out", ea.out, "Raw event file (.nevt or .csv)")->required();
  encode->add_option("--seed", ea.seed, "Noise seed")->capture_default_str();
  encode->add_option("--delta", ea.encoder.delta)->capture_default_str();
  encode->add_option("--amplitude", ea.encoder.spike_amplitude)->capture_default_str();
  encode->add_option("--noise", ea.encoder.noise_std)->capture_default_str();
  encode->add_option("--rate", ea.encoder.sample_rate_hz, "Sample rate in Hz")->capture_default_str();

  FilterArgs fa;
  auto add_filter_opts = [&](CLI::App* cmd, bool with_tref) {
    cmd->add_option("--in", fa.in, "Input event file")->required();
    cmd->add_option("--out", fa.out, "Output event file")->required();
    cmd->add_option("--n-th,--nth", fa.params.n_th, "Required recent events")->capture_default_str();
    cmd->add_option("--tau-us", fa.params.tau_us, "Look-back window")->capture_default_str();
    if (with_tref) {
      cmd->add_option("--t-ref-us,--tref-us", fa.params.t_ref_us, "Refractory period (0 = off)")
          ->capture_default_str();
    }
    cmd->add_option("--stats", fa.stats, "Stats JSON path (default stdout)");
  };
  auto* filter = app.add_subcommand("filter", "EvFilter: keep events with recent neighbours");
  add_filter_opts(filter, true);
  auto* detect = app.add_subcommand("detect", "EvFilter-SPD: EvFilter with a 1 ms refractory period");
  add_filter_opts(detect, false);

  FeaturizeArgs za;
  auto* featurize = app.add_subcommand("featurize", "Bin events into decoder features");
  featurize->add_option("--events", za.events, "Event file")->required();
  featurize->add_option("--trajectory", za.trajectory, "Trajectory CSV")->required();
  featurize->add_option("--mode", za.mode, "frame, segmented or binary")->capture_default_str();
  featurize->add_option("--t-bin-ms,--tbin-ms", za.cfg.t_bin_ms)->capture_default_str();
  featurize->add_option("--t-s-ms,--ts-ms", za.cfg.t_s_ms)->capture_default_str();
  featurize->add_option("--segments", za.cfg.n_segments)->capture_default_str();
  featurize->add_option("--out", za.out, "Feature file")->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a decoder on a feature file");
  train->add_option("--model", ta.model, "nn, stnn, lstm, snn or linear")->required();
  train->add_option("--features", ta.features, "Feature file")->required();
  train->add_option("--split-seed,--seed", ta.seed, "Seed for initialization and shuffling")
      ->capture_default_str();
  train->add_option("--config", ta.config, "Train config JSON");
  train->add_option("--epochs", ta.epochs, "Override the epoch count");
  train->add_option("--log", ta.log, "Per-epoch CSV log path");
  train->add_option("--out", ta.out, "Model file")->required();

  EvalArgs va;
  auto* eval = app.add_subcommand("eval", "Score a model with R^2");
  eval->add_option("--model-file", va.model_file)->required();
  eval->add_option("--features", va.features)->required();
  eval->add_option("--partition", va.partition, "train, val, test or all")->capture_default_str();

  EvalArgs ba;
  auto* bench = app.add_subcommand("bench", "R^2, effective ops, memory and model size");
  bench->add_option("--model-file", ba.model_file)->required();
  bench->add_option("--features", ba.features)->required();
  bench->add_option("--partition", ba.partition, "train, val, test or all")->capture_default_str();
  bench->add_option("--report", ba.report, "Report JSON path (default stdout)");

  std::string config_path;
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage from one config");
  pipeline->add_option("--config", config_path, "Pipeline config JSON")->required();
  bool quiet = false;
  pipeline->add_flag("--quiet", quiet, "No progress output");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "List every problem in a pipeline config");
  validate->add_option("--config", validate_path, "Pipeline config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (synth->parsed()) {
      const std::uint64_t period_us = std::uint64_t{sa.synth.sample_period_ms} * 1000;
      const auto traj = evdec::gen_reaches(sa.synth.n_reaches, period_us, sa.synth.workspace,
                                           evdec::derive_seed(sa.seed, 1), sa.synth.reach);
      const auto tuning =
          evdec::make_tuning(sa.synth.n_channels, evdec::derive_seed(sa.seed, 2), sa.synth.tuning);
      const auto spikes = evdec::gen_spikes(traj, tuning, evdec::derive_seed(sa.seed, 3));
      fs::create_directories(sa.out_dir);
      evdec::write_trajectory_csv(traj, fs::path(sa.out_dir) / "trajectory.csv");
      evdec::write_events(evdec::spike_train_to_stream(spikes),
                          fs::path(sa.out_dir) / "gt_spikes.nevt", evdec::EventFormat::Binary);
      std::cout << "wrote " << traj.reach_boundaries.size() << " reaches, "
                << spikes.total_spikes() << " spikes to " << sa.out_dir << "\n";
    } else if (encode->parsed()) {
      const auto stream = load_stream(ea.spikes);
      evdec::SpikeTrain train_spikes;
      train_spikes.n_channels = stream.n_channels();
      train_spikes.duration_us = stream.duration_us();
      train_spikes.spike_times_us.resize(stream.n_channels());
      for (const auto& e : stream.events()) {
        train_spikes.spike_times_us[e.channel].push_back(e.timestamp_us);
      }
      const auto raw = evdec::synthesize_events(train_spikes, ea.encoder, ea.seed);
      evdec::write_events(raw, ea.out, evdec::format_for_path(ea.out));
      std::cout << "wrote " << raw.size() << " events to " << ea.out << "\n";
    } else if (filter->parsed() || detect->parsed()) {
      if (detect->parsed()) fa.params.t_ref_us = evdec::kSpikeDetectorRefractoryUs;
      fa.params.validate();
      const auto raw = load_stream(fa.in);
      const auto kept = evdec::filter_events(raw, fa.params);
      evdec::write_events(kept, fa.out, evdec::format_for_path(fa.out));
      const auto cr = evdec::compression_ratio(raw, kept);
      ordered_json j;
      j["input"] = fa.in;
      j["output"] = fa.out;
      j["n_th"] = fa.params.n_th;
      j["tau_us"] = fa.params.tau_us;
      j["t_ref_us"] = fa.params.t_ref_us;
      j["events_in"] = cr.raw;
      j["events_out"] = cr.filtered;
      if (cr.is_infinite()) {
        j["compression_ratio"] = "inf";
      } else {
        j["compression_ratio"] = cr.value();
      }
      j["rate_in_hz"] = evdec::stream_stats(raw).rate_hz;
      j["rate_out_hz"] = evdec::stream_stats(kept).rate_hz;
      emit(j.dump(2) + "\n", fa.stats);
    } else if (featurize->parsed()) {
      za.cfg.mode = evdec::feature_mode_from_string(za.mode);
      za.cfg.validate();
      const auto stream = load_stream(za.events);
      const auto traj = evdec::read_trajectory_csv(za.trajectory);
      const auto frame = evdec::featurize(stream, za.cfg, traj);
      ordered_json cfg_json;
      cfg_json["events"] = fs::path(za.events).filename().string();
      cfg_json["mode"] = za.mode;
      cfg_json["t_bin_ms"] = za.cfg.t_bin_ms;
      cfg_json["t_s_ms"] = za.cfg.t_s_ms;
      cfg_json["n_segments"] = za.cfg.n_segments;
      evdec::write_features(frame, za.out, evdec::fnv1a64(cfg_json.dump()));
      std::cout << "wrote " << frame.size() << " samples x " << frame.width << " to " << za.out
                << "\n";
    } else if (train->parsed()) {
      const auto kind = evdec::decoder_kind_from_string(ta.model);
      evdec::TrainConfig cfg;
      if (!ta.config.empty()) cfg = evdec::TrainConfig::from_json(read_text(ta.config));
      if (ta.epochs) cfg.epochs = *ta.epochs;
      const auto file = evdec::read_features(ta.features);
      const auto result =
          evdec::train_decoder(kind, file.frame, split_for(file.frame), cfg, ta.seed);
      evdec::write_model(result.model, ta.out, file.config_hash);
      if (!ta.log.empty()) {
        std::string csv = "epoch,learning_rate,train_loss,val_r2\n";
        for (const auto& e : result.log) {
          csv += std::to_string(e.epoch) + "," + std::to_string(e.learning_rate) + "," +
                 std::to_string(e.train_loss) + "," + std::to_string(e.val_r2) + "\n";
        }
        evdec::write_atomic(ta.log, csv);
      }
      std::cout << "best epoch " << result.best_epoch << ", val R2 " << result.best_val_r2
                << ", wrote " << ta.out << "\n";
    } else if (eval->parsed() || bench->parsed()) {
      const EvalArgs& a = eval->parsed() ? va : ba;
      const auto model = evdec::read_model(a.model_file);
      const auto features = evdec::read_features(a.features);
      const auto frame = partition(features.frame, a.partition);
      auto report = evdec::evaluate(model.model, frame);
      report.input = fs::path(a.features).filename().string();
      report.config_hash = features.config_hash;
      if (eval->parsed()) {
        ordered_json j;
        j["r2_x"] = report.r2.x;
        j["r2_y"] = report.r2.y;
        j["r2_mean"] = report.r2.mean;
        j["samples"] = frame.size();
        std::cout << j.dump(2) << "\n";
      } else {
        emit(report.to_json() + "\n", a.report);
      }
    } else if (pipeline->parsed()) {
      const auto cfg = evdec::PipelineConfig::load(config_path);
      const auto result = evdec::run_pipeline(cfg, quiet ? nullptr : &std::cerr);
      std::cout << result.table1_csv << "\n" << result.table2_csv;
      std::cout << "outputs in " << result.output_dir.string() << "\n";
    } else if (validate->parsed()) {
      const auto cfg = evdec::PipelineConfig::load(validate_path);
      const auto problems = evdec::validate_config(cfg);
      for (const auto& p : problems) std::cout << p << "\n";
      if (!problems.empty()) return kExitConfig;
      std::cout << "config ok (hash " << evdec::hash_hex(cfg.hash()) << ")\n";
    }
  } catch (const evdec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const evdec::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const evdec::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
