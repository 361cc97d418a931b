#include "evdec/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evdec/error.hpp"
#include "evdec/event_io.hpp"
#include "evdec/feature_io.hpp"
#include "evdec/model_io.hpp"

namespace evdec {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

const char* to_string(InputVariant input) {
  switch (input) {
    case InputVariant::GroundTruth: return "gt";
    case InputVariant::EvFilter: return "evfilter";
    case InputVariant::SpikeDetector: return "spd";
  }
  return "?";
}

InputVariant input_variant_from_string(const std::string& name) {
  for (auto v : {InputVariant::GroundTruth, InputVariant::EvFilter, InputVariant::SpikeDetector}) {
    if (name == to_string(v)) return v;
  }
  throw ConfigError("unknown input '" + name + "' (expected gt, evfilter or spd)");
}

DecoderRun default_run(DecoderKind kind) {
  DecoderRun r;
  r.kind = kind;
  switch (kind) {
    case DecoderKind::NN: r.features = {FeatureMode::Frame, 200, 4, 1}; break;
    case DecoderKind::STNN: r.features = {FeatureMode::Segmented, 200, 4, 8}; break;
    case DecoderKind::LSTM: r.features = {FeatureMode::Frame, 34, 4, 1}; break;
    case DecoderKind::SNN: r.features = {FeatureMode::Binary, 4, 4, 1}; break;
    case DecoderKind::Linear: r.features = {FeatureMode::Frame, 300, 4, 1}; break;
  }
  return r;
}

namespace {

// Reads keys of one JSON object into existing defaults and rejects keys it
// was never asked about.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!used_.contains(key)) throw ConfigError("unknown key '" + where_ + "." + key + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

FeatureConfig read_features(const json& j, FeatureConfig f, const std::string& where) {
  ObjectReader r(j, where);
  std::string mode = to_string(f.mode);
  r.get("mode", mode);
  f.mode = feature_mode_from_string(mode);
  r.get("t_bin_ms", f.t_bin_ms);
  r.get("t_s_ms", f.t_s_ms);
  r.get("n_segments", f.n_segments);
  r.finish();
  return f;
}

ojson features_json(const FeatureConfig& f) {
  ojson j;
  j["mode"] = to_string(f.mode);
  j["t_bin_ms"] = f.t_bin_ms;
  j["t_s_ms"] = f.t_s_ms;
  j["n_segments"] = f.n_segments;
  return j;
}

FilterParams read_filter(const json& j, FilterParams p, const std::string& where) {
  ObjectReader r(j, where);
  r.get("n_th", p.n_th);
  r.get("tau_us", p.tau_us);
  r.get("t_ref_us", p.t_ref_us);
  r.finish();
  return p;
}

ojson filter_json(const FilterParams& p) {
  ojson j;
  j["n_th"] = p.n_th;
  j["tau_us"] = p.tau_us;
  j["t_ref_us"] = p.t_ref_us;
  return j;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const std::string& text,
                                         const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  ObjectReader r(root, "config");
  std::string out_dir = c.output_dir.string();
  r.get("output_dir", out_dir);
  c.output_dir = out_dir;
  r.get("write_events", c.write_events);
  r.get("write_features", c.write_features);

  if (const json* s = r.child("synth")) {
    ObjectReader sr(*s, "synth");
    auto& y = c.synth;
    sr.get("n_reaches", y.n_reaches);
    sr.get("n_channels", y.n_channels);
    sr.get("sample_period_ms", y.sample_period_ms);
    sr.get("workspace_half_width", y.workspace.half_width);
    sr.get("min_movement_ms", y.reach.min_movement_ms);
    sr.get("max_movement_ms", y.reach.max_movement_ms);
    sr.get("hold_ms", y.reach.hold_ms);
    sr.get("baseline_min_hz", y.tuning.baseline_min_hz);
    sr.get("baseline_max_hz", y.tuning.baseline_max_hz);
    sr.get("depth_min", y.tuning.depth_min);
    sr.get("depth_max", y.tuning.depth_max);
    sr.get("spike_resolution_us", y.spikes.resolution_us);
    sr.get("refractory_us", y.spikes.refractory_us);
    sr.finish();
  }
  if (const json* e = r.child("encoder")) {
    ObjectReader er(*e, "encoder");
    er.get("delta", c.encoder.delta);
    er.get("spike_amplitude", c.encoder.spike_amplitude);
    er.get("spike_template", c.encoder.spike_template);
    er.get("noise_std", c.encoder.noise_std);
    er.get("sample_rate_hz", c.encoder.sample_rate_hz);
    er.finish();
  }
  if (const json* f = r.child("filter")) c.filter = read_filter(*f, c.filter, "filter");
  if (const json* f = r.child("spike_detector")) {
    c.spike_detector = read_filter(*f, c.spike_detector, "spike_detector");
  }
  if (const json* in = r.child("inputs")) {
    if (!in->is_array()) throw ConfigError("inputs must be an array");
    c.inputs.clear();
    for (const auto& v : *in) {
      if (!v.is_string()) throw ConfigError("inputs entries must be strings");
      c.inputs.push_back(input_variant_from_string(v.get<std::string>()));
    }
  }
  if (const json* d = r.child("decoders")) {
    if (!d->is_array()) throw ConfigError("decoders must be an array");
    for (std::size_t i = 0; i < d->size(); ++i) {
      const json& item = (*d)[i];
      const std::string where = "decoders[" + std::to_string(i) + "]";
      if (item.is_string()) {
        c.decoders.push_back(default_run(decoder_kind_from_string(item.get<std::string>())));
        continue;
      }
      ObjectReader dr(item, where);
      std::string model;
      dr.get("model", model);
      if (model.empty()) throw ConfigError(where + ".model is required");
      DecoderRun run = default_run(decoder_kind_from_string(model));
      if (const json* f = dr.child("features")) {
        run.features = read_features(*f, run.features, where + ".features");
      }
      dr.finish();
      c.decoders.push_back(run);
    }
  } else {
    for (auto k : {DecoderKind::NN, DecoderKind::STNN, DecoderKind::LSTM, DecoderKind::SNN,
                   DecoderKind::Linear}) {
      c.decoders.push_back(default_run(k));
    }
  }
  if (const json* t = r.child("train")) c.train = TrainConfig::from_json(t->dump());
  if (const json* s = r.child("seeds")) {
    ObjectReader sr(*s, "seeds");
    sr.get("trajectory", c.seeds.trajectory);
    sr.get("tuning", c.seeds.tuning);
    sr.get("spikes", c.seeds.spikes);
    sr.get("noise", c.seeds.noise);
    sr.get("train", c.seeds.train);
    sr.finish();
  }
  if (const json* d = r.child("data")) {
    ObjectReader dr(*d, "data");
    std::string p;
    auto opt = [&](const char* key, std::optional<std::filesystem::path>& out) {
      p.clear();
      dr.get(key, p);
      if (!p.empty()) out = resolve(base_dir, p);
    };
    opt("events", c.data.events);
    opt("trajectory", c.data.trajectory);
    opt("gt_spikes", c.data.gt_spikes);
    dr.finish();
  }
  r.finish();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), path.parent_path());
}

std::string PipelineConfig::to_json() const {
  ojson j;
  ojson s;
  s["n_reaches"] = synth.n_reaches;
  s["n_channels"] = synth.n_channels;
  s["sample_period_ms"] = synth.sample_period_ms;
  s["workspace_half_width"] = synth.workspace.half_width;
  s["min_movement_ms"] = synth.reach.min_movement_ms;
  s["max_movement_ms"] = synth.reach.max_movement_ms;
  s["hold_ms"] = synth.reach.hold_ms;
  s["baseline_min_hz"] = synth.tuning.baseline_min_hz;
  s["baseline_max_hz"] = synth.tuning.baseline_max_hz;
  s["depth_min"] = synth.tuning.depth_min;
  s["depth_max"] = synth.tuning.depth_max;
  s["spike_resolution_us"] = synth.spikes.resolution_us;
  s["refractory_us"] = synth.spikes.refractory_us;
  j["synth"] = s;
  ojson e;
  e["delta"] = encoder.delta;
  e["spike_amplitude"] = encoder.spike_amplitude;
  e["spike_template"] = encoder.spike_template;
  e["noise_std"] = encoder.noise_std;
  e["sample_rate_hz"] = encoder.sample_rate_hz;
  j["encoder"] = e;
  j["filter"] = filter_json(filter);
  j["spike_detector"] = filter_json(spike_detector);
  j["inputs"] = ojson::array();
  for (auto v : inputs) j["inputs"].push_back(to_string(v));
  j["decoders"] = ojson::array();
  for (const auto& d : decoders) {
    ojson dj;
    dj["model"] = to_string(d.kind);
    dj["features"] = features_json(d.features);
    j["decoders"].push_back(dj);
  }
  j["train"] = ojson::parse(train.to_json());
  ojson sd;
  sd["trajectory"] = seeds.trajectory;
  sd["tuning"] = seeds.tuning;
  sd["spikes"] = seeds.spikes;
  sd["noise"] = seeds.noise;
  sd["train"] = seeds.train;
  j["seeds"] = sd;
  ojson dt = ojson::object();
  if (data.events) dt["events"] = data.events->generic_string();
  if (data.trajectory) dt["trajectory"] = data.trajectory->generic_string();
  if (data.gt_spikes) dt["gt_spikes"] = data.gt_spikes->generic_string();
  j["data"] = dt;
  j["write_events"] = write_events;
  j["write_features"] = write_features;
  return j.dump(2);
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t PipelineConfig::hash() const { return fnv1a64(to_json()); }

std::vector<std::string> validate_config(const PipelineConfig& c) {
  std::vector<std::string> v;
  const auto& s = c.synth;
  if (!c.data.trajectory) {
    if (s.n_reaches < 4) v.push_back("synth.n_reaches must be >= 4 to split 50/25/25");
    if (s.n_channels == 0 || s.n_channels > 65535) {
      v.push_back("synth.n_channels must be in [1, 65535]");
    }
    if (!(s.workspace.half_width > 0.0)) v.push_back("synth.workspace_half_width must be > 0");
    if (!(s.reach.min_movement_ms > 0.0 && s.reach.min_movement_ms <= s.reach.max_movement_ms)) {
      v.push_back("synth movement durations must satisfy 0 < min_movement_ms <= max_movement_ms");
    }
    if (!(s.reach.hold_ms >= 0.0)) v.push_back("synth.hold_ms must be >= 0");
    if (!(s.tuning.baseline_min_hz >= 0.0 && s.tuning.baseline_min_hz <= s.tuning.baseline_max_hz)) {
      v.push_back("synth baseline rates must satisfy 0 <= baseline_min_hz <= baseline_max_hz");
    }
    if (!(s.tuning.depth_min >= 0.0 && s.tuning.depth_min <= s.tuning.depth_max)) {
      v.push_back("synth depths must satisfy 0 <= depth_min <= depth_max");
    }
    if (s.spikes.resolution_us == 0) v.push_back("synth.spike_resolution_us must be > 0");
  }
  if (s.sample_period_ms == 0) v.push_back("synth.sample_period_ms must be > 0");
  try {
    c.encoder.validate();
  } catch (const Error& e) {
    v.push_back(std::string("encoder: ") + e.what());
  }
  if (c.filter.tau_us == 0) v.push_back("filter.tau_us must be > 0");
  if (c.spike_detector.tau_us == 0) v.push_back("spike_detector.tau_us must be > 0");
  if (c.inputs.empty()) v.push_back("inputs must name at least one of gt, evfilter, spd");
  std::set<InputVariant> seen_inputs;
  for (auto in : c.inputs) {
    if (!seen_inputs.insert(in).second) v.push_back(std::string("input ") + to_string(in) + " is listed twice");
  }
  if (c.decoders.empty()) v.push_back("decoders must not be empty");
  for (std::size_t i = 0; i < c.decoders.size(); ++i) {
    const auto& d = c.decoders[i];
    const std::string where = "decoders[" + std::to_string(i) + "] (" + to_string(d.kind) + ")";
    for (const auto& msg : d.features.violations()) v.push_back(where + ": " + msg);
    if (!accepts_feature_mode(d.kind, d.features.mode)) {
      v.push_back(where + ": needs " + to_string(required_feature_mode(d.kind)) +
                  " features, got " + to_string(d.features.mode));
    }
    if (s.sample_period_ms != 0 && d.features.t_s_ms % s.sample_period_ms != 0) {
      v.push_back(where + ": t_s_ms " + std::to_string(d.features.t_s_ms) +
                  " is not a multiple of the kinematic sample period " +
                  std::to_string(s.sample_period_ms));
    }
  }
  for (const auto& msg : c.train.violations()) v.push_back(msg);

  if (c.data.any() && !c.data.trajectory) {
    v.push_back("data.trajectory is required when any data file is given");
  }
  if (c.data.any()) {
    const bool needs_raw = seen_inputs.contains(InputVariant::EvFilter) ||
                           seen_inputs.contains(InputVariant::SpikeDetector);
    if (needs_raw && !c.data.events) v.push_back("inputs evfilter/spd need data.events");
    if (seen_inputs.contains(InputVariant::GroundTruth) && !c.data.gt_spikes) {
      v.push_back("input gt needs data.gt_spikes");
    }
  }
  for (const auto* p : {&c.data.events, &c.data.trajectory, &c.data.gt_spikes}) {
    if (*p && !std::filesystem::exists(**p)) {
      v.push_back("data file not found: " + (*p)->string());
    }
  }
  return v;
}

std::filesystem::path resolve_output_dir(const PipelineConfig& config) {
  if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') {
    return std::filesystem::path(env);
  }
  return config.output_dir;
}

void write_atomic(const std::filesystem::path& path, std::string_view data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + partial.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("write failed for " + partial.string());
  }
  std::error_code ec;
  std::filesystem::rename(partial, path, ec);
  if (ec) throw IoError("cannot rename " + partial.string() + ": " + ec.message());
}

namespace {

template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
  const std::string prefix = std::string("stage ") + name + ": ";
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  } catch (const StateError& e) {
    throw StateError(prefix + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError(prefix + e.what());
  }
}

std::string fixed(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string compression_json(const PipelineResult& r) {
  ojson j;
  auto put = [&](const char* key, const std::optional<CompressionRatio>& c) {
    if (!c) return;
    ojson o;
    o["events_raw"] = c->raw;
    o["events_filtered"] = c->filtered;
    if (c->is_infinite()) {
      o["ratio"] = "inf";
    } else {
      o["ratio"] = c->value();
    }
    j[key] = o;
  };
  put("evfilter", r.evfilter);
  put("spd", r.spike_detector);
  j["config_hash"] = hash_hex(r.config_hash);
  return j.dump(2) + "\n";
}

std::string log_csv(const std::vector<EpochLog>& log, const std::string& hash_text) {
  std::string s = "# config_hash=" + hash_text + "\nepoch,learning_rate,train_loss,val_r2\n";
  for (const auto& e : log) {
    s += std::to_string(e.epoch) + "," + fixed(e.learning_rate, 8) + "," + fixed(e.train_loss, 8) +
         "," + fixed(e.val_r2, 8) + "\n";
  }
  return s;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, std::ostream* log) {
  if (const auto v = validate_config(config); !v.empty()) {
    std::string msg = "invalid pipeline config:";
    for (const auto& s : v) msg += "\n  " + s;
    throw ConfigError(msg);
  }
  auto say = [&](const std::string& line) {
    if (log) *log << line << std::endl;
  };

  PipelineResult result;
  result.output_dir = resolve_output_dir(config);
  result.config_hash = config.hash();
  const auto& out = result.output_dir;
  const std::string hash_text = hash_hex(result.config_hash);

  std::set<InputVariant> inputs(config.inputs.begin(), config.inputs.end());
  const bool need_raw =
      inputs.contains(InputVariant::EvFilter) || inputs.contains(InputVariant::SpikeDetector);
  const std::uint64_t period_us = std::uint64_t{config.synth.sample_period_ms} * 1000;

  ReachTrajectory traj;
  std::optional<EventStream> gt, raw;
  if (config.data.any()) {
    stage("load", [&] {
      traj = read_trajectory_csv(*config.data.trajectory);
      if (config.data.gt_spikes) gt = read_events(*config.data.gt_spikes, format_for_path(*config.data.gt_spikes)).stream;
      if (config.data.events) raw = read_events(*config.data.events, format_for_path(*config.data.events)).stream;
    });
    say("loaded trajectory and event files");
  } else {
    SpikeTrain spikes;
    stage("synth", [&] {
      traj = gen_reaches(config.synth.n_reaches, period_us, config.synth.workspace,
                         config.seeds.trajectory, config.synth.reach);
      const auto tuning = make_tuning(config.synth.n_channels, config.seeds.tuning,
                                      config.synth.tuning);
      spikes = gen_spikes(traj, tuning, config.seeds.spikes, config.synth.spikes);
      gt = spike_train_to_stream(spikes);
    });
    say("synth: " + std::to_string(config.synth.n_reaches) + " reaches, " +
        std::to_string(gt->size()) + " spikes");
    if (need_raw) {
      stage("encode", [&] { raw = synthesize_events(spikes, config.encoder, config.seeds.noise); });
      say("encode: " + std::to_string(raw->size()) + " raw events");
    }
    stage("write", [&] {
      std::filesystem::create_directories(out);
      write_trajectory_csv(traj, out / "trajectory.csv", "config_hash=" + hash_text);
      if (config.write_events) {
        std::filesystem::create_directories(out / "events");
        write_events(*gt, out / "events" / "gt_spikes.nevt", EventFormat::Binary);
        if (raw) write_events(*raw, out / "events" / "raw.nevt", EventFormat::Binary);
      }
    });
  }

  std::optional<EventStream> evf, spd;
  if (inputs.contains(InputVariant::EvFilter)) {
    stage("filter", [&] {
      evf = filter_events(*raw, config.filter);
      result.evfilter = compression_ratio(*raw, *evf);
    });
    say("filter: " + std::to_string(evf->size()) + " events, compression " +
        fixed(result.evfilter->value(), 2));
  }
  if (inputs.contains(InputVariant::SpikeDetector)) {
    stage("detect", [&] {
      spd = filter_events(*raw, config.spike_detector);
      result.spike_detector = compression_ratio(*raw, *spd);
    });
    say("detect: " + std::to_string(spd->size()) + " detections, compression " +
        fixed(result.spike_detector->value(), 2));
  }
  if (config.write_events) {
    stage("write", [&] {
      std::filesystem::create_directories(out / "events");
      if (evf) write_events(*evf, out / "events" / "evfilter.nevt", EventFormat::Binary);
      if (spd) write_events(*spd, out / "events" / "spd.nevt", EventFormat::Binary);
    });
  }

  const DatasetSplit split = stage("split", [&] { return segment_and_split(traj); });

  std::string t1 = "decoder,t_bin_ms,input,r2_x,r2_y,r2_mean\n";
  std::string t2 =
      "decoder,t_bin_ms,input,activation_sparsity,macs,acs,memory_kb,model_size_kb,parameters\n";

  for (std::size_t di = 0; di < config.decoders.size(); ++di) {
    const DecoderRun& run = config.decoders[di];
    for (const auto input : config.inputs) {
      const EventStream& stream = input == InputVariant::GroundTruth ? *gt
                                  : input == InputVariant::EvFilter  ? *evf
                                                                     : *spd;
      const std::string tag = std::string(to_string(run.kind)) + "_" + to_string(input);
      const FeatureFrame frame =
          stage("featurize", [&] { return featurize(stream, run.features, traj); });
      if (config.write_features) {
        stage("write", [&] {
          std::filesystem::create_directories(out / "features");
          write_features(frame, out / "features" / (tag + ".nfea"), result.config_hash);
        });
      }
      const std::uint64_t seed =
          derive_seed(config.seeds.train, di * 4 + static_cast<std::uint64_t>(input));
      TrainResult trained = stage("train", [&] {
        return train_decoder(run.kind, frame, split, config.train, seed);
      });
      MetricsReport report = stage("eval", [&] {
        return evaluate(trained.model, select_reaches(frame, split.test));
      });
      report.input = to_string(input);
      report.config_hash = result.config_hash;
      if (input == InputVariant::EvFilter) report.compression = result.evfilter;
      if (input == InputVariant::SpikeDetector) report.compression = result.spike_detector;
      say("train " + tag + ": best epoch " + std::to_string(trained.best_epoch) + ", test R2 " +
          fixed(report.r2.mean, 4));

      const std::string tbin = run.features.mode == FeatureMode::Binary
                                   ? "stream"
                                   : std::to_string(run.features.t_bin_ms);
      t1 += report.decoder + "," + tbin + "," + report.input + "," + fixed(report.r2.x, 6) + "," +
            fixed(report.r2.y, 6) + "," + fixed(report.r2.mean, 6) + "\n";
      t2 += report.decoder + "," + tbin + "," + report.input + "," +
            fixed(report.ops.activation_sparsity, 6) + "," + fixed(report.ops.macs, 3) + "," +
            fixed(report.ops.acs, 3) + "," + fixed(report.memory_kb_per_inference, 3) + "," +
            fixed(report.model_size_kb, 3) + "," + std::to_string(report.parameter_count) + "\n";

      stage("write", [&] {
        write_atomic(out / "models" / (tag + ".ndec"),
                     serialize_model(trained.model, result.config_hash));
        write_atomic(out / "reports" / (tag + ".json"), report.to_json() + "\n");
        write_atomic(out / "logs" / (tag + ".csv"), log_csv(trained.log, hash_text));
      });
      result.reports.push_back(std::move(report));
      result.logs.push_back(std::move(trained.log));
    }
  }

  result.table1_csv = std::move(t1);
  result.table2_csv = std::move(t2);
  stage("write", [&] {
    write_atomic(out / "config.json", config.to_json() + "\n");
    write_atomic(out / "table1.csv", "# config_hash=" + hash_text + "\n" + result.table1_csv);
    write_atomic(out / "table2.csv", "# config_hash=" + hash_text + "\n" + result.table2_csv);
    write_atomic(out / "compression.json", compression_json(result));
    ojson summary;
    summary["config_hash"] = hash_text;
    summary["reports"] = ojson::array();
    for (const auto& r : result.reports) summary["reports"].push_back(ojson::parse(r.to_json()));
    write_atomic(out / "summary.json", summary.dump(2) + "\n");
  });
  return result;
}

}  // namespace evdec
