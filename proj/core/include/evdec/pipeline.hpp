#pragma once

// End-to-end run from one JSON config: synthesize (or load) reaches, spikes
// and raw events, filter them, then featurize, train and evaluate every
// decoder on every requested input variant.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evdec/decoder_model.hpp"
#include "evdec/evfilter.hpp"
#include "evdec/features.hpp"
#include "evdec/metrics.hpp"
#include "evdec/synth.hpp"
#include "evdec/train.hpp"

namespace evdec {

/// Environment variable that, when set, replaces the configured output
/// directory.
inline constexpr const char* kOutputRootEnv = "EVDEC_OUTPUT_ROOT";

enum class InputVariant : std::uint8_t { GroundTruth, EvFilter, SpikeDetector };

/// "gt", "evfilter", "spd".
const char* to_string(InputVariant input);
InputVariant input_variant_from_string(const std::string& name);

struct SynthConfig {
  std::size_t n_reaches = 200;
  std::size_t n_channels = 96;
  std::uint32_t sample_period_ms = 4;
  Workspace workspace;
  ReachOptions reach;
  TuningRanges tuning;
  SpikeOptions spikes;
};

struct SeedConfig {
  std::uint64_t trajectory = 1;
  std::uint64_t tuning = 2;
  std::uint64_t spikes = 3;
  std::uint64_t noise = 4;
  std::uint64_t train = 5;
};

/// Recorded data used instead of synthesis. The trajectory is required when
/// any file is given; gt_spikes is an event file with one event per spike.
struct DataFiles {
  std::optional<std::filesystem::path> events;
  std::optional<std::filesystem::path> trajectory;
  std::optional<std::filesystem::path> gt_spikes;

  bool any() const noexcept { return events || trajectory || gt_spikes; }
};

struct DecoderRun {
  DecoderKind kind = DecoderKind::NN;
  FeatureConfig features;
};

/// Default feature settings for each decoder: frame 200/4 for NN, segmented
/// 200/4 with b = 8 for ST-NN, frame 34/4 for LSTM, binary 4 ms for SNN and
/// frame 300/4 for the linear baseline.
DecoderRun default_run(DecoderKind kind);

struct PipelineConfig {
  std::filesystem::path output_dir = "evdec_out";
  SynthConfig synth;
  EncoderParams encoder;
  FilterParams filter;
  FilterParams spike_detector = FilterParams::spike_detector();
  std::vector<InputVariant> inputs = {InputVariant::GroundTruth, InputVariant::EvFilter,
                                      InputVariant::SpikeDetector};
  std::vector<DecoderRun> decoders;
  TrainConfig train;
  SeedConfig seeds;
  DataFiles data;
  bool write_events = false;
  bool write_features = false;

  /// Relative data paths resolve against `base_dir`. Throws ConfigError on
  /// malformed JSON, wrong types or unknown keys.
  static PipelineConfig from_json(const std::string& text,
                                  const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);

  /// Canonical form with every default filled in. The output directory is
  /// left out so that relocating a run does not change its hash.
  std::string to_json() const;
  std::uint64_t hash() const;
};

/// Every violation in the config; empty when it is runnable.
std::vector<std::string> validate_config(const PipelineConfig& config);

/// Output directory after applying the environment override.
std::filesystem::path resolve_output_dir(const PipelineConfig& config);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);

/// Writes `path.partial` and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view data);

struct PipelineResult {
  std::filesystem::path output_dir;
  std::uint64_t config_hash = 0;
  std::optional<CompressionRatio> evfilter;
  std::optional<CompressionRatio> spike_detector;
  std::vector<MetricsReport> reports;
  std::vector<std::vector<EpochLog>> logs;  // parallel to reports
  std::string table1_csv;
  std::string table2_csv;
};

/// Runs every stage and writes reports, models and tables. A failing stage
/// is rethrown with the stage name prefixed, keeping the error category.
/// Progress lines go to `log` when given.
PipelineResult run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr);

}  // namespace evdec
