#pragma once

// Training protocol: MSE on (V_x, V_y), AdamW with per-epoch cosine annealing,
// shuffled mini-batches for the feed-forward decoders, chronological
// per-reach BPTT for the stateful ones, and a best-validation checkpoint.

#include <cstdint>
#include <string>
#include <vector>

#include "evdec/decoder_model.hpp"
#include "evdec/features.hpp"

namespace evdec {

struct TrainConfig {
  int epochs = 50;
  double learning_rate = 0.005;
  double weight_decay = 0.05;
  double dropout = -1.0;  // < 0 selects default_dropout(kind)
  std::size_t batch_size = 512;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double surrogate_alpha = 2.0;
  double ridge_lambda = 1e-3;
  std::size_t lstm_hidden = 32;
  double snn_beta_init = 0.95;
  double snn_threshold_init = 1.0;
  double snn_weight_scale = 1.0;

  std::vector<std::string> violations() const;
  std::string to_json() const;
  /// Missing keys keep their defaults; unknown keys are a ConfigError.
  static TrainConfig from_json(const std::string& text);
};

/// 0.5 for NN and ST-NN, 0.3 for SNN, 0 otherwise.
double default_dropout(DecoderKind kind);

ModelSpec make_model_spec(DecoderKind kind, std::size_t input_width, const TrainConfig& config);

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double val_r2 = 0.0;
};

struct TrainResult {
  DecoderModel model;
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_val_r2 = 0.0;
};

/// Trains a fresh decoder seeded by `seed`. Throws ConfigError for an empty
/// split partition or invalid config and DomainError when the feature mode
/// does not suit the decoder.
TrainResult train_decoder(DecoderKind kind, const FeatureFrame& frame, const DatasetSplit& split,
                          const TrainConfig& config, std::uint64_t seed);

}  // namespace evdec
