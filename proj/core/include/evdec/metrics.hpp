#pragma once

// Decoding quality and resource accounting.
//
//   R^2 = 1 - sum (y - yhat)^2 / sum (y - mean(y))^2   (not clamped)
//   model size  = parameters * bits / 8 / 1000               [KB]
//   memory      = (MACs + ACs) * bits / 1000                 [Kb per inference]
//
// The memory figure counts one weight read per effective operation.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "evdec/decoder_model.hpp"
#include "evdec/evfilter.hpp"
#include "evdec/features.hpp"

namespace evdec {

/// Throws DomainError for mismatched lengths or fewer than 2 samples and
/// NumericError when the targets have zero variance.
double r2_score(std::span<const double> y, std::span<const double> y_hat);

struct R2Scores {
  double x = 0.0;
  double y = 0.0;
  double mean = 0.0;
};

/// Component-wise R^2 of interleaved (V_x, V_y) rows, and their mean.
R2Scores r2_xy(std::span<const float> targets, std::span<const float> predictions);

struct OpStats {
  double macs = 0.0;  // per inference
  double acs = 0.0;
  double activation_sparsity = 0.0;  // zero fraction of weight-layer inputs
  std::size_t samples = 0;
};

/// Runs eval-mode inference over the frame (one state reset) and averages
/// the effective operations per sample.
OpStats count_ops(const DecoderModel& model, const FeatureFrame& frame);

double model_size_kb(std::size_t parameter_count, int bits = 32);
double model_size_kb(const DecoderModel& model, int bits = 32);
double memory_traffic_kb(double effective_ops, int bits = 32);

struct MetricsReport {
  std::string decoder;
  std::string input;  // gt, evfilter, spd, or a file name
  R2Scores r2;
  OpStats ops;
  double memory_kb_per_inference = 0.0;
  double model_size_kb = 0.0;
  std::size_t parameter_count = 0;
  std::optional<CompressionRatio> compression;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;

  /// Stable key order and number formatting, so equal reports are equal bytes.
  std::string to_json() const;
};

/// 16 lowercase hex digits.
std::string hash_hex(std::uint64_t hash);

/// Predicts the frame once, scoring R^2 and counting operations together.
MetricsReport evaluate(const DecoderModel& model, const FeatureFrame& frame, int bits = 32);

}  // namespace evdec
