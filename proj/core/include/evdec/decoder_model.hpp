#pragma once

// A trained decoder of any kind behind one interface: construction from an
// architecture spec, parameter inventory, and eval-mode prediction.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "evdec/features.hpp"
#include "evdec/linear.hpp"
#include "evdec/lstm.hpp"
#include "evdec/mlp.hpp"
#include "evdec/snn.hpp"

namespace evdec {

enum class DecoderKind : std::uint8_t { NN = 0, STNN = 1, LSTM = 2, SNN = 3, Linear = 4 };

/// "nn", "stnn", "lstm", "snn", "linear".
const char* to_string(DecoderKind kind);
/// Throws ConfigError on an unknown name.
DecoderKind decoder_kind_from_string(const std::string& name);

/// frame for NN and LSTM, segmented for ST-NN, binary for SNN. The linear
/// baseline accepts any mode and reports frame here.
FeatureMode required_feature_mode(DecoderKind kind);
bool accepts_feature_mode(DecoderKind kind, FeatureMode mode);
bool is_stateful(DecoderKind kind);

struct ModelSpec {
  DecoderKind kind = DecoderKind::NN;
  std::size_t input = 96;
  std::size_t hidden1 = 32;  // NN, ST-NN, SNN
  std::size_t hidden2 = 48;
  std::size_t lstm_hidden = 32;
  double dropout = 0.5;
  double snn_beta_init = 0.95;
  double snn_threshold_init = 1.0;
  double snn_weight_scale = 1.0;
  double surrogate_alpha = 2.0;

  nn::MlpConfig mlp_config() const { return {input, hidden1, hidden2, dropout}; }
  nn::LstmConfig lstm_config() const { return {input, lstm_hidden}; }
  nn::SnnConfig snn_config() const {
    return {input, hidden1, hidden2, snn_beta_init, snn_threshold_init, snn_weight_scale,
            surrogate_alpha};
  }
  std::string to_json() const;
  /// Throws ConfigError on malformed JSON or unknown kind.
  static ModelSpec from_json(const std::string& text);
};

class DecoderModel {
 public:
  using Net = std::variant<nn::MlpDecoder<float>, nn::LstmDecoder<float>, nn::SnnDecoder<float>,
                           LinearDecoder>;

  DecoderModel() = default;
  /// Freshly initialized network. A linear model starts at zero.
  DecoderModel(const ModelSpec& spec, std::uint64_t seed);
  DecoderModel(const ModelSpec& spec, LinearDecoder linear);

  DecoderKind kind() const noexcept { return spec_.kind; }
  const ModelSpec& spec() const noexcept { return spec_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t input_width() const noexcept { return spec_.input; }

  /// Every stored tensor (trainable parameters, then batch-norm running
  /// statistics) in file order.
  std::vector<nn::Param<float>*> tensors();
  std::vector<const nn::Param<float>*> tensors() const;
  std::size_t parameter_count() const;

  Net& net() noexcept { return net_; }
  const Net& net() const noexcept { return net_; }

  /// Training hyperparameter snapshot, stored verbatim in model files.
  std::string training_json = "{}";

 private:
  ModelSpec spec_;
  std::uint64_t seed_ = 0;
  Net net_;
};

/// Eval-mode stepper. Stateful models carry their state across calls until
/// reset(), so feeding a sequence in chunks equals feeding it at once.
class Predictor {
 public:
  explicit Predictor(const DecoderModel& model);
  void reset();
  std::array<float, 2> step(std::span<const float> x, nn::OpCounter* ops = nullptr);

 private:
  const DecoderModel* model_;
  nn::LstmState<float> lstm_;
  nn::SnnState<float> snn_;
};

/// Throws DomainError when the frame's mode or width does not fit the model.
void check_compatible(const DecoderModel& model, const FeatureFrame& frame);

/// Predictions (size() x 2) over the frame in order, with a single state reset
/// at the start.
std::vector<float> predict(const DecoderModel& model, const FeatureFrame& frame);

}  // namespace evdec
