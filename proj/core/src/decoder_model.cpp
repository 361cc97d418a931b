#include "evdec/decoder_model.hpp"

#include <nlohmann/json.hpp>

#include "evdec/error.hpp"

namespace evdec {

namespace {

template <class... F>
struct Overloaded : F... {
  using F::operator()...;
};
template <class... F>
Overloaded(F...) -> Overloaded<F...>;

}  // namespace

const char* to_string(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::NN: return "nn";
    case DecoderKind::STNN: return "stnn";
    case DecoderKind::LSTM: return "lstm";
    case DecoderKind::SNN: return "snn";
    case DecoderKind::Linear: return "linear";
  }
  return "?";
}

DecoderKind decoder_kind_from_string(const std::string& name) {
  for (auto k : {DecoderKind::NN, DecoderKind::STNN, DecoderKind::LSTM, DecoderKind::SNN,
                 DecoderKind::Linear}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown decoder '" + name + "' (expected nn, stnn, lstm, snn or linear)");
}

FeatureMode required_feature_mode(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::STNN: return FeatureMode::Segmented;
    case DecoderKind::SNN: return FeatureMode::Binary;
    default: return FeatureMode::Frame;
  }
}

bool accepts_feature_mode(DecoderKind kind, FeatureMode mode) {
  return kind == DecoderKind::Linear || mode == required_feature_mode(kind);
}

bool is_stateful(DecoderKind kind) {
  return kind == DecoderKind::LSTM || kind == DecoderKind::SNN;
}

std::string ModelSpec::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = evdec::to_string(kind);
  j["input"] = input;
  j["hidden1"] = hidden1;
  j["hidden2"] = hidden2;
  j["lstm_hidden"] = lstm_hidden;
  j["dropout"] = dropout;
  j["snn_beta_init"] = snn_beta_init;
  j["snn_threshold_init"] = snn_threshold_init;
  j["snn_weight_scale"] = snn_weight_scale;
  j["surrogate_alpha"] = surrogate_alpha;
  return j.dump();
}

ModelSpec ModelSpec::from_json(const std::string& text) {
  ModelSpec s;
  try {
    const auto j = nlohmann::json::parse(text);
    s.kind = decoder_kind_from_string(j.at("kind").get<std::string>());
    s.input = j.at("input").get<std::size_t>();
    s.hidden1 = j.value("hidden1", s.hidden1);
    s.hidden2 = j.value("hidden2", s.hidden2);
    s.lstm_hidden = j.value("lstm_hidden", s.lstm_hidden);
    s.dropout = j.value("dropout", s.dropout);
    s.snn_beta_init = j.value("snn_beta_init", s.snn_beta_init);
    s.snn_threshold_init = j.value("snn_threshold_init", s.snn_threshold_init);
    s.snn_weight_scale = j.value("snn_weight_scale", s.snn_weight_scale);
    s.surrogate_alpha = j.value("surrogate_alpha", s.surrogate_alpha);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model spec: ") + e.what());
  }
  return s;
}

DecoderModel::DecoderModel(const ModelSpec& spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
  if (spec.input == 0) throw ConfigError("model input width must be positive");
  switch (spec.kind) {
    case DecoderKind::NN:
    case DecoderKind::STNN:
      net_ = nn::MlpDecoder<float>(spec.mlp_config(), seed);
      break;
    case DecoderKind::LSTM:
      net_ = nn::LstmDecoder<float>(spec.lstm_config(), seed);
      break;
    case DecoderKind::SNN:
      net_ = nn::SnnDecoder<float>(spec.snn_config(), seed);
      break;
    case DecoderKind::Linear:
      net_ = LinearDecoder(spec.input);
      break;
  }
}

DecoderModel::DecoderModel(const ModelSpec& spec, LinearDecoder linear) : spec_(spec) {
  if (spec.kind != DecoderKind::Linear || linear.input() != spec.input) {
    throw ConfigError("linear model does not match its spec");
  }
  net_ = std::move(linear);
}

std::vector<nn::Param<float>*> DecoderModel::tensors() {
  return std::visit(Overloaded{
                        [](nn::MlpDecoder<float>& m) {
                          auto p = m.params();
                          for (auto* b : m.buffers()) p.push_back(b);
                          return p;
                        },
                        [](auto& m) { return m.params(); },
                    },
                    net_);
}

std::vector<const nn::Param<float>*> DecoderModel::tensors() const {
  return std::visit(Overloaded{
                        [](const nn::MlpDecoder<float>& m) {
                          auto p = m.params();
                          for (auto* b : m.buffers()) p.push_back(b);
                          return p;
                        },
                        [](const auto& m) { return m.params(); },
                    },
                    net_);
}

std::size_t DecoderModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : tensors()) n += p->size();
  return n;
}

Predictor::Predictor(const DecoderModel& model) : model_(&model) { reset(); }

void Predictor::reset() {
  if (const auto* l = std::get_if<nn::LstmDecoder<float>>(&model_->net())) {
    lstm_ = l->initial_state();
  } else if (const auto* s = std::get_if<nn::SnnDecoder<float>>(&model_->net())) {
    snn_ = s->initial_state();
  }
}

std::array<float, 2> Predictor::step(std::span<const float> x, nn::OpCounter* ops) {
  if (x.size() != model_->input_width()) {
    throw DomainError("decoder expects " + std::to_string(model_->input_width()) +
                      " features per sample, got " + std::to_string(x.size()));
  }
  std::array<float, 2> out{};
  std::visit(Overloaded{
                 [&](const nn::MlpDecoder<float>& m) { m.infer(x, out.data(), ops); },
                 [&](const nn::LstmDecoder<float>& m) { m.infer_step(x, lstm_, out.data(), ops); },
                 [&](const nn::SnnDecoder<float>& m) { m.infer_step(x, snn_, out.data(), ops); },
                 [&](const LinearDecoder& m) { m.infer(x, out.data(), ops); },
             },
             model_->net());
  return out;
}

void check_compatible(const DecoderModel& model, const FeatureFrame& frame) {
  if (!accepts_feature_mode(model.kind(), frame.mode)) {
    throw DomainError(std::string(to_string(model.kind())) + " decoder needs " +
                      to_string(required_feature_mode(model.kind())) + " features, got " +
                      to_string(frame.mode));
  }
  if (frame.width != model.input_width()) {
    throw DomainError("feature width " + std::to_string(frame.width) +
                      " does not match decoder input " + std::to_string(model.input_width()));
  }
}

std::vector<float> predict(const DecoderModel& model, const FeatureFrame& frame) {
  check_compatible(model, frame);
  Predictor p(model);
  std::vector<float> out(frame.size() * 2);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const auto v = p.step(frame.row(i));
    out[2 * i] = v[0];
    out[2 * i + 1] = v[1];
  }
  return out;
}

}  // namespace evdec
