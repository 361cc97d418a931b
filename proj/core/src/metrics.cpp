#include "evdec/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include <nlohmann/json.hpp>

#include "evdec/error.hpp"

namespace evdec {

double r2_score(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) {
    throw DomainError("R^2 needs equal lengths, got " + std::to_string(y.size()) + " and " +
                      std::to_string(y_hat.size()));
  }
  if (y.size() < 2) throw DomainError("R^2 needs at least 2 samples");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot == 0.0) throw NumericError("R^2 is undefined for constant targets");
  return 1.0 - ss_res / ss_tot;
}

R2Scores r2_xy(std::span<const float> targets, std::span<const float> predictions) {
  if (targets.size() != predictions.size() || targets.size() % 2 != 0) {
    throw DomainError("targets and predictions must both be n x 2");
  }
  const std::size_t n = targets.size() / 2;
  std::vector<double> y(n), yh(n);
  R2Scores s;
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = targets[2 * i + c];
      yh[i] = predictions[2 * i + c];
    }
    (c == 0 ? s.x : s.y) = r2_score(y, yh);
  }
  s.mean = 0.5 * (s.x + s.y);
  return s;
}

namespace {

OpStats average(const nn::OpCounter& c, std::size_t samples) {
  OpStats s;
  s.samples = samples;
  if (samples == 0) return s;
  s.macs = static_cast<double>(c.macs) / static_cast<double>(samples);
  s.acs = static_cast<double>(c.acs) / static_cast<double>(samples);
  s.activation_sparsity =
      c.inputs == 0 ? 0.0 : static_cast<double>(c.zero_inputs) / static_cast<double>(c.inputs);
  return s;
}

}  // namespace

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

OpStats count_ops(const DecoderModel& model, const FeatureFrame& frame) {
  check_compatible(model, frame);
  Predictor p(model);
  nn::OpCounter counter;
  for (std::size_t i = 0; i < frame.size(); ++i) p.step(frame.row(i), &counter);
  return average(counter, frame.size());
}

double model_size_kb(std::size_t parameter_count, int bits) {
  return static_cast<double>(parameter_count) * bits / 8.0 / 1000.0;
}

double model_size_kb(const DecoderModel& model, int bits) {
  return model_size_kb(model.parameter_count(), bits);
}

double memory_traffic_kb(double effective_ops, int bits) { return effective_ops * bits / 1000.0; }

MetricsReport evaluate(const DecoderModel& model, const FeatureFrame& frame, int bits) {
  check_compatible(model, frame);
  Predictor p(model);
  nn::OpCounter counter;
  std::vector<float> pred(frame.size() * 2);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const auto v = p.step(frame.row(i), &counter);
    pred[2 * i] = v[0];
    pred[2 * i + 1] = v[1];
  }
  MetricsReport r;
  r.decoder = to_string(model.kind());
  r.r2 = r2_xy(frame.y, pred);
  r.ops = average(counter, frame.size());
  r.memory_kb_per_inference = memory_traffic_kb(r.ops.macs + r.ops.acs, bits);
  r.parameter_count = model.parameter_count();
  r.model_size_kb = model_size_kb(r.parameter_count, bits);
  r.seed = model.seed();
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["decoder"] = decoder;
  j["input"] = input;
  j["r2_x"] = r2.x;
  j["r2_y"] = r2.y;
  j["r2_mean"] = r2.mean;
  j["macs_per_inference"] = ops.macs;
  j["acs_per_inference"] = ops.acs;
  j["activation_sparsity"] = ops.activation_sparsity;
  j["samples"] = ops.samples;
  j["memory_kb_per_inference"] = memory_kb_per_inference;
  j["model_size_kb"] = model_size_kb;
  j["parameter_count"] = parameter_count;
  if (compression) {
    j["events_raw"] = compression->raw;
    j["events_filtered"] = compression->filtered;
    if (compression->is_infinite()) {
      j["compression_ratio"] = "inf";
    } else {
      j["compression_ratio"] = compression->value();
    }
  } else {
    j["compression_ratio"] = nullptr;
  }
  j["config_hash"] = hash_hex(config_hash);
  j["seed"] = seed;
  return j.dump(2);
}

}  // namespace evdec
