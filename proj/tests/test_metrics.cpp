#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "evdec/error.hpp"
#include "evdec/metrics.hpp"

using namespace evdec;

namespace {

FeatureFrame frame_of(std::size_t width, std::vector<std::vector<float>> rows,
                      FeatureMode mode = FeatureMode::Frame) {
  FeatureFrame f;
  f.mode = mode;
  f.n_channels = width;
  f.width = width;
  f.t_bin_ms = mode == FeatureMode::Binary ? 4 : 200;
  f.t_s_ms = 4;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    f.sample_times_us.push_back((i + 50) * 4000);
    f.reach_ids.push_back(0);
    f.x.insert(f.x.end(), rows[i].begin(), rows[i].end());
    f.y.push_back(static_cast<float>(i));
    f.y.push_back(static_cast<float>(i % 3));
  }
  return f;
}

// Zero batch-norm gains with unit shifts make every hidden activation 1.
DecoderModel dense_nn() {
  ModelSpec spec;
  spec.kind = DecoderKind::NN;
  DecoderModel m(spec, 1);
  auto& net = std::get<nn::MlpDecoder<float>>(m.net());
  for (auto* p : {&net.bn1_gain, &net.bn2_gain}) std::fill(p->value.begin(), p->value.end(), 0.0f);
  for (auto* p : {&net.bn1_shift, &net.bn2_shift}) std::fill(p->value.begin(), p->value.end(), 1.0f);
  return m;
}

}  // namespace

TEST(R2, KnownValues) {
  const std::vector<double> y{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(r2_score(y, y), 1.0);
  EXPECT_DOUBLE_EQ(r2_score(y, std::vector<double>(4, 2.5)), 0.0);
  EXPECT_NEAR(r2_score(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 2}), 0.5, 1e-12);
  // predictions halfway to the mean: ss_res = 0.25 * ss_tot
  EXPECT_DOUBLE_EQ(r2_score(y, std::vector<double>{1.75, 2.25, 2.75, 3.25}), 0.75);
  EXPECT_NEAR(r2_score(std::vector<double>{0, 2}, std::vector<double>{0.0, 2.0 - std::sqrt(2.0)}), 0.0,
              1e-12);
  EXPECT_LT(r2_score(y, std::vector<double>{4, 3, 2, 1}), 0.0);
}

TEST(R2, InvariantUnderJointAffineMapOfTargetsAndPredictions) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  std::vector<double> y(200), yh(200);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = n(rng);
    yh[i] = y[i] + 0.5 * n(rng);
  }
  const double base = r2_score(y, yh);
  for (const auto& [a, b] : {std::pair{3.0, -7.0}, std::pair{-0.01, 1e3}, std::pair{1e4, 0.0}}) {
    std::vector<double> ya(y.size()), yha(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      ya[i] = a * y[i] + b;
      yha[i] = a * yh[i] + b;
    }
    EXPECT_NEAR(r2_score(ya, yha), base, 1e-9);
  }
}

TEST(R2, Errors) {
  EXPECT_THROW(r2_score(std::vector<double>{1, 1, 1}, std::vector<double>{1, 1, 1}), NumericError);
  EXPECT_THROW(r2_score(std::vector<double>{1, 2}, std::vector<double>{1}), DomainError);
  EXPECT_THROW(r2_score(std::vector<double>{1}, std::vector<double>{1}), DomainError);
  EXPECT_THROW(r2_xy(std::vector<float>{1, 2, 3}, std::vector<float>{1, 2, 3}), DomainError);
}

TEST(R2, ComponentsAndMean) {
  const std::vector<float> t{1, 10, 2, 20, 3, 30, 4, 40};
  const std::vector<float> p{1, 25, 2, 25, 3, 25, 4, 25};
  const auto s = r2_xy(t, p);
  EXPECT_DOUBLE_EQ(s.x, 1.0);
  EXPECT_DOUBLE_EQ(s.y, 0.0);
  EXPECT_DOUBLE_EQ(s.mean, 0.5);
  // ss_tot = 10 per component; ss_res 2 for x and 4 for y
  const auto m = r2_xy(std::vector<float>{0, 0, 1, 1, 2, 2, 3, 3, 4, 4},
                       std::vector<float>{1, 2, 2, 1, 2, 2, 3, 3, 4, 4});
  EXPECT_NEAR(m.x, 0.8, 1e-12);
  EXPECT_NEAR(m.y, 0.6, 1e-12);
  EXPECT_NEAR(m.mean, 0.7, 1e-12);
  const std::vector<float> ts{10, 1, 20, 2, 30, 3, 40, 4};
  const std::vector<float> ps{25, 1, 25, 2, 25, 3, 25, 4};
  const auto w = r2_xy(ts, ps);
  EXPECT_DOUBLE_EQ(w.x, s.y);
  EXPECT_DOUBLE_EQ(w.y, s.x);
}

TEST(OpCount, NnDenseInputCountsEveryWeight) {
  const auto m = dense_nn();
  const auto f = frame_of(96, {std::vector<float>(96, 1.0f), std::vector<float>(96, 2.0f)});
  const auto ops = count_ops(m, f);
  EXPECT_EQ(ops.macs, 96.0 * 32 + 32 * 48 + 48 * 2);
  EXPECT_EQ(ops.macs, 4704.0);
  EXPECT_EQ(ops.acs, 32.0 + 48 + 2);
  EXPECT_EQ(ops.activation_sparsity, 0.0);
  EXPECT_EQ(ops.samples, 2u);
}

TEST(OpCount, ZeroInputsAreSkipped) {
  const auto m = dense_nn();
  std::vector<float> half(96, 0.0f);
  for (std::size_t i = 0; i < 48; ++i) half[2 * i] = 3.0f;
  const auto ops = count_ops(m, frame_of(96, {half}));
  EXPECT_EQ(ops.macs, 48.0 * 32 + 32 * 48 + 48 * 2);
  EXPECT_NEAR(ops.activation_sparsity, 48.0 / (96 + 32 + 48), 1e-12);
  EXPECT_EQ(count_ops(m, frame_of(96, {std::vector<float>(96, 0.0f)})).macs, 32.0 * 48 + 48 * 2);
}

TEST(OpCount, EachZeroedInputRemovesOneInputColumn) {
  const auto m = dense_nn();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(0.5f, 3.0f);
  std::vector<float> x(96);
  for (auto& v : x) v = u(rng);
  double prev = count_ops(m, frame_of(96, {x})).macs;
  for (std::size_t c = 0; c < 96; c += 7) {
    x[c] = 0.0f;
    const double now = count_ops(m, frame_of(96, {x})).macs;
    EXPECT_EQ(prev - now, 32.0);
    prev = now;
  }
}

TEST(OpCount, SnnUsesOnlyAccumulates) {
  ModelSpec spec;
  spec.kind = DecoderKind::SNN;
  const DecoderModel m(spec, 5);
  std::mt19937_64 rng(2);
  std::bernoulli_distribution bit(0.1);
  std::vector<std::vector<float>> rows(50, std::vector<float>(96));
  for (auto& r : rows)
    for (auto& v : r) v = bit(rng) ? 1.0f : 0.0f;
  const auto ops = count_ops(m, frame_of(96, rows, FeatureMode::Binary));
  EXPECT_EQ(ops.macs, 0.0);
  EXPECT_GE(ops.acs, 32.0 + 48 + 2);
  EXPECT_LE(ops.acs, 96.0 * 32 + 32 * 48 + 48 * 2 + 32 + 48 + 2);
  EXPECT_EQ(count_ops(m, frame_of(96, {std::vector<float>(96, 0.0f)}, FeatureMode::Binary)).acs,
            32.0 + 48 + 2);
}

TEST(OpCount, LstmPerStep) {
  ModelSpec spec;
  spec.kind = DecoderKind::LSTM;
  const DecoderModel m(spec, 5);
  const auto ops = count_ops(m, frame_of(96, {std::vector<float>(96, 1.0f), std::vector<float>(96, 1.0f)}));
  EXPECT_EQ(ops.macs, 16448.0);
  EXPECT_EQ(ops.acs, 130.0);
}

TEST(Size, ArithmeticAndInventories) {
  EXPECT_DOUBLE_EQ(model_size_kb(1000), 4.0);
  EXPECT_DOUBLE_EQ(model_size_kb(1000, 8), 1.0);
  ModelSpec nn_spec;
  const DecoderModel nn_model(nn_spec, 1);
  EXPECT_EQ(nn_model.parameter_count(), 3104u + 64 + 1584 + 96 + 98 + 2 * 32 + 2 * 48);
  EXPECT_NEAR(model_size_kb(nn_model) / 20.856, 1.0, 0.10);
  ModelSpec snn_spec;
  snn_spec.kind = DecoderKind::SNN;
  const DecoderModel snn_model(snn_spec, 1);
  EXPECT_EQ(snn_model.parameter_count(), 3106u + 1586 + 100 + 2);
  EXPECT_NEAR(model_size_kb(snn_model) / 19.628, 1.0, 0.10);
  ModelSpec lstm_spec;
  lstm_spec.kind = DecoderKind::LSTM;
  EXPECT_EQ(DecoderModel(lstm_spec, 1).parameter_count(), 16578u);
}

TEST(Memory, OneWeightReadPerOperation) {
  EXPECT_DOUBLE_EQ(memory_traffic_kb(4704), 150.528);
  EXPECT_DOUBLE_EQ(memory_traffic_kb(640), 20.48);
  EXPECT_DOUBLE_EQ(memory_traffic_kb(1000, 8), 8.0);
}

TEST(Report, EvaluateAndJson) {
  const auto m = dense_nn();
  auto f = frame_of(96, {std::vector<float>(96, 1.0f), std::vector<float>(96, 2.0f),
                         std::vector<float>(96, 0.0f)});
  auto r = evaluate(m, f);
  EXPECT_EQ(r.decoder, "nn");
  EXPECT_EQ(r.ops.samples, 3u);
  EXPECT_DOUBLE_EQ(r.memory_kb_per_inference, memory_traffic_kb(r.ops.macs + r.ops.acs));
  EXPECT_EQ(r.parameter_count, m.parameter_count());
  const auto direct = r2_xy(f.y, predict(m, f));
  EXPECT_EQ(r.r2.mean, direct.mean);
  r.input = "gt";
  r.config_hash = 0xabcULL;
  auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j["config_hash"], "0000000000000abc");
  EXPECT_TRUE(j["compression_ratio"].is_null());
  EXPECT_EQ(j["macs_per_inference"].get<double>(), r.ops.macs);
  r.compression = CompressionRatio{100, 8};
  j = nlohmann::json::parse(r.to_json());
  EXPECT_DOUBLE_EQ(j["compression_ratio"].get<double>(), 12.5);
  r.compression = CompressionRatio{100, 0};
  EXPECT_EQ(nlohmann::json::parse(r.to_json())["compression_ratio"], "inf");
  EXPECT_EQ(r.to_json(), r.to_json());
}

TEST(Report, IncompatibleFrameIsDomainError) {
  ModelSpec spec;
  spec.kind = DecoderKind::SNN;
  const DecoderModel m(spec, 1);
  EXPECT_THROW(evaluate(m, frame_of(96, {std::vector<float>(96, 1.0f)})), DomainError);
  EXPECT_THROW(count_ops(dense_nn(), frame_of(95, {std::vector<float>(95, 1.0f)})), DomainError);
}
