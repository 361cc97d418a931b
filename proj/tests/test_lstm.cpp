#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evdec/error.hpp"
#include "evdec/lstm.hpp"
#include "gradcheck.hpp"

using namespace evdec;
using evdec::nn::LstmDecoder;

namespace {

double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

TEST(Lstm, ZeroParametersKeepHiddenAtZero) {
  LstmDecoder<double> m({96, 32}, 1);
  for (auto* p : m.params()) std::fill(p->value.begin(), p->value.end(), 0.0);
  auto st = m.initial_state();
  std::vector<double> x(96, 2.0);
  double out[2];
  for (int t = 0; t < 5; ++t) {
    m.infer_step(x, st, out);
    EXPECT_EQ(out[0], 0.0);
    EXPECT_EQ(out[1], 0.0);
    for (double h : st.h) EXPECT_EQ(h, 0.0);
  }
}

TEST(Lstm, SingleStepMatchesGateEquations) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    LstmDecoder<double> m({96, 32}, seed);
    std::mt19937_64 rng(seed);
    const auto x = gradcheck::counts(96, rng, 3);
    auto st = m.initial_state();
    st.h = gradcheck::gaussian(32, rng, 0.5);
    st.c = gradcheck::gaussian(32, rng, 0.5);
    const auto h0 = st.h, c0 = st.c;
    double out[2];
    m.infer_step(x, st, out);

    const std::size_t H = 32;
    std::vector<double> h(H), c(H);
    for (std::size_t j = 0; j < H; ++j) {
      double z[4];
      for (std::size_t g = 0; g < 4; ++g) {
        const std::size_t row = g * H + j;
        double s = m.bias.value[row];
        for (std::size_t k = 0; k < 96; ++k) s += m.w_ih(row, k) * x[k];
        for (std::size_t k = 0; k < H; ++k) s += m.w_hh(row, k) * h0[k];
        z[g] = s;
      }
      const double i = sig(z[0]), f = sig(z[1]), g = std::tanh(z[2]), o = sig(z[3]);
      c[j] = f * c0[j] + i * g;
      h[j] = o * std::tanh(c[j]);
    }
    for (std::size_t j = 0; j < H; ++j) {
      EXPECT_NEAR(st.c[j], c[j], 1e-10);
      EXPECT_NEAR(st.h[j], h[j], 1e-10);
    }
    for (std::size_t r = 0; r < 2; ++r) {
      double y = m.head_b.value[r];
      for (std::size_t k = 0; k < H; ++k) y += m.head_w(r, k) * h[k];
      EXPECT_NEAR(out[r], y, 1e-10);
    }
  }
}

TEST(Lstm, ChunkedSequenceEqualsOneShot) {
  LstmDecoder<float> m({96, 32}, 4);
  std::mt19937_64 rng(4);
  std::vector<float> x(10 * 96);
  for (auto& v : x) v = static_cast<float>(std::uniform_int_distribution<int>(0, 3)(rng));
  auto whole = m.initial_state();
  const auto all = m.forward(x, 10, whole, nullptr);
  auto part = m.initial_state();
  auto a = m.forward(std::span<const float>(x).first(4 * 96), 4, part, nullptr);
  const auto b = m.forward(std::span<const float>(x).subspan(4 * 96), 6, part, nullptr);
  a.insert(a.end(), b.begin(), b.end());
  EXPECT_EQ(a, all);
  EXPECT_EQ(part.h, whole.h);
  EXPECT_EQ(part.c, whole.c);

  auto stepped = m.initial_state();
  for (std::size_t t = 0; t < 10; ++t) {
    float out[2];
    m.infer_step(std::span<const float>(x).subspan(t * 96, 96), stepped, out);
    EXPECT_NEAR(out[0], all[2 * t], 1e-6);
    EXPECT_NEAR(out[1], all[2 * t + 1], 1e-6);
  }
}

TEST(Lstm, GradientCheck) {
  for (std::uint64_t seed = 1; seed <= 2; ++seed) {
    const auto r = gradcheck::lstm(seed);
    EXPECT_TRUE(r.ok()) << "seed " << seed << " worst " << r.worst() << " in " << r.worst_name();
  }
}

TEST(Lstm, ZeroOutputGradientGivesZeroParameterGradients) {
  LstmDecoder<double> m({96, 32}, 2);
  std::mt19937_64 rng(2);
  const auto x = gradcheck::counts(3 * 96, rng, 2);
  auto st = m.initial_state();
  LstmDecoder<double>::Cache cache;
  m.forward(x, 3, st, &cache);
  for (auto* p : m.params()) p->zero_grad();
  m.backward(cache, std::vector<double>(6, 0.0));
  for (auto* p : m.params()) {
    for (double g : p->grad) EXPECT_EQ(g, 0.0);
  }
}

TEST(Lstm, DenseOpCountPerStep) {
  LstmDecoder<float> m({96, 32}, 1);
  auto st = m.initial_state();
  std::vector<float> x(96, 0.0f);
  nn::OpCounter ops;
  float out[2];
  m.infer_step(x, st, out, &ops);
  EXPECT_EQ(ops.macs, 4u * 32 * (96 + 32) + 32 * 2);
  EXPECT_EQ(ops.acs, 4u * 32 + 2);
}

TEST(Lstm, DimensionErrors) {
  LstmDecoder<float> m({96, 32}, 1);
  auto st = m.initial_state();
  std::vector<float> x(95);
  float out[2];
  EXPECT_THROW(m.infer_step(x, st, out), DomainError);
  EXPECT_THROW(m.forward(x, 1, st, nullptr), DomainError);
  LstmDecoder<float>::Cache empty;
  EXPECT_THROW(m.backward(empty, std::vector<float>(2)), StateError);
}
