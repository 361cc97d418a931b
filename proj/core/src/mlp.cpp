#include "evdec/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evdec/error.hpp"

namespace evdec::nn {

namespace {

template <typename T>
void batch_norm_train(std::vector<T>& h, std::size_t batch, Param<T>& gain, Param<T>& shift,
                      Param<T>& mean, Param<T>& var, bool update, std::vector<T>& xhat,
                      std::vector<T>& inv_std) {
  const std::size_t f = gain.size();
  xhat.resize(h.size());
  inv_std.assign(f, T(0));
  for (std::size_t j = 0; j < f; ++j) {
    T mu = 0;
    for (std::size_t n = 0; n < batch; ++n) mu += h[n * f + j];
    mu /= static_cast<T>(batch);
    T sq = 0;
    for (std::size_t n = 0; n < batch; ++n) {
      const T d = h[n * f + j] - mu;
      sq += d * d;
    }
    const T biased = sq / static_cast<T>(batch);
    const T is = T(1) / std::sqrt(biased + static_cast<T>(kBatchNormEpsilon));
    inv_std[j] = is;
    for (std::size_t n = 0; n < batch; ++n) {
      const T xh = (h[n * f + j] - mu) * is;
      xhat[n * f + j] = xh;
      h[n * f + j] = gain.value[j] * xh + shift.value[j];
    }
    if (update) {
      const T m = static_cast<T>(kBatchNormMomentum);
      const T unbiased = batch > 1 ? sq / static_cast<T>(batch - 1) : biased;
      mean.value[j] = (T(1) - m) * mean.value[j] + m * mu;
      var.value[j] = (T(1) - m) * var.value[j] + m * unbiased;
    }
  }
}

template <typename T>
void batch_norm_eval(T* h, std::size_t f, const Param<T>& gain, const Param<T>& shift,
                     const Param<T>& mean, const Param<T>& var, T* xhat) {
  for (std::size_t j = 0; j < f; ++j) {
    const T xh = (h[j] - mean.value[j]) / std::sqrt(var.value[j] + static_cast<T>(kBatchNormEpsilon));
    if (xhat) xhat[j] = xh;
    h[j] = gain.value[j] * xh + shift.value[j];
  }
}

// dy holds dLoss/d(BN output); on return it holds dLoss/d(BN input).
template <typename T>
void batch_norm_backward(std::vector<T>& dy, std::size_t batch, bool train,
                         const std::vector<T>& xhat, const std::vector<T>& inv_std,
                         Param<T>& gain, Param<T>& shift) {
  const std::size_t f = gain.size();
  for (std::size_t j = 0; j < f; ++j) {
    T sum_dy = 0, sum_dy_xhat = 0;
    for (std::size_t n = 0; n < batch; ++n) {
      sum_dy += dy[n * f + j];
      sum_dy_xhat += dy[n * f + j] * xhat[n * f + j];
    }
    gain.grad[j] += sum_dy_xhat;
    shift.grad[j] += sum_dy;
    const T g = gain.value[j];
    const T is = inv_std[j];
    if (train) {
      const T b = static_cast<T>(batch);
      for (std::size_t n = 0; n < batch; ++n) {
        T& d = dy[n * f + j];
        d = g * is / b * (b * d - sum_dy - xhat[n * f + j] * sum_dy_xhat);
      }
    } else {
      for (std::size_t n = 0; n < batch; ++n) dy[n * f + j] *= g * is;
    }
  }
}

template <typename T>
void relu_dropout(const std::vector<T>& y, std::vector<T>& a, std::vector<T>& mask,
                  std::vector<T>& out, double p, Rng* rng) {
  a.resize(y.size());
  out.resize(y.size());
  mask.assign(y.size(), T(1));
  const bool drop = rng != nullptr && p > 0.0;
  std::bernoulli_distribution keep(drop ? 1.0 - p : 1.0);
  const T scale = drop ? static_cast<T>(1.0 / (1.0 - p)) : T(1);
  for (std::size_t i = 0; i < y.size(); ++i) {
    a[i] = std::max(y[i], T(0));
    if (drop) mask[i] = keep(*rng) ? scale : T(0);
    out[i] = a[i] * mask[i];
  }
}

}  // namespace

template <typename T>
MlpDecoder<T>::MlpDecoder(const MlpConfig& config, std::uint64_t seed)
    : fc1_w("fc1.weight", config.hidden1, config.input),
      fc1_b("fc1.bias", config.hidden1, 1),
      bn1_gain("bn1.weight", config.hidden1, 1, T(1)),
      bn1_shift("bn1.bias", config.hidden1, 1),
      fc2_w("fc2.weight", config.hidden2, config.hidden1),
      fc2_b("fc2.bias", config.hidden2, 1),
      bn2_gain("bn2.weight", config.hidden2, 1, T(1)),
      bn2_shift("bn2.bias", config.hidden2, 1),
      fc3_w("fc3.weight", 2, config.hidden2),
      fc3_b("fc3.bias", 2, 1),
      bn1_mean("bn1.running_mean", config.hidden1, 1),
      bn1_var("bn1.running_var", config.hidden1, 1, T(1)),
      bn2_mean("bn2.running_mean", config.hidden2, 1),
      bn2_var("bn2.running_var", config.hidden2, 1, T(1)),
      config_(config) {
  if (config.input == 0) throw ConfigError("MLP input width must be positive");
  Rng rng(derive_seed(seed, 0x4d4c50));
  const auto init = [&](Param<T>& w, Param<T>& b) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols));
    uniform_init(w, bound, rng);
    uniform_init(b, bound, rng);
  };
  init(fc1_w, fc1_b);
  init(fc2_w, fc2_b);
  init(fc3_w, fc3_b);
}

template <typename T>
std::vector<T> MlpDecoder<T>::forward(std::span<const T> x, std::size_t batch, bool train,
                                      Cache* cache, Rng* rng, bool update_stats) {
  if (x.size() != batch * config_.input) {
    throw DomainError("MLP input has " + std::to_string(x.size()) + " values, expected " +
                      std::to_string(batch) + " x " + std::to_string(config_.input));
  }
  if (train && batch < 2) throw DomainError("batch-norm training needs a batch of at least 2");
  Cache local;
  Cache& c = cache ? *cache : local;
  c.batch = batch;
  c.train = train;
  c.x.assign(x.begin(), x.end());
  Rng* drop_rng = train ? rng : nullptr;

  dense_batch(fc1_w, fc1_b, x, batch, c.h1);
  if (train) {
    batch_norm_train(c.h1, batch, bn1_gain, bn1_shift, bn1_mean, bn1_var, update_stats, c.xhat1,
                     c.inv_std1);
  } else {
    c.xhat1.resize(c.h1.size());
    for (std::size_t n = 0; n < batch; ++n) {
      batch_norm_eval(c.h1.data() + n * config_.hidden1, config_.hidden1, bn1_gain, bn1_shift,
                      bn1_mean, bn1_var, c.xhat1.data() + n * config_.hidden1);
    }
    c.inv_std1.resize(config_.hidden1);
    for (std::size_t j = 0; j < config_.hidden1; ++j) {
      c.inv_std1[j] = T(1) / std::sqrt(bn1_var.value[j] + static_cast<T>(kBatchNormEpsilon));
    }
  }
  relu_dropout(c.h1, c.a1, c.m1, c.d1, config_.dropout, drop_rng);

  dense_batch(fc2_w, fc2_b, std::span<const T>(c.d1), batch, c.h2);
  if (train) {
    batch_norm_train(c.h2, batch, bn2_gain, bn2_shift, bn2_mean, bn2_var, update_stats, c.xhat2,
                     c.inv_std2);
  } else {
    c.xhat2.resize(c.h2.size());
    for (std::size_t n = 0; n < batch; ++n) {
      batch_norm_eval(c.h2.data() + n * config_.hidden2, config_.hidden2, bn2_gain, bn2_shift,
                      bn2_mean, bn2_var, c.xhat2.data() + n * config_.hidden2);
    }
    c.inv_std2.resize(config_.hidden2);
    for (std::size_t j = 0; j < config_.hidden2; ++j) {
      c.inv_std2[j] = T(1) / std::sqrt(bn2_var.value[j] + static_cast<T>(kBatchNormEpsilon));
    }
  }
  relu_dropout(c.h2, c.a2, c.m2, c.d2, config_.dropout, drop_rng);

  std::vector<T> out;
  dense_batch(fc3_w, fc3_b, std::span<const T>(c.d2), batch, out);
  return out;
}

template <typename T>
void MlpDecoder<T>::backward(const Cache& c, std::span<const T> d_out) {
  if (c.batch == 0 || c.x.empty()) throw StateError("MLP backward called without a forward cache");
  if (d_out.size() != c.batch * 2) throw DomainError("MLP output gradient has the wrong size");
  std::vector<T> g2, g1, unused;
  dense_batch_backward(fc3_w, fc3_b, std::span<const T>(c.d2), d_out, c.batch, &g2);
  for (std::size_t i = 0; i < g2.size(); ++i) g2[i] *= c.m2[i] * (c.a2[i] > T(0) ? T(1) : T(0));
  batch_norm_backward(g2, c.batch, c.train, c.xhat2, c.inv_std2, bn2_gain, bn2_shift);
  dense_batch_backward(fc2_w, fc2_b, std::span<const T>(c.d1), std::span<const T>(g2), c.batch,
                       &g1);
  for (std::size_t i = 0; i < g1.size(); ++i) g1[i] *= c.m1[i] * (c.a1[i] > T(0) ? T(1) : T(0));
  batch_norm_backward(g1, c.batch, c.train, c.xhat1, c.inv_std1, bn1_gain, bn1_shift);
  dense_batch_backward(fc1_w, fc1_b, std::span<const T>(c.x), std::span<const T>(g1), c.batch,
                       static_cast<std::vector<T>*>(nullptr));
}

template <typename T>
void MlpDecoder<T>::infer(std::span<const T> x, T* out, OpCounter* ops) const {
  if (x.size() != config_.input) {
    throw DomainError("MLP input has " + std::to_string(x.size()) + " values, expected " +
                      std::to_string(config_.input));
  }
  std::vector<T> h1(config_.hidden1), h2(config_.hidden2);
  dense_apply(fc1_w, &fc1_b, x.data(), h1.data(), ops);
  batch_norm_eval(h1.data(), h1.size(), bn1_gain, bn1_shift, bn1_mean, bn1_var,
                  static_cast<T*>(nullptr));
  for (auto& v : h1) v = std::max(v, T(0));
  dense_apply(fc2_w, &fc2_b, h1.data(), h2.data(), ops);
  batch_norm_eval(h2.data(), h2.size(), bn2_gain, bn2_shift, bn2_mean, bn2_var,
                  static_cast<T*>(nullptr));
  for (auto& v : h2) v = std::max(v, T(0));
  dense_apply(fc3_w, &fc3_b, h2.data(), out, ops);
}

template <typename T>
std::vector<Param<T>*> MlpDecoder<T>::params() {
  return {&fc1_w, &fc1_b, &bn1_gain, &bn1_shift, &fc2_w, &fc2_b,
          &bn2_gain, &bn2_shift, &fc3_w, &fc3_b};
}

template <typename T>
std::vector<const Param<T>*> MlpDecoder<T>::params() const {
  return {&fc1_w, &fc1_b, &bn1_gain, &bn1_shift, &fc2_w, &fc2_b,
          &bn2_gain, &bn2_shift, &fc3_w, &fc3_b};
}

template <typename T>
std::vector<Param<T>*> MlpDecoder<T>::buffers() {
  return {&bn1_mean, &bn1_var, &bn2_mean, &bn2_var};
}

template <typename T>
std::vector<const Param<T>*> MlpDecoder<T>::buffers() const {
  return {&bn1_mean, &bn1_var, &bn2_mean, &bn2_var};
}

template class MlpDecoder<float>;
template class MlpDecoder<double>;

}  // namespace evdec::nn
