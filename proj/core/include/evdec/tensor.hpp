#pragma once

// Minimal dense-math core for the decoders: named parameter blocks with
// gradients, and an operation counter used for effective-op accounting.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "evdec/random.hpp"

namespace evdec::nn {

template <typename T>
struct Param {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 1;
  std::vector<T> value;
  std::vector<T> grad;

  Param() = default;
  Param(std::string n, std::size_t r, std::size_t c, T fill = T(0))
      : name(std::move(n)), rows(r), cols(c), value(r * c, fill), grad(r * c, T(0)) {}

  std::size_t size() const noexcept { return value.size(); }
  T& operator()(std::size_t r, std::size_t c) { return value[r * cols + c]; }
  T operator()(std::size_t r, std::size_t c) const { return value[r * cols + c]; }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

/// Effective synaptic operations of one or more inference steps. Only the
/// weight-layer accumulations are counted: a MAC per (nonzero input, output)
/// pair of a dense layer, an AC per (input spike, output) pair of a spiking
/// layer, and an AC per bias add.
struct OpCounter {
  std::uint64_t macs = 0;
  std::uint64_t acs = 0;
  std::uint64_t inputs = 0;       // entries entering weight layers
  std::uint64_t zero_inputs = 0;  // of which exactly zero
};

template <typename T>
void uniform_init(Param<T>& p, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : p.value) v = static_cast<T>(dist(rng));
}

/// y = W x (+ b). W is out x in. Counts every input whose value is nonzero as
/// fan-out MACs.
template <typename T>
void dense_apply(const Param<T>& w, const Param<T>* b, const T* x, T* y, OpCounter* ops) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    const T* row = w.value.data() + r * w.cols;
    T acc = b ? b->value[r] : T(0);
    for (std::size_t c = 0; c < w.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  if (ops) {
    std::uint64_t zeros = 0;
    for (std::size_t c = 0; c < w.cols; ++c) zeros += x[c] == T(0);
    ops->inputs += w.cols;
    ops->zero_inputs += zeros;
    ops->macs += (w.cols - zeros) * w.rows;
    if (b) ops->acs += w.rows;
  }
}

/// Y = X W^T + b for a row-major batch X (batch x in).
template <typename T>
void dense_batch(const Param<T>& w, const Param<T>& b, std::span<const T> x, std::size_t batch,
                 std::vector<T>& y) {
  y.assign(batch * w.rows, T(0));
  for (std::size_t n = 0; n < batch; ++n) {
    dense_apply(w, &b, x.data() + n * w.cols, y.data() + n * w.rows, nullptr);
  }
}

/// Accumulates dW += dY^T X, db += sum(dY) and, when dx is given,
/// dX = dY W.
template <typename T>
void dense_batch_backward(Param<T>& w, Param<T>& b, std::span<const T> x, std::span<const T> dy,
                          std::size_t batch, std::vector<T>* dx) {
  if (dx) dx->assign(batch * w.cols, T(0));
  for (std::size_t n = 0; n < batch; ++n) {
    const T* xn = x.data() + n * w.cols;
    const T* dyn = dy.data() + n * w.rows;
    for (std::size_t r = 0; r < w.rows; ++r) {
      const T g = dyn[r];
      b.grad[r] += g;
      if (g == T(0)) continue;
      T* gw = w.grad.data() + r * w.cols;
      for (std::size_t c = 0; c < w.cols; ++c) gw[c] += g * xn[c];
      if (dx) {
        const T* wr = w.value.data() + r * w.cols;
        T* dxn = dx->data() + n * w.cols;
        for (std::size_t c = 0; c < w.cols; ++c) dxn[c] += g * wr[c];
      }
    }
  }
}

/// Copies parameter values between two identically shaped lists, converting
/// the scalar type.
template <typename To, typename From>
void copy_values(const std::vector<Param<From>*>& src, const std::vector<Param<To>*>& dst) {
  for (std::size_t i = 0; i < src.size() && i < dst.size(); ++i) {
    dst[i]->value.resize(src[i]->size());
    for (std::size_t k = 0; k < src[i]->size(); ++k) {
      dst[i]->value[k] = static_cast<To>(src[i]->value[k]);
    }
  }
}

template <typename T>
inline T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

}  // namespace evdec::nn
