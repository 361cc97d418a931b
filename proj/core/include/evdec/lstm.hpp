#pragma once

// Single-cell LSTM (gate order input, forget, cell, output) with a dense
// head to (V_x, V_y) at every step.

#include <cstddef>
#include <span>
#include <vector>

#include "evdec/tensor.hpp"

namespace evdec::nn {

struct LstmConfig {
  std::size_t input = 96;
  std::size_t hidden = 32;
};

template <typename T>
struct LstmState {
  std::vector<T> h;
  std::vector<T> c;
};

template <typename T>
class LstmDecoder {
 public:
  struct Cache {
    std::size_t steps = 0;
    std::vector<T> x;                   // steps x input
    std::vector<T> gates;               // steps x 4H, post-activation
    std::vector<T> c, h;                // steps x H
    std::vector<T> c0, h0;              // state entering the sequence
  };

  LstmDecoder() = default;
  LstmDecoder(const LstmConfig& config, std::uint64_t seed);

  LstmState<T> initial_state() const;

  /// Runs `steps` inputs (row-major) from `state`, leaving the final state in
  /// it. Returns steps x 2 outputs.
  std::vector<T> forward(std::span<const T> x, std::size_t steps, LstmState<T>& state,
                         Cache* cache) const;

  /// Full backpropagation through time over the cached sequence.
  void backward(const Cache& cache, std::span<const T> d_out);

  /// One eval step; every product is counted as a MAC.
  void infer_step(std::span<const T> x, LstmState<T>& state, T* out, OpCounter* ops = nullptr) const;

  std::vector<Param<T>*> params();
  std::vector<const Param<T>*> params() const;

  const LstmConfig& config() const noexcept { return config_; }

  Param<T> w_ih, w_hh, bias, head_w, head_b;

 private:
  LstmConfig config_;
};

}  // namespace evdec::nn
