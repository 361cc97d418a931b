#pragma once

// Fully connected decoder used for frame (NN) and segmented-bin (ST-NN)
// features:
//   dense(in->32) -> BN -> ReLU -> dropout -> dense(32->48) -> BN -> ReLU
//   -> dropout -> dense(48->2)

#include <cstddef>
#include <span>
#include <vector>

#include "evdec/tensor.hpp"

namespace evdec::nn {

struct MlpConfig {
  std::size_t input = 96;
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 48;
  double dropout = 0.5;
};

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

template <typename T>
class MlpDecoder {
 public:
  struct Cache {
    std::size_t batch = 0;
    std::vector<T> x;
    std::vector<T> h1, xhat1, a1, m1;  // dense out, normalized, post-ReLU, dropout mask
    std::vector<T> h2, xhat2, a2, m2;
    std::vector<T> d1, d2;             // inputs to the next dense layer
    std::vector<T> inv_std1, inv_std2;
    bool train = false;
  };

  MlpDecoder() = default;
  MlpDecoder(const MlpConfig& config, std::uint64_t seed);

  /// Batch forward; x is batch x input, row-major. In train mode batch-norm
  /// uses batch statistics (updating running stats when `update_stats`) and
  /// dropout draws from `rng` (a null rng disables dropout). Returns batch x 2.
  std::vector<T> forward(std::span<const T> x, std::size_t batch, bool train, Cache* cache,
                         Rng* rng, bool update_stats = true);

  /// Accumulates parameter gradients for dLoss/dOut (batch x 2).
  void backward(const Cache& cache, std::span<const T> d_out);

  /// Single-sample eval-mode inference.
  void infer(std::span<const T> x, T* out, OpCounter* ops = nullptr) const;

  std::vector<Param<T>*> params();
  std::vector<const Param<T>*> params() const;
  /// Batch-norm running statistics, which are stored but not trained.
  std::vector<Param<T>*> buffers();
  std::vector<const Param<T>*> buffers() const;

  const MlpConfig& config() const noexcept { return config_; }
  void set_dropout(double p) { config_.dropout = p; }

  Param<T> fc1_w, fc1_b, bn1_gain, bn1_shift, fc2_w, fc2_b, bn2_gain, bn2_shift, fc3_w, fc3_b;
  Param<T> bn1_mean, bn1_var, bn2_mean, bn2_var;

 private:
  MlpConfig config_;
};

}  // namespace evdec::nn
