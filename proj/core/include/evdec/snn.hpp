#pragma once

// Three-layer leaky integrate-and-fire decoder. Per layer and step:
//
//   U[t] = beta * U[t-1] + W X[t] + b - S[t-1] * theta
//   theta = beta * U[t-1] + W X[t] + b   (reset to zero), 0 (no reset)
//   S[t]  = 1 if U[t] > U_thr else 0
//
// Layers 1 and 2 reset to zero; layer 3 never resets and its membrane
// potential, scaled per output by a learned constant, is the prediction.
// beta = sigmoid(beta_raw) keeps the decay inside (0, 1).

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "evdec/tensor.hpp"

namespace evdec::nn {

enum class ResetMode { Zero, None };

/// Arctangent surrogate for dS/dU: (alpha/2) / (1 + (pi*alpha*v/2)^2).
double atan_surrogate(double v, double alpha);

/// Smooth spike function whose derivative is atan_surrogate:
/// 1/2 + arctan(pi*alpha*v/2)/pi.
double atan_spike(double v, double alpha);

template <typename T>
struct LifLayer {
  Param<T> w, b, beta_raw, threshold;
  ResetMode reset = ResetMode::Zero;

  std::size_t inputs() const noexcept { return w.cols; }
  std::size_t outputs() const noexcept { return w.rows; }
  T beta() const { return sigmoid(beta_raw.value[0]); }
};

/// Advances one layer by one step with binary input `x`: the drive is a
/// selective sum of weight columns, so no multiplications enter the input
/// accumulation. `u` and `s` hold the previous membrane potentials and
/// spikes and are updated in place. Throws DomainError on non-binary input.
template <typename T>
void lif_step(const LifLayer<T>& layer, std::span<const T> x, std::span<T> u, std::span<T> s,
              OpCounter* ops = nullptr);

struct SnnConfig {
  std::size_t input = 96;
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 48;
  double beta_init = 0.95;
  double threshold_init = 1.0;
  double weight_scale = 1.0;  // multiplies the 1/sqrt(fan_in) init bound
  double surrogate_alpha = 2.0;
};

template <typename T>
struct SnnState {
  std::array<std::vector<T>, 3> u;
  std::array<std::vector<T>, 3> s;
};

template <typename T>
class SnnDecoder {
 public:
  struct Cache {
    std::size_t steps = 0;
    // Per layer, steps x width.
    std::array<std::vector<T>, 3> x, u_prev, u;
    std::array<std::vector<T>, 3> mask;  // dropout on layer inputs 2 and 3
  };

  /// Gradient-check hooks. `smooth_spikes` replaces the Heaviside with
  /// atan_spike so finite differences see the surrogate. Reset terms are
  /// constants to the backward pass; `record_reset` captures them and
  /// `replay_reset` substitutes recorded values so a perturbed forward keeps
  /// them fixed too.
  struct ForwardOptions {
    bool smooth_spikes = false;
    std::array<std::vector<T>, 3>* record_reset = nullptr;
    const std::array<std::vector<T>, 3>* replay_reset = nullptr;
    /// Inverted dropout on the spikes passed between layers (training only).
    double dropout = 0.0;
    Rng* rng = nullptr;
  };

  SnnDecoder() = default;
  SnnDecoder(const SnnConfig& config, std::uint64_t seed);

  SnnState<T> initial_state() const;

  /// Training forward over `steps` inputs from `state`; returns steps x 2.
  std::vector<T> forward(std::span<const T> x, std::size_t steps, SnnState<T>& state,
                         Cache* cache, const ForwardOptions& options) const;
  std::vector<T> forward(std::span<const T> x, std::size_t steps, SnnState<T>& state,
                         Cache* cache) const {
    return forward(x, steps, state, cache, ForwardOptions{});
  }

  /// Surrogate-gradient BPTT over the cached sequence.
  void backward(const Cache& cache, std::span<const T> d_out);

  /// One eval step with binary input.
  void infer_step(std::span<const T> x, SnnState<T>& state, T* out, OpCounter* ops = nullptr) const;

  /// Keeps thresholds positive after an optimizer step.
  void clamp_parameters();

  std::vector<Param<T>*> params();
  std::vector<const Param<T>*> params() const;

  const SnnConfig& config() const noexcept { return config_; }

  std::array<LifLayer<T>, 3> layers;
  Param<T> output_scale;

 private:
  SnnConfig config_;
};

}  // namespace evdec::nn
