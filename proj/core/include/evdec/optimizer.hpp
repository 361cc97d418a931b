#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "evdec/tensor.hpp"

namespace evdec::nn {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.05;
};

/// AdamW with decoupled weight decay:
///   p <- p - lr*wd*p;  m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
///   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
template <typename T>
class AdamW {
 public:
  AdamW(std::vector<Param<T>*> params, const AdamWConfig& config)
      : params_(std::move(params)), config_(config) {
    for (auto* p : params_) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double g = static_cast<double>(p.grad[k]);
        double w = static_cast<double>(p.value[k]);
        w -= lr * config_.weight_decay * w;
        m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g;
        v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g * g;
        w -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.epsilon);
        p.value[k] = static_cast<T>(w);
      }
    }
  }

  std::int64_t steps() const noexcept { return t_; }

 private:
  std::vector<Param<T>*> params_;
  AdamWConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
};

/// Learning rate for `epoch` (0-based) of `epochs`, annealed from lr0 toward 0.
inline double cosine_lr(double lr0, int epoch, int epochs) {
  if (epochs <= 0) return lr0;
  return 0.5 * lr0 * (1.0 + std::cos(std::numbers::pi * epoch / epochs));
}

}  // namespace evdec::nn
