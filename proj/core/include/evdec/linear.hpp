#pragma once

// Ridge-regression baseline: (V_x, V_y) = W x + intercept, fitted in closed
// form on centered features so the intercept is not penalized.

#include <cstddef>
#include <span>
#include <vector>

#include "evdec/features.hpp"
#include "evdec/tensor.hpp"

namespace evdec {

inline constexpr double kDefaultRidgeLambda = 1e-3;

struct LinearDecoder {
  nn::Param<float> weight;  // 2 x input
  nn::Param<float> bias;    // 2

  LinearDecoder() = default;
  explicit LinearDecoder(std::size_t input)
      : weight("linear.weight", 2, input), bias("linear.bias", 2, 1) {}

  std::size_t input() const noexcept { return weight.cols; }
  void infer(std::span<const float> x, float* out, nn::OpCounter* ops = nullptr) const;

  std::vector<nn::Param<float>*> params() { return {&weight, &bias}; }
  std::vector<const nn::Param<float>*> params() const { return {&weight, &bias}; }
};

/// Double-precision ridge coefficients; weight is 2 x input, row-major.
struct RidgeSolution {
  std::size_t input = 0;
  std::vector<double> weight;
  double intercept[2] = {0.0, 0.0};
};

/// Solves (Xc^T Xc + lambda I) W = Xc^T Yc over the rows of `reaches`, with
/// Xc, Yc centered by their means; the intercept restores the means. The
/// system is solved in double precision by Cholesky factorization. Throws
/// ConfigError for an empty partition and NumericError when the system is
/// not positive definite.
RidgeSolution ridge_solve(const FeatureFrame& frame, std::span<const std::size_t> reaches,
                          double lambda = kDefaultRidgeLambda);

/// ridge_solve rounded into a float model.
LinearDecoder linear_fit(const FeatureFrame& frame, std::span<const std::size_t> reaches,
                         double lambda = kDefaultRidgeLambda);

/// Cholesky solve of the symmetric system A X = B in place (A is n x n, B is
/// n x m, both row-major). Throws NumericError if A is not positive definite.
void cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n,
                    std::size_t m);

}  // namespace evdec
