#include "evdec/linear.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evdec/error.hpp"

namespace evdec {

void LinearDecoder::infer(std::span<const float> x, float* out, nn::OpCounter* ops) const {
  if (x.size() != input()) {
    throw DomainError("linear decoder expects " + std::to_string(input()) + " inputs, got " +
                      std::to_string(x.size()));
  }
  nn::dense_apply(weight, &bias, x.data(), out, ops);
}

void cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n,
                    std::size_t m) {
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
  const double tiny = std::max(scale, 1.0) * 1e-13;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > tiny)) {
      throw NumericError("normal-equation matrix is singular or not positive definite; "
                         "use a ridge lambda > 0");
    }
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
  }
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[i * m + c];
      for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k * m + c];
      b[i * m + c] = s / a[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = b[i * m + c];
      for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k * m + c];
      b[i * m + c] = s / a[i * n + i];
    }
  }
}

RidgeSolution ridge_solve(const FeatureFrame& frame, std::span<const std::size_t> reaches,
                          double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("ridge lambda must be finite and >= 0");
  }
  const FeatureFrame train = select_reaches(frame, reaches);
  if (train.size() == 0) throw ConfigError("linear fit: training partition is empty");
  const std::size_t n = train.size();
  const std::size_t d = frame.width;

  std::vector<double> mean_x(d, 0.0);
  double mean_y[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = train.row(i);
    for (std::size_t k = 0; k < d; ++k) mean_x[k] += row[k];
    mean_y[0] += train.y[2 * i];
    mean_y[1] += train.y[2 * i + 1];
  }
  for (auto& v : mean_x) v /= static_cast<double>(n);
  mean_y[0] /= static_cast<double>(n);
  mean_y[1] /= static_cast<double>(n);

  std::vector<double> gram(d * d, 0.0), rhs(d * 2, 0.0), xc(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = train.row(i);
    for (std::size_t k = 0; k < d; ++k) xc[k] = row[k] - mean_x[k];
    const double y0 = train.y[2 * i] - mean_y[0];
    const double y1 = train.y[2 * i + 1] - mean_y[1];
    for (std::size_t r = 0; r < d; ++r) {
      const double v = xc[r];
      if (v == 0.0) continue;
      double* g = gram.data() + r * d;
      for (std::size_t c = 0; c <= r; ++c) g[c] += v * xc[c];
      rhs[2 * r] += v * y0;
      rhs[2 * r + 1] += v * y1;
    }
  }
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = r + 1; c < d; ++c) gram[r * d + c] = gram[c * d + r];
    gram[r * d + r] += lambda;
  }
  cholesky_solve(gram, rhs, d, 2);

  RidgeSolution sol;
  sol.input = d;
  sol.weight.resize(2 * d);
  for (std::size_t o = 0; o < 2; ++o) {
    double b = mean_y[o];
    for (std::size_t k = 0; k < d; ++k) {
      sol.weight[o * d + k] = rhs[2 * k + o];
      b -= rhs[2 * k + o] * mean_x[k];
    }
    sol.intercept[o] = b;
  }
  return sol;
}

LinearDecoder linear_fit(const FeatureFrame& frame, std::span<const std::size_t> reaches,
                         double lambda) {
  const RidgeSolution sol = ridge_solve(frame, reaches, lambda);
  LinearDecoder model(sol.input);
  for (std::size_t i = 0; i < sol.weight.size(); ++i) {
    model.weight.value[i] = static_cast<float>(sol.weight[i]);
  }
  for (std::size_t o = 0; o < 2; ++o) model.bias.value[o] = static_cast<float>(sol.intercept[o]);
  return model;
}

}  // namespace evdec
