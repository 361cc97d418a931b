#include "evdec/snn.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "evdec/error.hpp"

namespace evdec::nn {

namespace {
constexpr double kMinThreshold = 1e-3;
}

double atan_surrogate(double v, double alpha) {
  const double z = std::numbers::pi * alpha * v / 2.0;
  return (alpha / 2.0) / (1.0 + z * z);
}

double atan_spike(double v, double alpha) {
  return 0.5 + std::atan(std::numbers::pi * alpha * v / 2.0) / std::numbers::pi;
}

template <typename T>
void lif_step(const LifLayer<T>& layer, std::span<const T> x, std::span<T> u, std::span<T> s,
              OpCounter* ops) {
  const std::size_t in = layer.inputs(), out = layer.outputs();
  if (x.size() != in || u.size() != out || s.size() != out) {
    throw DomainError("LIF layer expects " + std::to_string(in) + " inputs and " +
                      std::to_string(out) + " neurons");
  }
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < in; ++j) {
    if (x[j] == T(1)) {
      active.push_back(j);
    } else if (x[j] != T(0)) {
      throw DomainError("spiking layer input " + std::to_string(j) + " is not binary");
    }
  }
  const T beta = layer.beta();
  const T thr = layer.threshold.value[0];
  for (std::size_t r = 0; r < out; ++r) {
    const T* row = layer.w.value.data() + r * in;
    T drive = layer.b.value[r];
    for (const std::size_t j : active) drive += row[j];
    const T integrated = beta * u[r] + drive;
    const T reset = layer.reset == ResetMode::Zero ? s[r] * integrated : T(0);
    u[r] = integrated - reset;
    s[r] = u[r] > thr ? T(1) : T(0);
  }
  if (ops) {
    ops->acs += active.size() * out + out;
    ops->inputs += in;
    ops->zero_inputs += in - active.size();
  }
}

template <typename T>
SnnDecoder<T>::SnnDecoder(const SnnConfig& config, std::uint64_t seed) : config_(config) {
  if (config.input == 0) throw ConfigError("SNN input width must be positive");
  if (!(config.beta_init > 0.0 && config.beta_init < 1.0)) {
    throw ConfigError("SNN beta_init must lie in (0, 1)");
  }
  const std::array<std::size_t, 4> dims{config.input, config.hidden1, config.hidden2, 2};
  const std::array<ResetMode, 3> resets{ResetMode::Zero, ResetMode::Zero, ResetMode::None};
  Rng rng(derive_seed(seed, 0x534e4e));
  const T beta_raw = static_cast<T>(std::log(config.beta_init / (1.0 - config.beta_init)));
  for (std::size_t l = 0; l < 3; ++l) {
    const std::string p = "lif" + std::to_string(l + 1) + ".";
    LifLayer<T>& L = layers[l];
    L.w = Param<T>(p + "weight", dims[l + 1], dims[l]);
    L.b = Param<T>(p + "bias", dims[l + 1], 1);
    L.beta_raw = Param<T>(p + "beta", 1, 1, beta_raw);
    L.threshold = Param<T>(p + "threshold", 1, 1, static_cast<T>(config.threshold_init));
    L.reset = resets[l];
    const double bound = config.weight_scale / std::sqrt(static_cast<double>(dims[l]));
    uniform_init(L.w, bound, rng);
    uniform_init(L.b, bound, rng);
  }
  output_scale = Param<T>("output.scale", 2, 1, T(1));
}

template <typename T>
SnnState<T> SnnDecoder<T>::initial_state() const {
  SnnState<T> st;
  for (std::size_t l = 0; l < 3; ++l) {
    st.u[l].assign(layers[l].outputs(), T(0));
    st.s[l].assign(layers[l].outputs(), T(0));
  }
  return st;
}

template <typename T>
std::vector<T> SnnDecoder<T>::forward(std::span<const T> x, std::size_t steps, SnnState<T>& st,
                                      Cache* cache, const ForwardOptions& opt) const {
  if (x.size() != steps * config_.input) {
    throw DomainError("SNN input has " + std::to_string(x.size()) + " values, expected " +
                      std::to_string(steps) + " x " + std::to_string(config_.input));
  }
  Cache local;
  Cache& c = cache ? *cache : local;
  c.steps = steps;
  const bool drop = opt.rng != nullptr && opt.dropout > 0.0;
  std::bernoulli_distribution keep(drop ? 1.0 - opt.dropout : 1.0);
  const T keep_scale = drop ? static_cast<T>(1.0 / (1.0 - opt.dropout)) : T(1);
  for (std::size_t l = 0; l < 3; ++l) {
    c.x[l].assign(steps * layers[l].inputs(), T(0));
    c.u_prev[l].assign(steps * layers[l].outputs(), T(0));
    c.u[l].assign(steps * layers[l].outputs(), T(0));
    c.mask[l].clear();
    if (l > 0 && drop) c.mask[l].assign(steps * layers[l].inputs(), T(0));
    if (opt.record_reset) (*opt.record_reset)[l].assign(steps * layers[l].outputs(), T(0));
  }
  const T alpha = static_cast<T>(config_.surrogate_alpha);
  std::vector<T> out(steps * 2);
  std::vector<T> drive;
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy_n(x.data() + t * config_.input, config_.input, c.x[0].data() + t * config_.input);
    for (std::size_t l = 0; l < 3; ++l) {
      const LifLayer<T>& L = layers[l];
      const std::size_t n = L.outputs();
      const T* xin = c.x[l].data() + t * L.inputs();
      drive.resize(n);
      dense_apply(L.w, &L.b, xin, drive.data(), nullptr);
      const T beta = L.beta();
      const T thr = L.threshold.value[0];
      for (std::size_t r = 0; r < n; ++r) {
        c.u_prev[l][t * n + r] = st.u[l][r];
        const T integrated = beta * st.u[l][r] + drive[r];
        T reset = L.reset == ResetMode::Zero ? st.s[l][r] * integrated : T(0);
        if (opt.replay_reset) reset = (*opt.replay_reset)[l][t * n + r];
        if (opt.record_reset) (*opt.record_reset)[l][t * n + r] = reset;
        const T u = integrated - reset;
        st.u[l][r] = u;
        c.u[l][t * n + r] = u;
        st.s[l][r] = opt.smooth_spikes ? static_cast<T>(atan_spike(u - thr, alpha))
                                       : (u > thr ? T(1) : T(0));
      }
      if (l < 2) {
        T* next = c.x[l + 1].data() + t * n;
        std::copy(st.s[l].begin(), st.s[l].end(), next);
        if (drop) {
          T* m = c.mask[l + 1].data() + t * n;
          for (std::size_t r = 0; r < n; ++r) {
            m[r] = keep(*opt.rng) ? keep_scale : T(0);
            next[r] *= m[r];
          }
        }
      }
    }
    out[2 * t] = output_scale.value[0] * st.u[2][0];
    out[2 * t + 1] = output_scale.value[1] * st.u[2][1];
  }
  return out;
}

template <typename T>
void SnnDecoder<T>::backward(const Cache& c, std::span<const T> d_out) {
  if (c.steps == 0 || c.u[0].size() != c.steps * layers[0].outputs()) {
    throw StateError("SNN backward called without a forward cache");
  }
  if (d_out.size() != c.steps * 2) throw DomainError("SNN output gradient has the wrong size");
  const double alpha = config_.surrogate_alpha;
  std::array<std::vector<T>, 3> carry, du;
  std::array<T, 3> d_beta{}, d_thr{};
  for (std::size_t l = 0; l < 3; ++l) {
    carry[l].assign(layers[l].outputs(), T(0));
    du[l].assign(layers[l].outputs(), T(0));
  }
  std::vector<T> d_spike;  // dLoss/dS of the layer below
  for (std::size_t t = c.steps; t-- > 0;) {
    for (std::size_t l = 3; l-- > 0;) {
      LifLayer<T>& L = layers[l];
      const std::size_t n = L.outputs(), in = L.inputs();
      const T beta = L.beta();
      const T thr = L.threshold.value[0];
      for (std::size_t r = 0; r < n; ++r) {
        T g = beta * carry[l][r];
        if (l == 2) {
          const T dy = d_out[2 * t + r];
          output_scale.grad[r] += dy * c.u[2][t * n + r];
          g += dy * output_scale.value[r];
        } else {
          const T ds = d_spike[r];
          const T sg = static_cast<T>(atan_surrogate(static_cast<double>(c.u[l][t * n + r] - thr), alpha));
          g += ds * sg;
          d_thr[l] -= ds * sg;
        }
        du[l][r] = g;
        d_beta[l] += g * c.u_prev[l][t * n + r];
      }
      const T* xin = c.x[l].data() + t * in;
      std::vector<T> d_in(l > 0 ? in : 0, T(0));
      for (std::size_t r = 0; r < n; ++r) {
        const T g = du[l][r];
        L.b.grad[r] += g;
        if (g == T(0)) continue;
        T* gw = L.w.grad.data() + r * in;
        for (std::size_t j = 0; j < in; ++j) gw[j] += g * xin[j];
        if (l > 0) {
          const T* wr = L.w.value.data() + r * in;
          for (std::size_t j = 0; j < in; ++j) d_in[j] += g * wr[j];
        }
      }
      if (l > 0 && !c.mask[l].empty()) {
        const T* m = c.mask[l].data() + t * in;
        for (std::size_t j = 0; j < in; ++j) d_in[j] *= m[j];
      }
      carry[l] = du[l];
      d_spike = std::move(d_in);
    }
  }
  for (std::size_t l = 0; l < 3; ++l) {
    const T beta = layers[l].beta();
    layers[l].beta_raw.grad[0] += d_beta[l] * beta * (T(1) - beta);
    layers[l].threshold.grad[0] += d_thr[l];
  }
}

template <typename T>
void SnnDecoder<T>::infer_step(std::span<const T> x, SnnState<T>& st, T* out, OpCounter* ops) const {
  if (x.size() != config_.input) {
    throw DomainError("SNN input has " + std::to_string(x.size()) + " values, expected " +
                      std::to_string(config_.input));
  }
  lif_step(layers[0], x, std::span<T>(st.u[0]), std::span<T>(st.s[0]), ops);
  lif_step(layers[1], std::span<const T>(st.s[0]), std::span<T>(st.u[1]), std::span<T>(st.s[1]), ops);
  lif_step(layers[2], std::span<const T>(st.s[1]), std::span<T>(st.u[2]), std::span<T>(st.s[2]), ops);
  out[0] = output_scale.value[0] * st.u[2][0];
  out[1] = output_scale.value[1] * st.u[2][1];
}

template <typename T>
void SnnDecoder<T>::clamp_parameters() {
  for (auto& L : layers) {
    if (L.threshold.value[0] < T(kMinThreshold)) L.threshold.value[0] = T(kMinThreshold);
  }
}

template <typename T>
std::vector<Param<T>*> SnnDecoder<T>::params() {
  std::vector<Param<T>*> p;
  for (auto& L : layers) {
    p.push_back(&L.w);
    p.push_back(&L.b);
    p.push_back(&L.beta_raw);
    p.push_back(&L.threshold);
  }
  p.push_back(&output_scale);
  return p;
}

template <typename T>
std::vector<const Param<T>*> SnnDecoder<T>::params() const {
  std::vector<const Param<T>*> p;
  for (const auto& L : layers) {
    p.push_back(&L.w);
    p.push_back(&L.b);
    p.push_back(&L.beta_raw);
    p.push_back(&L.threshold);
  }
  p.push_back(&output_scale);
  return p;
}

template void lif_step<float>(const LifLayer<float>&, std::span<const float>, std::span<float>,
                              std::span<float>, OpCounter*);
template void lif_step<double>(const LifLayer<double>&, std::span<const double>, std::span<double>,
                               std::span<double>, OpCounter*);
template class SnnDecoder<float>;
template class SnnDecoder<double>;

}  // namespace evdec::nn
