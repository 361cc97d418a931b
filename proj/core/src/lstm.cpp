#include "evdec/lstm.hpp"

#include <cmath>
#include <string>

#include "evdec/error.hpp"

namespace evdec::nn {

template <typename T>
LstmDecoder<T>::LstmDecoder(const LstmConfig& config, std::uint64_t seed)
    : w_ih("lstm.weight_ih", 4 * config.hidden, config.input),
      w_hh("lstm.weight_hh", 4 * config.hidden, config.hidden),
      bias("lstm.bias", 4 * config.hidden, 1),
      head_w("head.weight", 2, config.hidden),
      head_b("head.bias", 2, 1),
      config_(config) {
  if (config.input == 0 || config.hidden == 0) throw ConfigError("LSTM sizes must be positive");
  Rng rng(derive_seed(seed, 0x4c53544d));
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.hidden));
  uniform_init(w_ih, bound, rng);
  uniform_init(w_hh, bound, rng);
  uniform_init(bias, bound, rng);
  uniform_init(head_w, bound, rng);
  uniform_init(head_b, bound, rng);
}

template <typename T>
LstmState<T> LstmDecoder<T>::initial_state() const {
  return {std::vector<T>(config_.hidden, T(0)), std::vector<T>(config_.hidden, T(0))};
}

namespace {

// Computes the four gate activations for one step into g (4H).
template <typename T>
void lstm_cell(const LstmDecoder<T>& m, const T* x, const T* h_prev, const T* c_prev, T* g,
               T* c, T* h, OpCounter* ops) {
  const std::size_t H = m.config().hidden;
  std::vector<T> a(4 * H), r(4 * H);
  dense_apply(m.w_ih, &m.bias, x, a.data(), nullptr);
  dense_apply(m.w_hh, static_cast<const Param<T>*>(nullptr), h_prev, r.data(), nullptr);
  if (ops) {
    ops->macs += 4 * H * (m.config().input + H);
    ops->acs += 4 * H;
    ops->inputs += m.config().input + H;
  }
  for (std::size_t k = 0; k < 4 * H; ++k) {
    const T z = a[k] + r[k];
    const std::size_t gate = k / H;
    g[k] = gate == 2 ? std::tanh(z) : sigmoid(z);
  }
  for (std::size_t j = 0; j < H; ++j) {
    const T i = g[j], f = g[H + j], gg = g[2 * H + j], o = g[3 * H + j];
    c[j] = f * c_prev[j] + i * gg;
    h[j] = o * std::tanh(c[j]);
  }
}

}  // namespace

template <typename T>
std::vector<T> LstmDecoder<T>::forward(std::span<const T> x, std::size_t steps,
                                       LstmState<T>& state, Cache* cache) const {
  const std::size_t I = config_.input, H = config_.hidden;
  if (x.size() != steps * I) {
    throw DomainError("LSTM input has " + std::to_string(x.size()) + " values, expected " +
                      std::to_string(steps) + " x " + std::to_string(I));
  }
  if (state.h.size() != H || state.c.size() != H) throw DomainError("LSTM state has the wrong size");
  Cache local;
  Cache& cc = cache ? *cache : local;
  cc.steps = steps;
  cc.x.assign(x.begin(), x.end());
  cc.h0 = state.h;
  cc.c0 = state.c;
  cc.gates.assign(steps * 4 * H, T(0));
  cc.c.assign(steps * H, T(0));
  cc.h.assign(steps * H, T(0));
  std::vector<T> out(steps * 2);
  for (std::size_t t = 0; t < steps; ++t) {
    const T* hp = t == 0 ? cc.h0.data() : cc.h.data() + (t - 1) * H;
    const T* cp = t == 0 ? cc.c0.data() : cc.c.data() + (t - 1) * H;
    lstm_cell(*this, x.data() + t * I, hp, cp, cc.gates.data() + t * 4 * H, cc.c.data() + t * H,
              cc.h.data() + t * H, nullptr);
    dense_apply(head_w, &head_b, cc.h.data() + t * H, out.data() + t * 2, nullptr);
  }
  if (steps > 0) {
    state.h.assign(cc.h.end() - static_cast<std::ptrdiff_t>(H), cc.h.end());
    state.c.assign(cc.c.end() - static_cast<std::ptrdiff_t>(H), cc.c.end());
  }
  return out;
}

template <typename T>
void LstmDecoder<T>::backward(const Cache& cc, std::span<const T> d_out) {
  const std::size_t I = config_.input, H = config_.hidden;
  if (cc.h0.size() != H) throw StateError("LSTM backward called without a forward cache");
  if (d_out.size() != cc.steps * 2) throw DomainError("LSTM output gradient has the wrong size");
  std::vector<T> dh_next(H, T(0)), dc_next(H, T(0)), dz(4 * H), dh(H);
  for (std::size_t t = cc.steps; t-- > 0;) {
    const T* h = cc.h.data() + t * H;
    const T* c = cc.c.data() + t * H;
    const T* g = cc.gates.data() + t * 4 * H;
    const T* hp = t == 0 ? cc.h0.data() : cc.h.data() + (t - 1) * H;
    const T* cp = t == 0 ? cc.c0.data() : cc.c.data() + (t - 1) * H;
    const T* x = cc.x.data() + t * I;

    dh = dh_next;
    for (std::size_t o = 0; o < 2; ++o) {
      const T d = d_out[t * 2 + o];
      head_b.grad[o] += d;
      for (std::size_t j = 0; j < H; ++j) {
        head_w.grad[o * H + j] += d * h[j];
        dh[j] += d * head_w.value[o * H + j];
      }
    }
    for (std::size_t j = 0; j < H; ++j) {
      const T i = g[j], f = g[H + j], gg = g[2 * H + j], o = g[3 * H + j];
      const T tc = std::tanh(c[j]);
      const T dc = dc_next[j] + dh[j] * o * (T(1) - tc * tc);
      dz[j] = dc * gg * i * (T(1) - i);
      dz[H + j] = dc * cp[j] * f * (T(1) - f);
      dz[2 * H + j] = dc * i * (T(1) - gg * gg);
      dz[3 * H + j] = dh[j] * tc * o * (T(1) - o);
      dc_next[j] = dc * f;
    }
    std::fill(dh_next.begin(), dh_next.end(), T(0));
    for (std::size_t k = 0; k < 4 * H; ++k) {
      const T d = dz[k];
      bias.grad[k] += d;
      T* gi = w_ih.grad.data() + k * I;
      for (std::size_t q = 0; q < I; ++q) gi[q] += d * x[q];
      T* gh = w_hh.grad.data() + k * H;
      const T* wh = w_hh.value.data() + k * H;
      for (std::size_t q = 0; q < H; ++q) {
        gh[q] += d * hp[q];
        dh_next[q] += d * wh[q];
      }
    }
  }
}

template <typename T>
void LstmDecoder<T>::infer_step(std::span<const T> x, LstmState<T>& state, T* out,
                                OpCounter* ops) const {
  const std::size_t H = config_.hidden;
  if (x.size() != config_.input) {
    throw DomainError("LSTM input has " + std::to_string(x.size()) + " values, expected " +
                      std::to_string(config_.input));
  }
  std::vector<T> g(4 * H), c(H), h(H);
  lstm_cell(*this, x.data(), state.h.data(), state.c.data(), g.data(), c.data(), h.data(), ops);
  state.h = std::move(h);
  state.c = std::move(c);
  dense_apply(head_w, &head_b, state.h.data(), out, nullptr);
  if (ops) {
    ops->macs += 2 * H;
    ops->acs += 2;
    ops->inputs += H;
  }
}

template <typename T>
std::vector<Param<T>*> LstmDecoder<T>::params() {
  return {&w_ih, &w_hh, &bias, &head_w, &head_b};
}

template <typename T>
std::vector<const Param<T>*> LstmDecoder<T>::params() const {
  return {&w_ih, &w_hh, &bias, &head_w, &head_b};
}

template class LstmDecoder<float>;
template class LstmDecoder<double>;

}  // namespace evdec::nn
