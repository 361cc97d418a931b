#include "evdec/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "evdec/error.hpp"
#include "evdec/metrics.hpp"
#include "evdec/optimizer.hpp"

namespace evdec {

namespace {

template <typename Fn>
void for_each_field(TrainConfig& c, Fn&& fn) {
  fn("epochs", c.epochs);
  fn("learning_rate", c.learning_rate);
  fn("weight_decay", c.weight_decay);
  fn("dropout", c.dropout);
  fn("batch_size", c.batch_size);
  fn("adam_beta1", c.adam_beta1);
  fn("adam_beta2", c.adam_beta2);
  fn("adam_epsilon", c.adam_epsilon);
  fn("surrogate_alpha", c.surrogate_alpha);
  fn("ridge_lambda", c.ridge_lambda);
  fn("lstm_hidden", c.lstm_hidden);
  fn("snn_beta_init", c.snn_beta_init);
  fn("snn_threshold_init", c.snn_threshold_init);
  fn("snn_weight_scale", c.snn_weight_scale);
}

}  // namespace

std::vector<std::string> TrainConfig::violations() const {
  std::vector<std::string> v;
  if (epochs < 0) v.push_back("train.epochs must be >= 0");
  if (!(learning_rate >= 0.0)) v.push_back("train.learning_rate must be >= 0");
  if (!(weight_decay >= 0.0)) v.push_back("train.weight_decay must be >= 0");
  if (!(dropout < 1.0)) v.push_back("train.dropout must be < 1");
  if (batch_size < 2) v.push_back("train.batch_size must be >= 2 (batch-norm statistics)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) v.push_back("train.adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) v.push_back("train.adam_beta2 must be in [0, 1)");
  if (!(adam_epsilon > 0.0)) v.push_back("train.adam_epsilon must be > 0");
  if (!(surrogate_alpha > 0.0)) v.push_back("train.surrogate_alpha must be > 0");
  if (!(ridge_lambda >= 0.0)) v.push_back("train.ridge_lambda must be >= 0");
  if (lstm_hidden == 0) v.push_back("train.lstm_hidden must be > 0");
  if (!(snn_beta_init > 0.0 && snn_beta_init < 1.0)) {
    v.push_back("train.snn_beta_init must be in (0, 1)");
  }
  if (!(snn_threshold_init > 0.0)) v.push_back("train.snn_threshold_init must be > 0");
  if (!(snn_weight_scale > 0.0)) v.push_back("train.snn_weight_scale must be > 0");
  return v;
}

std::string TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  TrainConfig copy = *this;
  for_each_field(copy, [&](const char* key, auto& value) { j[key] = value; });
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  TrainConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw ConfigError("train config must be a JSON object");
    std::size_t known = 0;
    for_each_field(c, [&](const char* key, auto& value) {
      if (j.contains(key)) {
        ++known;
        value = j.at(key).get<std::decay_t<decltype(value)>>();
      }
    });
    if (known != j.size()) {
      TrainConfig probe;
      for (const auto& [key, _] : j.items()) {
        bool found = false;
        for_each_field(probe, [&](const char* k, auto&) { found = found || key == k; });
        if (!found) throw ConfigError("unknown train config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad train config: ") + e.what());
  }
  return c;
}

double default_dropout(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::NN:
    case DecoderKind::STNN: return 0.5;
    case DecoderKind::SNN: return 0.3;
    default: return 0.0;
  }
}

ModelSpec make_model_spec(DecoderKind kind, std::size_t input_width, const TrainConfig& config) {
  ModelSpec s;
  s.kind = kind;
  s.input = input_width;
  s.lstm_hidden = config.lstm_hidden;
  s.dropout = config.dropout < 0.0 ? default_dropout(kind) : config.dropout;
  s.snn_beta_init = config.snn_beta_init;
  s.snn_threshold_init = config.snn_threshold_init;
  s.snn_weight_scale = config.snn_weight_scale;
  s.surrogate_alpha = config.surrogate_alpha;
  return s;
}

namespace {

double validation_r2(const DecoderModel& model, const FeatureFrame& val) {
  const double r2 = r2_xy(val.y, predict(model, val)).mean;
  return std::isfinite(r2) ? r2 : -std::numeric_limits<double>::infinity();
}

// [begin, end) row ranges of consecutive equal reach ids.
std::vector<std::pair<std::size_t, std::size_t>> reach_ranges(const FeatureFrame& f) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < f.size();) {
    std::size_t j = i + 1;
    while (j < f.size() && f.reach_ids[j] == f.reach_ids[i]) ++j;
    out.emplace_back(i, j);
    i = j;
  }
  return out;
}

// Mean squared error over both outputs; writes dLoss/dOut into `grad`.
double mse(std::span<const float> pred, std::span<const float> target, std::vector<float>& grad) {
  grad.resize(pred.size());
  double loss = 0.0;
  const float scale = 2.0f / static_cast<float>(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const float e = pred[k] - target[k];
    loss += static_cast<double>(e) * e;
    grad[k] = scale * e;
  }
  return loss / static_cast<double>(pred.size());
}

// Split-point list for mini-batches; a trailing batch of one sample joins the
// previous one because batch-norm needs two.
std::vector<std::size_t> batch_bounds(std::size_t n, std::size_t batch) {
  std::vector<std::size_t> b;
  for (std::size_t i = 0; i < n; i += batch) b.push_back(i);
  b.push_back(n);
  if (b.size() > 2 && n - b[b.size() - 2] == 1) b.erase(b.end() - 2);
  return b;
}

struct Trainer {
  const TrainConfig& cfg;
  const FeatureFrame& train;
  const FeatureFrame& val;
  Rng rng;
  TrainResult result;

  nn::AdamWConfig adam() const {
    return {cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon, cfg.weight_decay};
  }

  void record(DecoderModel& model, int epoch, double lr, double loss) {
    const double r2 = validation_r2(model, val);
    result.log.push_back({epoch, lr, loss, r2});
    if (result.best_epoch < 0 || r2 > result.best_val_r2) {
      result.best_epoch = epoch;
      result.best_val_r2 = r2;
      result.model = model;
    }
  }

  void run_mlp(DecoderModel& model) {
    auto& net = std::get<nn::MlpDecoder<float>>(model.net());
    nn::AdamW<float> opt(net.params(), adam());
    typename nn::MlpDecoder<float>::Cache cache;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t w = train.width;
    std::vector<float> x, y, grad;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const double lr = nn::cosine_lr(cfg.learning_rate, epoch, cfg.epochs);
      std::shuffle(order.begin(), order.end(), rng);
      const auto bounds = batch_bounds(order.size(), cfg.batch_size);
      double loss_sum = 0.0;
      for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
        const std::size_t n = bounds[b + 1] - bounds[b];
        if (n < 2) continue;
        x.resize(n * w);
        y.resize(n * 2);
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t r = order[bounds[b] + i];
          std::copy_n(train.x.begin() + static_cast<std::ptrdiff_t>(r * w), w, x.begin() + static_cast<std::ptrdiff_t>(i * w));
          y[2 * i] = train.y[2 * r];
          y[2 * i + 1] = train.y[2 * r + 1];
        }
        opt.zero_grad();
        const auto out = net.forward(x, n, true, &cache, &rng);
        loss_sum += mse(out, y, grad) * static_cast<double>(n);
        net.backward(cache, grad);
        opt.step(lr);
      }
      record(model, epoch, lr, loss_sum / static_cast<double>(train.size()));
    }
  }

  template <typename Net>
  void run_sequential(DecoderModel& model) {
    auto& net = std::get<Net>(model.net());
    nn::AdamW<float> opt(net.params(), adam());
    typename Net::Cache cache;
    const auto ranges = reach_ranges(train);
    const std::size_t w = train.width;
    std::vector<float> grad;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const double lr = nn::cosine_lr(cfg.learning_rate, epoch, cfg.epochs);
      double loss_sum = 0.0;
      for (const auto& [begin, end] : ranges) {
        const std::size_t steps = end - begin;
        const std::span<const float> x(train.x.data() + begin * w, steps * w);
        const std::span<const float> y(train.y.data() + begin * 2, steps * 2);
        auto state = net.initial_state();
        opt.zero_grad();
        std::vector<float> out;
        if constexpr (std::is_same_v<Net, nn::SnnDecoder<float>>) {
          typename Net::ForwardOptions fo;
          fo.dropout = model.spec().dropout;
          fo.rng = &rng;
          out = net.forward(x, steps, state, &cache, fo);
        } else {
          out = net.forward(x, steps, state, &cache);
        }
        loss_sum += mse(out, y, grad) * static_cast<double>(steps);
        net.backward(cache, grad);
        opt.step(lr);
        if constexpr (std::is_same_v<Net, nn::SnnDecoder<float>>) net.clamp_parameters();
      }
      record(model, epoch, lr, loss_sum / static_cast<double>(train.size()));
    }
  }
};

}  // namespace

TrainResult train_decoder(DecoderKind kind, const FeatureFrame& frame, const DatasetSplit& split,
                          const TrainConfig& config, std::uint64_t seed) {
  if (const auto v = config.violations(); !v.empty()) {
    std::string msg = "invalid train config:";
    for (const auto& s : v) msg += "\n  " + s;
    throw ConfigError(msg);
  }
  if (split.train.empty() || split.val.empty() || split.test.empty()) {
    throw ConfigError("every split partition (train, val, test) must be non-empty");
  }
  const FeatureFrame train = select_reaches(frame, split.train);
  const FeatureFrame val = select_reaches(frame, split.val);
  if (train.size() == 0 || val.size() == 0) {
    throw ConfigError("train or validation partition has no feature samples");
  }
  const ModelSpec spec = make_model_spec(kind, frame.width, config);

  Trainer t{config, train, val, make_rng(seed, 0x545241494eULL), {}};
  if (kind == DecoderKind::Linear) {
    DecoderModel model(spec, linear_fit(frame, split.train, config.ridge_lambda));
    t.record(model, 0, 0.0, 0.0);
    const auto pred = predict(model, train);
    std::vector<float> g;
    t.result.log.back().train_loss = mse(pred, train.y, g);
  } else {
    DecoderModel model(spec, seed);
    check_compatible(model, frame);
    if (config.epochs == 0) {
      t.result.model = model;
    } else if (kind == DecoderKind::LSTM) {
      t.run_sequential<nn::LstmDecoder<float>>(model);
    } else if (kind == DecoderKind::SNN) {
      t.run_sequential<nn::SnnDecoder<float>>(model);
    } else {
      t.run_mlp(model);
    }
  }
  t.result.model.training_json = config.to_json();
  return std::move(t.result);
}

}  // namespace evdec
