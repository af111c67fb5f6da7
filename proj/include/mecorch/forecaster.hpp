#pragma once

// Availability forecasting: LSTM training by per-window gradient descent,
// iterated multi-step prediction, and the moving-average baseline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mecorch/error.hpp"
#include "mecorch/lstm.hpp"
#include "mecorch/metrics.hpp"

namespace mecorch {

/// Predicted utilization per horizon step plus the availability scalar
/// 1 - mean(predicted_utilization).
struct Forecast {
  HostId host;
  double issued_at = 0.0;
  std::vector<double> predicted_utilization;
  double availability = 0.0;

  std::size_t horizon_steps() const noexcept { return predicted_utilization.size(); }
};

inline Forecast make_forecast(HostId host, double issued_at, std::vector<double> predicted) {
  for (auto& p : predicted) p = std::clamp(p, 0.0, 1.0);
  const double mean =
      std::accumulate(predicted.begin(), predicted.end(), 0.0) / static_cast<double>(predicted.size());
  return {std::move(host), issued_at, std::move(predicted), 1.0 - mean};
}

struct TrainingConfig {
  std::size_t window = 30;
  std::size_t horizon = 10;
  std::size_t hidden_dim = 16;
  /// 1 = CPU only; 3 = CPU, memory, storage.
  std::size_t input_dim = 1;
  std::size_t epochs = 200;
  double learning_rate = 0.05;
  double clip_norm = 5.0;
  double split = 0.8;
  std::uint64_t seed = 1;

  void validate() const {
    if (window == 0) throw ParameterError("window must be positive");
    if (horizon == 0) throw ParameterError("horizon must be positive");
    if (hidden_dim == 0) throw ParameterError("hidden_dim must be positive");
    if (input_dim != 1 && input_dim != 3) throw ParameterError("input_dim must be 1 or 3");
    if (epochs < 1) throw ParameterError("epochs must be >= 1");
    if (!(std::isfinite(learning_rate) && learning_rate > 0.0)) throw ParameterError("learning_rate must be > 0");
    if (!(std::isfinite(clip_norm) && clip_norm > 0.0)) throw ParameterError("clip_norm must be > 0");
    if (!(split > 0.0 && split < 1.0)) throw ParameterError("split must lie in (0,1)");
  }
};

inline nlohmann::json to_json(const TrainingConfig& c) {
  return {{"window", c.window},         {"horizon", c.horizon}, {"hidden_dim", c.hidden_dim},
          {"input_dim", c.input_dim},   {"epochs", c.epochs},   {"learning_rate", c.learning_rate},
          {"clip_norm", c.clip_norm},   {"split", c.split},     {"seed", c.seed}};
}

inline TrainingConfig training_config_from_json(const nlohmann::json& j) {
  TrainingConfig c;
  try {
    c.window = j.value("window", c.window);
    c.horizon = j.value("horizon", c.horizon);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.input_dim = j.value("input_dim", c.input_dim);
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.split = j.value("split", c.split);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed training config: ") + e.what());
  }
  c.validate();
  return c;
}

/// Model input features for one sample.
inline void append_features(std::vector<double>& out, const HostMetricsSample& s, std::size_t input_dim) {
  out.push_back(s.cpu);
  if (input_dim == 3) {
    out.push_back(s.mem);
    out.push_back(s.storage);
  }
}

/// One supervised example: `length` consecutive samples, next-step CPU target.
struct TrainingExample {
  std::vector<double> sequence;
  double target = 0.0;
};

struct TrainingData {
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> validation;
};

/// Slides a window over each host's series; per host, the earliest `split`
/// fraction of windows train and the rest validate.
inline TrainingData make_training_data(const MetricsStore& store, std::span<const HostId> hosts,
                                       const TrainingConfig& cfg) {
  cfg.validate();
  if (hosts.empty()) throw ParameterError("no hosts to train on");
  TrainingData data;
  for (const auto& host : hosts) {
    auto s = store.samples(host);
    if (s.size() < cfg.window + cfg.horizon) throw NotEnoughData(s.size(), cfg.window + cfg.horizon, host.str());
    const std::size_t count = s.size() - cfg.window;
    if (count < 2) throw NotEnoughData(s.size(), cfg.window + 2, host.str());
    auto n_train = static_cast<std::size_t>(std::floor(cfg.split * static_cast<double>(count)));
    n_train = std::clamp<std::size_t>(n_train, 1, count - 1);
    for (std::size_t start = 0; start < count; ++start) {
      TrainingExample ex;
      ex.sequence.reserve(cfg.window * cfg.input_dim);
      for (std::size_t k = 0; k < cfg.window; ++k) append_features(ex.sequence, s[start + k], cfg.input_dim);
      ex.target = s[start + cfg.window].cpu;
      (start < n_train ? data.train : data.validation).push_back(std::move(ex));
    }
  }
  return data;
}

inline double mean_squared_error(const LstmModel& m, std::span<const TrainingExample> examples) {
  if (examples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& ex : examples) {
    const double e = lstm_predict<double>(m, ex.sequence) - ex.target;
    sum += e * e;
  }
  return sum / static_cast<double>(examples.size());
}

struct TrainingResult {
  LstmModel model;
  double initial_loss = 0.0;
  /// Training-set MSE after each epoch; exactly cfg.epochs entries.
  std::vector<double> loss_trace;
  /// Training-set MSE of the returned model.
  double final_loss = 0.0;
  double validation_mse = 0.0;
  std::size_t best_epoch = 0;  // 0 = the initial parameters
};

/// Per-window gradient descent with seeded shuffling and gradient-norm
/// clipping. Returns the parameters with the lowest training loss seen,
/// including the initial ones, so final_loss <= initial_loss always holds.
inline TrainingResult train(LstmModel model, const MetricsStore& store, std::span<const HostId> hosts,
                            const TrainingConfig& cfg) {
  cfg.validate();
  model.check_shapes();
  if (model.input_dim != cfg.input_dim) throw DimensionError("model input_dim differs from training config");
  model.window = cfg.window;
  const auto data = make_training_data(store, hosts, cfg);

  TrainingResult result;
  result.initial_loss = mean_squared_error(model, data.train);
  if (!std::isfinite(result.initial_loss)) throw TrainingDiverged("initial loss is not finite");
  result.model = model;
  result.final_loss = result.initial_loss;

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double*> params;
  model.for_each_parameter([&](double& v) { params.push_back(&v); });
  std::vector<double> grad;
  grad.reserve(params.size());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      const auto& ex = data.train[idx];
      auto lg = squared_error_gradient(model, ex.sequence, ex.target);
      grad.clear();
      lg.gradient.for_each_parameter([&](const double& g) { grad.push_back(g); });
      double norm2 = 0.0;
      for (double g : grad) norm2 += g * g;
      const double norm = std::sqrt(norm2);
      const double scale = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
      for (std::size_t k = 0; k < params.size(); ++k) *params[k] -= cfg.learning_rate * scale * grad[k];
    }
    const double loss = mean_squared_error(model, data.train);
    if (!std::isfinite(loss)) throw TrainingDiverged("training loss became non-finite at epoch " + std::to_string(epoch));
    result.loss_trace.push_back(loss);
    if (loss < result.final_loss) {
      result.final_loss = loss;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  result.validation_mse = mean_squared_error(result.model, data.validation);
  return result;
}

/// Iterated one-step forecast: each prediction is appended to the window
/// (oldest sample dropped) and fed back, `horizon` times. For 3-input models
/// memory and storage carry their last observed values forward.
inline Forecast predict_availability(const LstmModel& model, const MetricsWindow& window, std::size_t horizon) {
  if (horizon == 0) throw ParameterError("horizon must be positive");
  if (window.samples.empty()) throw InputError("empty window");
  if (model.window != 0 && window.size() != model.window)
    throw DimensionError("window length " + std::to_string(window.size()) + " differs from model window " +
                         std::to_string(model.window));
  const std::size_t D = model.input_dim;
  if (D != 1 && D != 3) throw DimensionError("unsupported input_dim " + std::to_string(D));

  std::vector<double> seq;
  seq.reserve(window.size() * D);
  for (const auto& s : window.samples) append_features(seq, s, D);
  std::vector<double> next(seq.end() - static_cast<std::ptrdiff_t>(D), seq.end());

  std::vector<double> predicted;
  predicted.reserve(horizon);
  for (std::size_t step = 0; step < horizon; ++step) {
    const double y = lstm_predict<double>(model, seq);
    predicted.push_back(y);
    if (step + 1 == horizon) break;
    next[0] = y;
    seq.erase(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(D));
    seq.insert(seq.end(), next.begin(), next.end());
  }
  return make_forecast(window.host, window.samples.back().timestamp, std::move(predicted));
}

/// H copies of the window's mean CPU utilization.
inline Forecast baseline_predict(const MetricsWindow& window, std::size_t horizon) {
  if (horizon == 0) throw ParameterError("horizon must be positive");
  if (window.samples.empty()) throw InputError("empty window");
  double sum = 0.0;
  for (const auto& s : window.samples) sum += s.cpu;
  const double mean = sum / static_cast<double>(window.size());
  return make_forecast(window.host, window.samples.back().timestamp, std::vector<double>(horizon, mean));
}

}  // namespace mecorch
