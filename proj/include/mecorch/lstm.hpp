#pragma once

// Single-layer LSTM with a sigmoid-squashed scalar read-out, its
// backpropagation-through-time gradient, and a finite-difference checker.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mecorch/error.hpp"

namespace mecorch {

enum class GateKind : std::size_t { Input = 0, Forget = 1, Output = 2, Candidate = 3 };
inline constexpr std::array<const char*, 4> kGateNames{"input", "forget", "output", "candidate"};

/// Affine map of one gate: z = w_input * x + w_recurrent * h + bias.
/// Matrices are row-major with `hidden` rows.
template <class T>
struct GateParams {
  std::vector<T> w_input;      // hidden x input
  std::vector<T> w_recurrent;  // hidden x hidden
  std::vector<T> bias;         // hidden
};

template <class T>
struct BasicLstm {
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 1;
  /// Sequence length the model was trained on; 0 accepts any length.
  std::size_t window = 0;
  std::array<GateParams<T>, 4> gates;
  std::vector<T> out_weight;  // hidden
  T out_bias{};

  GateParams<T>& gate(GateKind k) { return gates[static_cast<std::size_t>(k)]; }
  const GateParams<T>& gate(GateKind k) const { return gates[static_cast<std::size_t>(k)]; }

  static BasicLstm zeros(std::size_t input_dim, std::size_t hidden_dim) {
    if (input_dim == 0 || hidden_dim == 0) throw DimensionError("LSTM dimensions must be positive");
    BasicLstm m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    for (auto& g : m.gates) {
      g.w_input.assign(hidden_dim * input_dim, T{});
      g.w_recurrent.assign(hidden_dim * hidden_dim, T{});
      g.bias.assign(hidden_dim, T{});
    }
    m.out_weight.assign(hidden_dim, T{});
    return m;
  }

  /// Visits every parameter in serialization order: per gate (input, forget,
  /// output, candidate) w_input, w_recurrent, bias; then output weight, bias.
  template <class F>
  void for_each_parameter(F&& f) {
    for (auto& g : gates) {
      for (auto& v : g.w_input) f(v);
      for (auto& v : g.w_recurrent) f(v);
      for (auto& v : g.bias) f(v);
    }
    for (auto& v : out_weight) f(v);
    f(out_bias);
  }
  template <class F>
  void for_each_parameter(F&& f) const {
    const_cast<BasicLstm&>(*this).for_each_parameter([&](T& v) { f(static_cast<const T&>(v)); });
  }

  std::size_t parameter_count() const { return 4 * hidden_dim * (input_dim + hidden_dim + 1) + hidden_dim + 1; }

  /// Throws DimensionError when any array disagrees with the declared dims.
  void check_shapes() const {
    auto expect = [](std::size_t got, std::size_t want, const std::string& what) {
      if (got != want)
        throw DimensionError(what + " has " + std::to_string(got) + " entries, expected " + std::to_string(want));
    };
    if (input_dim == 0 || hidden_dim == 0) throw DimensionError("LSTM dimensions must be positive");
    for (std::size_t k = 0; k < 4; ++k) {
      const std::string name = kGateNames[k];
      expect(gates[k].w_input.size(), hidden_dim * input_dim, name + ".w_input");
      expect(gates[k].w_recurrent.size(), hidden_dim * hidden_dim, name + ".w_recurrent");
      expect(gates[k].bias.size(), hidden_dim, name + ".bias");
    }
    expect(out_weight.size(), hidden_dim, "output.weight");
  }

  template <class U>
  BasicLstm<U> cast() const {
    BasicLstm<U> out = BasicLstm<U>::zeros(input_dim, hidden_dim);
    out.window = window;
    std::vector<T> flat;
    flat.reserve(parameter_count());
    for_each_parameter([&](const T& v) { flat.push_back(v); });
    std::size_t k = 0;
    out.for_each_parameter([&](U& v) { v = static_cast<U>(flat[k++]); });
    return out;
  }

  friend bool operator==(const BasicLstm& a, const BasicLstm& b) {
    if (a.input_dim != b.input_dim || a.hidden_dim != b.hidden_dim || a.window != b.window) return false;
    std::vector<T> fa, fb;
    a.for_each_parameter([&](const T& v) { fa.push_back(v); });
    b.for_each_parameter([&](const T& v) { fb.push_back(v); });
    return fa == fb;
  }
};

using LstmModel = BasicLstm<double>;

/// Uniform [-0.08, 0.08] weights from a seeded generator; forget bias 1.0.
inline LstmModel init_lstm(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed) {
  auto m = LstmModel::zeros(input_dim, hidden_dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.08, 0.08);
  m.for_each_parameter([&](double& v) { v = u(rng); });
  std::fill(m.gate(GateKind::Forget).bias.begin(), m.gate(GateKind::Forget).bias.end(), 1.0);
  return m;
}

namespace detail {
template <class T>
T sigmoid(T z) {
  using std::exp;
  if (z >= T{0}) return T{1} / (T{1} + exp(-z));
  const T e = exp(z);
  return e / (T{1} + e);
}
}  // namespace detail

/// Everything the backward pass needs. Step t of the sequence uses
/// hidden[t] / cell[t] as previous state and writes hidden[t+1] / cell[t+1].
template <class T>
struct LstmTrace {
  std::size_t steps = 0;
  std::vector<T> hidden;                    // (steps+1) x hidden, hidden[0] = 0
  std::vector<T> cell;                      // (steps+1) x hidden
  std::array<std::vector<T>, 4> gate_act;   // steps x hidden each, post-activation
  T prediction{};

  std::span<const T> hidden_at(std::size_t t, std::size_t hidden_dim) const {
    return std::span<const T>(hidden).subspan(t * hidden_dim, hidden_dim);
  }
};

/// Runs the recurrence over `sequence` (steps x input_dim, row-major) from a
/// zero state and returns the hidden trajectory and the read-out
/// sigmoid(out_weight . h_last + out_bias).
template <class T>
LstmTrace<T> lstm_forward(const BasicLstm<T>& m, std::span<const T> sequence) {
  using std::tanh;
  const std::size_t H = m.hidden_dim;
  const std::size_t D = m.input_dim;
  if (D == 0 || H == 0) throw DimensionError("LSTM dimensions must be positive");
  if (sequence.empty() || sequence.size() % D != 0)
    throw DimensionError("sequence of " + std::to_string(sequence.size()) +
                         " values does not match input_dim " + std::to_string(D));
  const std::size_t steps = sequence.size() / D;

  LstmTrace<T> tr;
  tr.steps = steps;
  tr.hidden.assign((steps + 1) * H, T{});
  tr.cell.assign((steps + 1) * H, T{});
  for (auto& a : tr.gate_act) a.assign(steps * H, T{});

  std::array<T, 4> z{};
  for (std::size_t t = 0; t < steps; ++t) {
    const T* x = sequence.data() + t * D;
    const T* h_prev = tr.hidden.data() + t * H;
    const T* c_prev = tr.cell.data() + t * H;
    T* h = tr.hidden.data() + (t + 1) * H;
    T* c = tr.cell.data() + (t + 1) * H;
    for (std::size_t j = 0; j < H; ++j) {
      for (std::size_t k = 0; k < 4; ++k) {
        const auto& g = m.gates[k];
        T acc = g.bias[j];
        const T* wx = g.w_input.data() + j * D;
        for (std::size_t d = 0; d < D; ++d) acc += wx[d] * x[d];
        const T* wh = g.w_recurrent.data() + j * H;
        for (std::size_t q = 0; q < H; ++q) acc += wh[q] * h_prev[q];
        z[k] = acc;
      }
      const T i = detail::sigmoid(z[0]);
      const T f = detail::sigmoid(z[1]);
      const T o = detail::sigmoid(z[2]);
      const T g = tanh(z[3]);
      tr.gate_act[0][t * H + j] = i;
      tr.gate_act[1][t * H + j] = f;
      tr.gate_act[2][t * H + j] = o;
      tr.gate_act[3][t * H + j] = g;
      c[j] = f * c_prev[j] + i * g;
      h[j] = o * tanh(c[j]);
    }
  }
  T a = m.out_bias;
  const T* h_last = tr.hidden.data() + steps * H;
  for (std::size_t j = 0; j < H; ++j) a += m.out_weight[j] * h_last[j];
  tr.prediction = detail::sigmoid(a);
  return tr;
}

template <class T>
T lstm_predict(const BasicLstm<T>& m, std::span<const T> sequence) {
  return lstm_forward(m, sequence).prediction;
}

/// Gradient of a loss with respect to every parameter, given dLoss/dPrediction.
/// The result has the model's shape.
inline LstmModel lstm_backward(const LstmModel& m, std::span<const double> sequence, const LstmTrace<double>& tr,
                               double dloss_dpred) {
  const std::size_t H = m.hidden_dim;
  const std::size_t D = m.input_dim;
  const std::size_t steps = tr.steps;
  auto grad = LstmModel::zeros(D, H);
  grad.window = m.window;

  const double y = tr.prediction;
  const double da = dloss_dpred * y * (1.0 - y);
  grad.out_bias = da;
  std::vector<double> dh(H), dc_next(H, 0.0), dh_prev(H);
  const double* h_last = tr.hidden.data() + steps * H;
  for (std::size_t j = 0; j < H; ++j) {
    grad.out_weight[j] = da * h_last[j];
    dh[j] = da * m.out_weight[j];
  }

  std::array<std::vector<double>, 4> dz;
  for (auto& v : dz) v.assign(H, 0.0);

  for (std::size_t step = steps; step-- > 0;) {
    const double* x = sequence.data() + step * D;
    const double* h_prev = tr.hidden.data() + step * H;
    const double* c_prev = tr.cell.data() + step * H;
    const double* c = tr.cell.data() + (step + 1) * H;
    for (std::size_t j = 0; j < H; ++j) {
      const double i = tr.gate_act[0][step * H + j];
      const double f = tr.gate_act[1][step * H + j];
      const double o = tr.gate_act[2][step * H + j];
      const double g = tr.gate_act[3][step * H + j];
      const double tc = std::tanh(c[j]);
      const double d_o = dh[j] * tc;
      const double dcell = dc_next[j] + dh[j] * o * (1.0 - tc * tc);
      dz[0][j] = dcell * g * i * (1.0 - i);
      dz[1][j] = dcell * c_prev[j] * f * (1.0 - f);
      dz[2][j] = d_o * o * (1.0 - o);
      dz[3][j] = dcell * i * (1.0 - g * g);
      dc_next[j] = dcell * f;
    }
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    for (std::size_t k = 0; k < 4; ++k) {
      auto& gg = grad.gates[k];
      const auto& gm = m.gates[k];
      for (std::size_t j = 0; j < H; ++j) {
        const double d = dz[k][j];
        gg.bias[j] += d;
        double* gwx = gg.w_input.data() + j * D;
        for (std::size_t q = 0; q < D; ++q) gwx[q] += d * x[q];
        double* gwh = gg.w_recurrent.data() + j * H;
        const double* wh = gm.w_recurrent.data() + j * H;
        for (std::size_t q = 0; q < H; ++q) {
          gwh[q] += d * h_prev[q];
          dh_prev[q] += wh[q] * d;
        }
      }
    }
    dh.swap(dh_prev);
  }
  return grad;
}

/// Squared error (prediction - target)^2 and its gradient for one window.
struct LossAndGradient {
  double loss = 0.0;
  double prediction = 0.0;
  LstmModel gradient;
};

inline LossAndGradient squared_error_gradient(const LstmModel& m, std::span<const double> sequence, double target) {
  auto tr = lstm_forward(m, sequence);
  const double err = tr.prediction - target;
  return {err * err, tr.prediction, lstm_backward(m, sequence, tr, 2.0 * err)};
}

/// Largest |g_bptt - g_fd| / max(1e-8, |g_bptt| + |g_fd|) over all
/// parameters, where g_fd is the central difference of the squared-error
/// loss with step `epsilon`. The difference quotient is evaluated in
/// long double so rounding noise stays well below the checked tolerance.
inline double gradient_check(const LstmModel& m, std::span<const double> sequence, double target,
                             double epsilon = 1e-5) {
  if (!(std::isfinite(epsilon) && epsilon > 0.0)) throw ParameterError("epsilon must be positive and finite");
  m.check_shapes();
  const auto analytic = squared_error_gradient(m, sequence, target).gradient;
  std::vector<double> g_analytic;
  analytic.for_each_parameter([&](const double& v) { g_analytic.push_back(v); });

  using Wide = long double;
  auto wide = m.cast<Wide>();
  std::vector<Wide> seq(sequence.begin(), sequence.end());
  const Wide tgt = target;
  const Wide eps = epsilon;
  auto loss = [&](const BasicLstm<Wide>& model) {
    const Wide e = lstm_predict<Wide>(model, seq) - tgt;
    return e * e;
  };

  std::vector<Wide*> params;
  wide.for_each_parameter([&](Wide& v) { params.push_back(&v); });
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Wide saved = *params[k];
    *params[k] = saved + eps;
    const Wide up = loss(wide);
    *params[k] = saved - eps;
    const Wide down = loss(wide);
    *params[k] = saved;
    const double fd = static_cast<double>((up - down) / (Wide{2} * eps));
    const double ga = g_analytic[k];
    const double rel = std::abs(ga - fd) / std::max(1e-8, std::abs(ga) + std::abs(fd));
    worst = std::max(worst, rel);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// JSON serialization. Parameters are flat row-major arrays; nlohmann writes
// doubles in shortest round-trip form.

inline nlohmann::json to_json(const LstmModel& m) {
  nlohmann::json j;
  j["format"] = "mecorch-lstm";
  j["version"] = 1;
  j["input_dim"] = m.input_dim;
  j["hidden_dim"] = m.hidden_dim;
  j["window"] = m.window;
  for (std::size_t k = 0; k < 4; ++k) {
    j["gates"][kGateNames[k]] = {{"w_input", m.gates[k].w_input},
                                 {"w_recurrent", m.gates[k].w_recurrent},
                                 {"bias", m.gates[k].bias}};
  }
  j["output"] = {{"weight", m.out_weight}, {"bias", m.out_bias}};
  return j;
}

inline LstmModel lstm_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "mecorch-lstm") throw InputError("not an LSTM model document");
    auto m = LstmModel::zeros(j.at("input_dim").get<std::size_t>(), j.at("hidden_dim").get<std::size_t>());
    m.window = j.value("window", std::size_t{0});
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& g = j.at("gates").at(kGateNames[k]);
      m.gates[k].w_input = g.at("w_input").get<std::vector<double>>();
      m.gates[k].w_recurrent = g.at("w_recurrent").get<std::vector<double>>();
      m.gates[k].bias = g.at("bias").get<std::vector<double>>();
    }
    m.out_weight = j.at("output").at("weight").get<std::vector<double>>();
    m.out_bias = j.at("output").at("bias").get<double>();
    m.check_shapes();
    bool finite = true;
    m.for_each_parameter([&](const double& v) { finite = finite && std::isfinite(v); });
    if (!finite) throw InputError("model contains non-finite parameters");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace mecorch
