#include <gtest/gtest.h>

#include <random>

#include "mecorch/lstm.hpp"

using namespace mecorch;

namespace {

LstmModel random_model(std::mt19937_64& rng, std::size_t input_dim, std::size_t hidden_dim, double scale) {
  auto m = LstmModel::zeros(input_dim, hidden_dim);
  std::uniform_real_distribution<double> u(-scale, scale);
  m.for_each_parameter([&](double& v) { v = u(rng); });
  return m;
}

}  // namespace

TEST(LstmForward, ZeroModelPredictsHalf) {
  auto m = LstmModel::zeros(1, 3);
  std::vector<double> seq{0.1, 0.9, 0.4, 0.7};
  auto tr = lstm_forward<double>(m, seq);
  EXPECT_EQ(tr.prediction, 0.5);
  for (double h : tr.hidden) EXPECT_EQ(h, 0.0);
  for (double c : tr.cell) EXPECT_EQ(c, 0.0);
  for (std::size_t k = 0; k < 3; ++k)
    for (double a : tr.gate_act[k]) EXPECT_EQ(a, 0.5);
  for (double g : tr.gate_act[3]) EXPECT_EQ(g, 0.0);
}

// Reference values from a 30-digit evaluation of the gate recurrences
// (i,f,o = sigmoid, g = tanh, c = f*c + i*g, h = o*tanh(c)).
TEST(LstmForward, MatchesHandEvaluatedScalarCell) {
  auto m = LstmModel::zeros(1, 1);
  auto set = [&](GateKind k, double wx, double wh, double b) {
    m.gate(k).w_input[0] = wx;
    m.gate(k).w_recurrent[0] = wh;
    m.gate(k).bias[0] = b;
  };
  set(GateKind::Input, 0.5, -0.3, 0.1);
  set(GateKind::Forget, 0.2, 0.4, 1.0);
  set(GateKind::Output, -0.6, 0.1, 0.05);
  set(GateKind::Candidate, 0.9, -0.2, 0.0);
  m.out_weight[0] = 1.5;
  m.out_bias = -0.2;
  std::vector<double> seq{0.3, 0.7};
  auto tr = lstm_forward<double>(m, seq);
  EXPECT_NEAR(tr.hidden[1], 0.0687890962819889932686746809745, 1e-15);
  EXPECT_NEAR(tr.cell[1], 0.148203687552357479142952355206, 1e-15);
  EXPECT_NEAR(tr.hidden[2], 0.171468842431184338286181384174, 1e-15);
  EXPECT_NEAR(tr.cell[2], 0.445276369714481038648659544697, 1e-15);
  EXPECT_NEAR(tr.prediction, 0.514296917577219502016374905147, 1e-15);
}

TEST(LstmForward, DeterministicAndFinite) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = random_model(rng, trial % 2 ? 3 : 1, 1 + trial % 8, 2.0);
    std::vector<double> seq(m.input_dim * (1 + trial % 12));
    for (auto& v : seq) v = u(rng);
    auto a = lstm_predict<double>(m, seq);
    auto b = lstm_predict<double>(m, seq);
    ASSERT_EQ(a, b);
    ASSERT_TRUE(std::isfinite(a));
    ASSERT_GT(a, 0.0);
    ASSERT_LT(a, 1.0);
  }
}

TEST(LstmForward, ShapeMismatch) {
  auto m = LstmModel::zeros(3, 2);
  std::vector<double> bad{0.1, 0.2};
  EXPECT_THROW(lstm_forward<double>(m, bad), DimensionError);
  std::vector<double> empty;
  EXPECT_THROW(lstm_forward<double>(m, empty), DimensionError);
  m.gate(GateKind::Output).bias.pop_back();
  EXPECT_THROW(m.check_shapes(), DimensionError);
}

TEST(GradientCheck, RandomSmallModels) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t hidden = 1 + trial % 4;
    const std::size_t steps = 1 + (trial / 4) % 6;
    auto m = random_model(rng, trial % 3 == 0 ? 3 : 1, hidden, 0.8);
    std::vector<double> seq(m.input_dim * steps);
    for (auto& v : seq) v = u(rng);
    worst = std::max(worst, gradient_check(m, seq, u(rng)));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(GradientCheck, ZeroModelOutputPathHasGradient) {
  auto m = LstmModel::zeros(1, 4);
  std::vector<double> seq{0.2, 0.4, 0.6};
  auto g = squared_error_gradient(m, seq, 0.9).gradient;
  EXPECT_NE(g.out_bias, 0.0);
  EXPECT_LT(gradient_check(m, seq, 0.9), 1e-4);
}

TEST(GradientCheck, RejectsZeroEpsilon) {
  auto m = LstmModel::zeros(1, 2);
  std::vector<double> seq{0.5};
  EXPECT_THROW(gradient_check(m, seq, 0.1, 0.0), ParameterError);
}

TEST(LstmJson, RoundTripIsExact) {
  auto m = init_lstm(3, 5, 9);
  m.window = 12;
  m.out_bias = 0.1 + 0.2;  // not representable in short decimal form
  auto text = to_json(m).dump();
  auto back = lstm_from_json(nlohmann::json::parse(text));
  EXPECT_TRUE(back == m);
  EXPECT_EQ(to_json(back).dump(), text);
}

TEST(LstmJson, RejectsBadShapes) {
  auto j = to_json(init_lstm(1, 2, 1));
  j["gates"]["forget"]["bias"] = std::vector<double>{1.0};
  EXPECT_THROW(lstm_from_json(j), DimensionError);
  EXPECT_THROW(lstm_from_json(nlohmann::json::object()), InputError);
}

TEST(LstmInit, ForgetBiasIsOne) {
  auto m = init_lstm(1, 4, 3);
  for (double b : m.gate(GateKind::Forget).bias) EXPECT_EQ(b, 1.0);
  for (double w : m.gate(GateKind::Input).w_recurrent) {
    EXPECT_GE(w, -0.08);
    EXPECT_LE(w, 0.08);
  }
}
