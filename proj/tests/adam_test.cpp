#include <gtest/gtest.h>

#include <cmath>

#include "lrvae/adam.hpp"
#include "lrvae/errors.hpp"

namespace lrvae {
namespace {

/// Scalar Adam recurrence written out by hand.
struct ScalarAdam {
  double m = 0.0, v = 0.0, w;
  int t = 0;
  explicit ScalarAdam(double w0) : w(w0) {}
  void step(double g, double lr) {
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double m_hat = m / (1.0 - std::pow(0.9, t));
    const double v_hat = v / (1.0 - std::pow(0.999, t));
    w -= lr * m_hat / (std::sqrt(v_hat) + 1e-8);
  }
};

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ad::Parameter p{"p", Tensor::vector({1.0, -2.0, 3.0})};
  ad::Parameter* params[] = {&p};
  AdamState state;
  ad::GradientMap grads{{&p, Tensor::zeros({3})}};
  adam_step(params, grads, state, 0.1);
  adam_step(params, {}, state, 0.1);
  EXPECT_EQ(p.value, Tensor::vector({1.0, -2.0, 3.0}));
  EXPECT_EQ(state.first_moment[0], Tensor::zeros({3}));
  EXPECT_EQ(state.second_moment[0], Tensor::zeros({3}));
  EXPECT_EQ(state.step, 2u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  const double lr = 5e-4;
  ad::Parameter p{"p", Tensor::vector({0.0, 0.0, 0.0, 0.0})};
  ad::Parameter* params[] = {&p};
  AdamState state;
  adam_step(params, {{&p, Tensor::vector({3.0, -0.01, 250.0, -7.5})}}, state, lr);
  EXPECT_NEAR(p.value[0], -lr, 1e-6);
  EXPECT_NEAR(p.value[1], lr, 1e-6);
  EXPECT_NEAR(p.value[2], -lr, 1e-6);
  EXPECT_NEAR(p.value[3], lr, 1e-6);
}

TEST(Adam, TwoStepsMatchHandUnroll) {
  const double lr = 1e-2;
  const double w0[] = {0.5, -1.0};
  const double g1[] = {0.2, -3.0};
  const double g2[] = {0.2, 1.5};
  ad::Parameter p{"p", Tensor::vector({w0[0], w0[1]})};
  ad::Parameter* params[] = {&p};
  AdamState state;
  adam_step(params, {{&p, Tensor::vector({g1[0], g1[1]})}}, state, lr);
  adam_step(params, {{&p, Tensor::vector({g2[0], g2[1]})}}, state, lr);
  for (int i = 0; i < 2; ++i) {
    ScalarAdam ref(w0[i]);
    ref.step(g1[i], lr);
    ref.step(g2[i], lr);
    EXPECT_NEAR(p.value[i], ref.w, 1e-15);
  }
  // Constant gradient: both bias-corrected moments equal g, so each step is lr * g / (|g| + eps).
  EXPECT_NEAR(p.value[0], w0[0] - 2.0 * lr * 0.2 / (0.2 + 1e-8), 1e-15);
}

TEST(Adam, ShapeMismatchIsDimensionError) {
  ad::Parameter p{"p", Tensor::vector({1.0, 2.0})};
  ad::Parameter* params[] = {&p};
  AdamState state;
  EXPECT_THROW(adam_step(params, {{&p, Tensor::vector({1.0})}}, state, 0.1), DimensionError);
}

}  // namespace
}  // namespace lrvae
