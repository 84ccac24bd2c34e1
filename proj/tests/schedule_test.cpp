#include <gtest/gtest.h>

#include <cmath>

#include "lrvae/errors.hpp"
#include "lrvae/schedule.hpp"

namespace lrvae {
namespace {

using Dir = ScheduleDirection;
using Form = ScheduleForm;

std::vector<double> rates_of(const PreserveRateSchedule& s) { return {s.rates().begin(), s.rates().end()}; }

TEST(Schedule, LinearDecreasingByHand) {
  const auto s = PreserveRateSchedule::build(4, 0.9, 0.1, Dir::kDecreasing, Form::kLinear);
  const std::vector<double> expected{0.9, 0.9 - 0.8 / 3, 0.9 - 1.6 / 3, 0.1};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(s[i], expected[i], 1e-15);
  EXPECT_EQ(s[0], 0.9);
  EXPECT_EQ(s[3], 0.1);
}

TEST(Schedule, DegenerateConstant) {
  for (Dir d : {Dir::kDecreasing, Dir::kIncreasing}) {
    for (Form f : {Form::kLinear, Form::kExponential}) {
      EXPECT_EQ(rates_of(PreserveRateSchedule::build(3, 1.0, 1.0, d, f)), (std::vector<double>{1, 1, 1}));
    }
  }
}

TEST(Schedule, EndpointsOnlyIncreasing) {
  EXPECT_EQ(rates_of(PreserveRateSchedule::build(2, 0.8, 0.2, Dir::kIncreasing, Form::kLinear)),
            (std::vector<double>{0.2, 0.8}));
}

TEST(Schedule, ExponentialIsGeometric) {
  const auto s = PreserveRateSchedule::build(3, 0.8, 0.2, Dir::kDecreasing, Form::kExponential);
  EXPECT_EQ(s[0], 0.8);
  EXPECT_NEAR(s[1], 0.4, 1e-15);
  EXPECT_EQ(s[2], 0.2);
}

TEST(Schedule, InvalidArguments) {
  EXPECT_THROW(PreserveRateSchedule::build(4, 0.1, 0.9, Dir::kDecreasing, Form::kLinear), ValidationError);
  EXPECT_THROW(PreserveRateSchedule::build(1, 0.9, 0.1, Dir::kDecreasing, Form::kLinear), ValidationError);
  EXPECT_THROW(PreserveRateSchedule::build(4, 1.1, 0.1, Dir::kDecreasing, Form::kLinear), ValidationError);
  EXPECT_THROW(PreserveRateSchedule::build(4, 0.9, -0.1, Dir::kDecreasing, Form::kLinear), ValidationError);
  EXPECT_THROW(PreserveRateSchedule::build(4, 0.9, 0.0, Dir::kDecreasing, Form::kExponential), ValidationError);
}

TEST(Schedule, MonotoneAndBoundedSweep) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 2 + rng() % 200;
    double a = u(rng), b = u(rng);
    if (a < b) std::swap(a, b);
    const Form form = trial % 2 ? Form::kLinear : Form::kExponential;
    if (form == Form::kExponential && b == 0.0) continue;
    const auto dec = PreserveRateSchedule::build(d, a, b, Dir::kDecreasing, form);
    const auto inc = PreserveRateSchedule::build(d, a, b, Dir::kIncreasing, form);
    ASSERT_EQ(dec.size(), d);
    EXPECT_EQ(dec[0], a);
    EXPECT_EQ(dec[d - 1], b);
    for (std::size_t i = 0; i < d; ++i) {
      EXPECT_GE(dec[i], 0.0);
      EXPECT_LE(dec[i], 1.0);
      EXPECT_EQ(inc[i], dec[d - 1 - i]);
      if (i + 1 < d) {
        EXPECT_GE(dec[i], dec[i + 1]);
        EXPECT_LE(inc[i], inc[i + 1]);
      }
    }
  }
}

TEST(Schedule, EmotionTopIdentityBottom) {
  const auto emo = PreserveRateSchedule::build(8, 0.95, 0.05, Dir::kDecreasing, Form::kLinear);
  const auto id = PreserveRateSchedule::build(8, 0.95, 0.05, Dir::kIncreasing, Form::kLinear);
  EXPECT_EQ(emo[0], 0.95);
  EXPECT_EQ(id[0], 0.05);
  EXPECT_EQ(emo[7], 0.05);
  EXPECT_EQ(id[7], 0.95);
}

TEST(Dropout, AllOnesIsIdentity) {
  Rng rng(1);
  const Tensor x = Tensor::matrix({{1, -2, 3}, {4, 5, -6}});
  const auto s = PreserveRateSchedule::build(3, 1.0, 1.0, Dir::kDecreasing, Form::kLinear);
  const auto [y, mask] = apply_dropout_train(x, s, rng);
  EXPECT_EQ(y, x);
  EXPECT_EQ(mask.bits, Tensor::filled({2, 3}, 1.0));
}

TEST(Dropout, AllZerosDropsEverything) {
  Rng rng(1);
  const auto s = PreserveRateSchedule::build(3, 0.0, 0.0, Dir::kDecreasing, Form::kLinear);
  const auto [y, mask] = apply_dropout_train(Tensor::matrix({{1, 2, 3}}), s, rng);
  EXPECT_EQ(y, Tensor::zeros({1, 3}));
}

TEST(Dropout, HalfSurvivalRate) {
  Rng rng(2024);
  const auto s = PreserveRateSchedule::build(2, 0.5, 0.5, Dir::kDecreasing, Form::kLinear);
  const Tensor x = Tensor::filled({5000, 2}, 1.0);  // 10000 draws
  const auto [y, mask] = apply_dropout_train(x, s, rng);
  double kept = 0;
  for (double v : mask.bits.values()) kept += v;
  EXPECT_NEAR(kept / 10000.0, 0.5, 0.02);
}

TEST(Dropout, WidthMismatch) {
  Rng rng(1);
  const auto s = PreserveRateSchedule::build(3, 0.9, 0.1, Dir::kDecreasing, Form::kLinear);
  EXPECT_THROW(apply_dropout_train(Tensor::zeros({2, 4}), s, rng), DimensionError);
  EXPECT_THROW(apply_dropout_eval(Tensor::zeros({2, 4}), s), DimensionError);
}

TEST(Dropout, SameSeedSameMasks) {
  const auto s = PreserveRateSchedule::build(16, 0.9, 0.1, Dir::kDecreasing, Form::kLinear);
  Rng a(77), b(77);
  for (int step = 0; step < 5; ++step) {
    const auto ma = sample_dropout_mask(8, s, a);
    const auto mb = sample_dropout_mask(8, s, b);
    EXPECT_EQ(ma.bits, mb.bits);
    EXPECT_EQ(ma.stream, mb.stream);
  }
}

TEST(Dropout, MasksDifferAcrossSamples) {
  Rng rng(3);
  const auto s = PreserveRateSchedule::build(64, 0.5, 0.5, Dir::kDecreasing, Form::kLinear);
  const auto m = sample_dropout_mask(2, s, rng);
  EXPECT_NE(std::vector<double>(m.bits.row(0).begin(), m.bits.row(0).end()),
            std::vector<double>(m.bits.row(1).begin(), m.bits.row(1).end()));
}

TEST(Dropout, EvalScalesActivations) {
  const auto s = PreserveRateSchedule::build(2, 1.0, 0.5, Dir::kIncreasing, Form::kLinear);
  EXPECT_EQ(apply_dropout_eval(Tensor::matrix({{2, 4}}), s), Tensor::matrix({{1, 4}}));
  const auto ones = PreserveRateSchedule::build(2, 1.0, 1.0, Dir::kIncreasing, Form::kLinear);
  EXPECT_EQ(apply_dropout_eval(Tensor::matrix({{2, 4}}), ones), Tensor::matrix({{2, 4}}));
}

TEST(Dropout, TrainMeanMatchesEval) {
  Rng rng(9);
  const auto s = PreserveRateSchedule::build(6, 0.9, 0.1, Dir::kDecreasing, Form::kLinear);
  const Tensor x = Tensor::matrix({{1.5, -2, 0.25, 3, -1, 0.5}});
  const std::size_t draws = 100000;
  std::vector<double> sum(6, 0.0);
  for (std::size_t n = 0; n < draws; ++n) {
    const auto [y, mask] = apply_dropout_train(x, s, rng);
    for (std::size_t i = 0; i < 6; ++i) sum[i] += y[i];
  }
  const Tensor expected = apply_dropout_eval(x, s);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(sum[i] / draws, expected[i], 2e-2 * std::abs(expected[i])) << "node " << i;
  }
}

TEST(Dropout, GradientOnlyThroughSurvivors) {
  ad::Parameter p{"x", Tensor::filled({4, 8}, 1.0)};
  const auto s = PreserveRateSchedule::build(8, 0.9, 0.1, Dir::kDecreasing, Form::kLinear);
  Rng rng_graph(4), rng_tensor(4);
  ad::Graph g;
  ad::Var y = apply_dropout_train(g.parameter(p), s, rng_graph);
  const auto grads = g.backward(ad::sum_squares(std::vector<ad::Var>{y}, 0.5));
  const auto [expected_y, mask] = apply_dropout_train(p.value, s, rng_tensor);
  EXPECT_EQ(y.value(), expected_y);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) EXPECT_EQ(grads.at(&p)[i], mask.bits[i]);
}

TEST(Schedule, NamesRoundTrip) {
  for (Dir d : {Dir::kDecreasing, Dir::kIncreasing}) EXPECT_EQ(parse_schedule_direction(to_string(d)), d);
  for (Form f : {Form::kLinear, Form::kExponential}) EXPECT_EQ(parse_schedule_form(to_string(f)), f);
  EXPECT_THROW(parse_schedule_form("cubic"), ValidationError);
}

}  // namespace
}  // namespace lrvae
