#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lrvae/autodiff.hpp"
#include "lrvae/rng.hpp"
#include "lrvae/tensor.hpp"

namespace lrvae {

enum class ScheduleDirection : std::uint8_t { kDecreasing, kIncreasing };
enum class ScheduleForm : std::uint8_t { kLinear, kExponential };

std::string to_string(ScheduleDirection d);
std::string to_string(ScheduleForm f);
ScheduleDirection parse_schedule_direction(const std::string& s);
ScheduleForm parse_schedule_form(const std::string& s);

/// Per-node preserve probabilities for layered dropout.
///
/// Index 0 is the "top" of the latent code. A decreasing schedule keeps the
/// top nodes most often (emotion task); an increasing one keeps the bottom
/// nodes most often (identity task).
class PreserveRateSchedule {
 public:
  /// Linear: p_i = p_max - (p_max - p_min) * i / (D - 1) for decreasing, reversed for increasing.
  /// Exponential: p_i = p_max * (p_min / p_max)^(i / (D - 1)), reversed for increasing; needs p_min > 0.
  static PreserveRateSchedule build(std::size_t size, double p_max, double p_min,
                                    ScheduleDirection direction, ScheduleForm form);

  std::span<const double> rates() const noexcept { return rates_; }
  std::size_t size() const noexcept { return rates_.size(); }
  double operator[](std::size_t i) const { return rates_[i]; }
  ScheduleDirection direction() const noexcept { return direction_; }
  ScheduleForm form() const noexcept { return form_; }
  double p_max() const noexcept { return p_max_; }
  double p_min() const noexcept { return p_min_; }

 private:
  std::vector<double> rates_;
  ScheduleDirection direction_ = ScheduleDirection::kDecreasing;
  ScheduleForm form_ = ScheduleForm::kLinear;
  double p_max_ = 1.0;
  double p_min_ = 1.0;
};

/// Bernoulli keep-bits, one per element of the masked batch.
struct DropoutMask {
  Tensor bits;
  std::uint64_t stream = 0;
};

DropoutMask sample_dropout_mask(std::size_t batch, const PreserveRateSchedule& schedule, Rng& rng);

/// Train mode: x * m with m[b, i] ~ Bernoulli(p_i), drawn fresh for every row.
std::pair<Tensor, DropoutMask> apply_dropout_train(const Tensor& x, const PreserveRateSchedule& schedule,
                                                   Rng& rng);
/// Eval mode: x[b, i] * p_i.
Tensor apply_dropout_eval(const Tensor& x, const PreserveRateSchedule& schedule);

/// Graph versions; gradient flows only through surviving nodes in train mode.
ad::Var apply_dropout_train(ad::Var x, const PreserveRateSchedule& schedule, Rng& rng);
ad::Var apply_dropout_eval(ad::Var x, const PreserveRateSchedule& schedule);

}  // namespace lrvae
