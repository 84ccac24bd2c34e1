#include "lrvae/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "lrvae/errors.hpp"

namespace lrvae {
namespace {

void require_width(const Shape& shape, const PreserveRateSchedule& schedule) {
  if (shape.size() != 2 || shape[1] != schedule.size()) {
    throw DimensionError("dropout: input " + format_shape(shape) + " does not match schedule of length " +
                         std::to_string(schedule.size()));
  }
}

}  // namespace

std::string to_string(ScheduleDirection d) {
  return d == ScheduleDirection::kDecreasing ? "decreasing" : "increasing";
}

std::string to_string(ScheduleForm f) { return f == ScheduleForm::kLinear ? "linear" : "exponential"; }

ScheduleDirection parse_schedule_direction(const std::string& s) {
  if (s == "decreasing") return ScheduleDirection::kDecreasing;
  if (s == "increasing") return ScheduleDirection::kIncreasing;
  throw ValidationError("unknown schedule direction '" + s + "' (expected decreasing|increasing)");
}

ScheduleForm parse_schedule_form(const std::string& s) {
  if (s == "linear") return ScheduleForm::kLinear;
  if (s == "exponential") return ScheduleForm::kExponential;
  throw ValidationError("unknown schedule form '" + s + "' (expected linear|exponential)");
}

PreserveRateSchedule PreserveRateSchedule::build(std::size_t size, double p_max, double p_min,
                                                 ScheduleDirection direction, ScheduleForm form) {
  if (size < 2) throw ValidationError("schedule length must be at least 2, got " + std::to_string(size));
  if (!(p_min >= 0.0 && p_min <= p_max && p_max <= 1.0)) {
    throw ValidationError("schedule requires 0 <= p_min <= p_max <= 1, got p_min=" + std::to_string(p_min) +
                          " p_max=" + std::to_string(p_max));
  }
  if (form == ScheduleForm::kExponential && p_min <= 0.0) {
    throw ValidationError("exponential schedule requires p_min > 0");
  }

  PreserveRateSchedule s;
  s.direction_ = direction;
  s.form_ = form;
  s.p_max_ = p_max;
  s.p_min_ = p_min;
  s.rates_.resize(size);
  const double last = static_cast<double>(size - 1);
  for (std::size_t i = 0; i < size; ++i) {
    const double t = static_cast<double>(i) / last;
    s.rates_[i] = form == ScheduleForm::kLinear ? p_max - (p_max - p_min) * static_cast<double>(i) / last
                                                : p_max * std::pow(p_min / p_max, t);
  }
  s.rates_.front() = p_max;
  s.rates_.back() = p_min;
  // pow() rounding may break ties between neighbours.
  for (std::size_t i = 1; i < size; ++i) s.rates_[i] = std::min(s.rates_[i], s.rates_[i - 1]);
  if (direction == ScheduleDirection::kIncreasing) std::reverse(s.rates_.begin(), s.rates_.end());
  return s;
}

DropoutMask sample_dropout_mask(std::size_t batch, const PreserveRateSchedule& schedule, Rng& rng) {
  DropoutMask mask{Tensor::zeros({batch, schedule.size()}), rng()};
  // The stream tag is drawn from the generator so masks can be traced back to it.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      mask.bits(b, i) = unit(rng) < schedule[i] ? 1.0 : 0.0;
    }
  }
  return mask;
}

std::pair<Tensor, DropoutMask> apply_dropout_train(const Tensor& x, const PreserveRateSchedule& schedule,
                                                   Rng& rng) {
  require_width(x.shape(), schedule);
  DropoutMask mask = sample_dropout_mask(x.shape()[0], schedule, rng);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask.bits[i];
  return {std::move(out), std::move(mask)};
}

Tensor apply_dropout_eval(const Tensor& x, const PreserveRateSchedule& schedule) {
  require_width(x.shape(), schedule);
  Tensor out = x;
  const std::size_t d = schedule.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= schedule[i % d];
  return out;
}

ad::Var apply_dropout_train(ad::Var x, const PreserveRateSchedule& schedule, Rng& rng) {
  require_width(x.shape(), schedule);
  DropoutMask mask = sample_dropout_mask(x.shape()[0], schedule, rng);
  return ad::mul_constant(x, std::move(mask.bits));
}

ad::Var apply_dropout_eval(ad::Var x, const PreserveRateSchedule& schedule) {
  require_width(x.shape(), schedule);
  return ad::scale_columns(x, schedule.rates());
}

}  // namespace lrvae
