#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lrvae/autodiff.hpp"

namespace lrvae {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

/// One bias-corrected Adam update. Parameters missing from `grads` are
/// treated as having a zero gradient. No weight decay is applied here.
void adam_step(std::span<ad::Parameter* const> params, const ad::GradientMap& grads, AdamState& state,
               double learning_rate);

}  // namespace lrvae
