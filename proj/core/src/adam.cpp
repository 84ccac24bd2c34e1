#include "lrvae/adam.hpp"

#include <cmath>

#include "lrvae/errors.hpp"

namespace lrvae {

void adam_step(std::span<ad::Parameter* const> params, const ad::GradientMap& grads, AdamState& state,
               double learning_rate) {
  if (state.first_moment.empty()) {
    for (const ad::Parameter* p : params) {
      state.first_moment.push_back(Tensor::zeros(p->value.shape()));
      state.second_moment.push_back(Tensor::zeros(p->value.shape()));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam: state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.first_moment[k].shape() != params[k]->value.shape()) {
      throw DimensionError("adam: moment shape " + format_shape(state.first_moment[k].shape()) +
                           " does not match parameter '" + params[k]->name + "' " +
                           format_shape(params[k]->value.shape()));
    }
    if (auto it = grads.find(params[k]); it != grads.end() && it->second.shape() != params[k]->value.shape()) {
      throw DimensionError("adam: gradient shape " + format_shape(it->second.shape()) + " for parameter '" +
                           params[k]->name + "' " + format_shape(params[k]->value.shape()));
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto it = grads.find(params[k]);
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    auto w = params[k]->value.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = it == grads.end() ? 0.0 : it->second[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace lrvae
