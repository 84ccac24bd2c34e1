#include "oracles/finite_difference.hpp"

#include <algorithm>
#include <cmath>

namespace lrvae::testing {

std::vector<GradientMismatch> check_gradients(const std::vector<ad::Parameter*>& params,
                                              const ad::GradientMap& analytic,
                                              const std::function<double()>& loss, double h, double rtol,
                                              double atol) {
  std::vector<GradientMismatch> out;
  for (ad::Parameter* p : params) {
    const auto it = analytic.find(p);
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = loss();
      p->value[i] = saved - h;
      const double down = loss();
      p->value[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = it == analytic.end() ? 0.0 : it->second[i];
      if (std::abs(a - numeric) > atol + rtol * std::max(std::abs(a), std::abs(numeric))) {
        out.push_back({p->name, i, a, numeric});
      }
    }
  }
  return out;
}

}  // namespace lrvae::testing
