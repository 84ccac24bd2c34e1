#include "lrvae/standardization.hpp"

#include <algorithm>
#include <cmath>

#include "lrvae/errors.hpp"

namespace lrvae {

Standardization Standardization::fit(const Tensor& features, const std::vector<std::size_t>& rows) {
  const std::size_t f = features.cols();
  std::vector<std::size_t> all;
  const std::vector<std::size_t>* use = &rows;
  if (rows.empty()) {
    all.resize(features.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    use = &all;
  }
  const double n = static_cast<double>(use->size());
  Standardization s{std::vector<double>(f, 0.0), std::vector<double>(f, 0.0)};
  for (std::size_t r : *use) {
    for (std::size_t c = 0; c < f; ++c) s.mean[c] += features(r, c);
  }
  for (double& m : s.mean) m /= n;
  for (std::size_t r : *use) {
    for (std::size_t c = 0; c < f; ++c) {
      const double d = features(r, c) - s.mean[c];
      s.stddev[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < f; ++c) {
    const double sd = std::sqrt(s.stddev[c] / n);
    // Rounding leaves a constant column with a tiny nonzero spread.
    s.stddev[c] = sd <= 1e-12 * std::max(1.0, std::abs(s.mean[c])) ? 0.0 : sd;
  }
  return s;
}

Tensor Standardization::apply(const Tensor& features) const {
  if (features.cols() != mean.size()) {
    throw DimensionError("standardization fitted on " + std::to_string(mean.size()) + " features, got " +
                         format_shape(features.shape()));
  }
  Tensor out = features;
  const std::size_t f = mean.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t c = i % f;
    out[i] -= mean[c];
    if (stddev[c] > 0.0) out[i] /= stddev[c];
  }
  return out;
}

}  // namespace lrvae
