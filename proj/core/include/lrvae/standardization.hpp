#pragma once

#include <vector>

#include "lrvae/tensor.hpp"

namespace lrvae {

/// Per-dimension affine normalization fitted on training rows.
struct Standardization {
  std::vector<double> mean;
  /// Population standard deviation; zero marks a constant dimension.
  std::vector<double> stddev;

  bool empty() const noexcept { return mean.empty(); }

  /// Fit on the rows selected by `rows` (all rows when empty).
  static Standardization fit(const Tensor& features, const std::vector<std::size_t>& rows);

  /// (x - mean) / stddev; constant dimensions are only centered.
  Tensor apply(const Tensor& features) const;

  friend bool operator==(const Standardization&, const Standardization&) = default;
};

}  // namespace lrvae
