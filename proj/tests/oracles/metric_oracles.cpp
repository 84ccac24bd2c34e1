#include "oracles/metric_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lrvae::testing {

double oracle_weighted_f_score(const std::vector<int>& predictions, const std::vector<int>& labels,
                               int num_classes) {
  std::vector<std::vector<long>> confusion(num_classes, std::vector<long>(num_classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) ++confusion[labels[i]][predictions[i]];
  double total = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    long tp = confusion[c][c];
    long actual = 0, predicted = 0;
    for (int k = 0; k < num_classes; ++k) {
      actual += confusion[c][k];
      predicted += confusion[k][c];
    }
    double f1 = 0.0;
    if (tp > 0) {
      const double p = static_cast<double>(tp) / predicted;
      const double r = static_cast<double>(tp) / actual;
      f1 = 2 * p * r / (p + r);
    }
    total += static_cast<double>(actual) / labels.size() * f1;
  }
  return total;
}

double oracle_eer(const std::vector<double>& same_scores, const std::vector<double>& different_scores) {
  std::set<double> distinct(same_scores.begin(), same_scores.end());
  distinct.insert(different_scores.begin(), different_scores.end());
  struct Point {
    double far, frr;
  };
  std::vector<Point> points;
  for (double t : distinct) {
    int accepted_diff = 0, rejected_same = 0;
    for (double s : different_scores) accepted_diff += s >= t;
    for (double s : same_scores) rejected_same += s < t;
    points.push_back({static_cast<double>(accepted_diff) / different_scores.size(),
                      static_cast<double>(rejected_same) / same_scores.size()});
  }
  points.push_back({0.0, 1.0});  // threshold above every score
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double d = points[k].far - points[k].frr;
    if (d > 0) continue;
    if (k == 0 || d == 0) return points[k].far;
    const double d0 = points[k - 1].far - points[k - 1].frr;
    const double a = d0 / (d0 - d);
    return points[k - 1].far + a * (points[k].far - points[k - 1].far);
  }
  return NAN;
}

double oracle_gaussian_kl(const std::vector<std::vector<double>>& mu,
                          const std::vector<std::vector<double>>& log_var) {
  double sum = 0.0;
  for (std::size_t r = 0; r < mu.size(); ++r) {
    for (std::size_t i = 0; i < mu[r].size(); ++i) {
      const double var = std::exp(log_var[r][i]);
      // KL(N(m, v) || N(0, 1)) = (v + m^2 - 1 - ln v) / 2
      sum += 0.5 * (var + mu[r][i] * mu[r][i] - 1.0 - log_var[r][i]);
    }
  }
  return sum / mu.size();
}

double oracle_majority_wfs(const std::vector<double>& class_fractions) {
  const double top = *std::max_element(class_fractions.begin(), class_fractions.end());
  // Precision = top, recall = 1 for the majority class; every other F1 is 0.
  return top * (2 * top / (top + 1));
}

}  // namespace lrvae::testing
