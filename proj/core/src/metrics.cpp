#include "lrvae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "lrvae/errors.hpp"
#include "lrvae/rng.hpp"

namespace lrvae {
namespace {

using PairKey = std::pair<std::size_t, std::size_t>;

PairKey ordered(std::size_t a, std::size_t b) { return a < b ? PairKey{a, b} : PairKey{b, a}; }

}  // namespace

std::vector<ClassScores> per_class_scores(std::span<const int> predictions, std::span<const int> labels,
                                          std::size_t num_classes) {
  if (predictions.size() != labels.size()) {
    throw ValidationError("weighted_f_score: " + std::to_string(predictions.size()) + " predictions for " +
                          std::to_string(labels.size()) + " labels");
  }
  std::vector<std::size_t> tp(num_classes, 0), predicted(num_classes, 0), actual(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const int p = predictions[i];
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes || p < 0 || static_cast<std::size_t>(p) >= num_classes) {
      throw IndexError("weighted_f_score: class index outside [0, " + std::to_string(num_classes) + ")");
    }
    ++actual[static_cast<std::size_t>(y)];
    ++predicted[static_cast<std::size_t>(p)];
    if (y == p) ++tp[static_cast<std::size_t>(y)];
  }
  std::vector<ClassScores> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    ClassScores& s = out[c];
    s.support = actual[c];
    s.precision = predicted[c] == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(predicted[c]);
    s.recall = actual[c] == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(actual[c]);
    s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return out;
}

double weighted_f_score(std::span<const int> predictions, std::span<const int> labels, std::size_t num_classes) {
  const auto scores = per_class_scores(predictions, labels, num_classes);
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : scores) total += static_cast<double>(s.support) * s.f1;
  return total / static_cast<double>(labels.size());
}

double cosine_score(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine_score: dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

EerResult equal_error_rate(std::span<const ScoredTrial> trials) {
  std::vector<double> same, diff;
  for (const auto& t : trials) (t.same_speaker ? same : diff).push_back(t.score);
  if (same.empty() || diff.empty()) {
    throw ValidationError("equal_error_rate needs both same-speaker and different-speaker trials");
  }
  std::sort(same.begin(), same.end());
  std::sort(diff.begin(), diff.end());
  std::vector<double> thresholds;
  thresholds.reserve(trials.size() + 1);
  std::merge(same.begin(), same.end(), diff.begin(), diff.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  // Above every score: nothing accepted.
  thresholds.push_back(std::nextafter(thresholds.back(), std::numeric_limits<double>::infinity()));

  const double n_same = static_cast<double>(same.size());
  const double n_diff = static_cast<double>(diff.size());
  auto rates = [&](double t) {
    const auto below_same = std::lower_bound(same.begin(), same.end(), t) - same.begin();
    const auto below_diff = std::lower_bound(diff.begin(), diff.end(), t) - diff.begin();
    const double far = (n_diff - static_cast<double>(below_diff)) / n_diff;
    const double frr = static_cast<double>(below_same) / n_same;
    return std::pair{far, frr};
  };

  auto [prev_far, prev_frr] = rates(thresholds.front());
  double prev_t = thresholds.front();
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    const double t = thresholds[k];
    const auto [far, frr] = rates(t);
    const double d = far - frr;
    if (d <= 0.0) {
      if (k == 0 || d == 0.0) return {far, t};
      const double prev_d = prev_far - prev_frr;
      const double alpha = prev_d / (prev_d - d);
      return {prev_far + alpha * (far - prev_far), prev_t + alpha * (t - prev_t)};
    }
    prev_far = far;
    prev_frr = frr;
    prev_t = t;
  }
  // Unreachable: the sentinel threshold has FAR = 0 and FRR = 1.
  throw ContractError("equal_error_rate: no crossing found");
}

std::vector<TrialPair> sample_trial_pairs(std::span<const int> speaker_labels, std::size_t max_trials,
                                          std::uint64_t seed) {
  const std::size_t n = speaker_labels.size();
  std::vector<std::vector<std::size_t>> by_speaker;
  {
    std::vector<int> ids(speaker_labels.begin(), speaker_labels.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() < 2) throw ValidationError("verification trials need at least 2 speakers");
    by_speaker.resize(ids.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto pos = std::lower_bound(ids.begin(), ids.end(), speaker_labels[i]) - ids.begin();
      by_speaker[static_cast<std::size_t>(pos)].push_back(i);
    }
  }
  std::size_t same_available = 0;
  std::vector<double> pair_weights;
  for (const auto& rows : by_speaker) {
    const std::size_t c = rows.size() * (rows.size() - 1) / 2;
    same_available += c;
    pair_weights.push_back(static_cast<double>(c));
  }
  const std::size_t diff_available = n * (n - 1) / 2 - same_available;
  if (same_available == 0) throw ValidationError("verification trials need a speaker with at least 2 rows");

  const std::size_t half = max_trials / 2;
  const std::size_t n_same = std::min({half + max_trials % 2, same_available, diff_available + 1});
  const std::size_t n_diff = std::min({n_same, diff_available, max_trials - n_same});

  Rng rng = make_rng(seed, "trials");
  std::vector<TrialPair> out;
  out.reserve(n_same + n_diff);

  // Same-speaker pairs: enumerate when dense, reject duplicates when sparse.
  if (same_available <= 4 * n_same) {
    std::vector<TrialPair> all;
    for (const auto& rows : by_speaker) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) all.push_back({rows[i], rows[j], true});
      }
    }
    std::shuffle(all.begin(), all.end(), rng);
    out.insert(out.end(), all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_same));
  } else {
    std::discrete_distribution<std::size_t> pick_speaker(pair_weights.begin(), pair_weights.end());
    std::set<PairKey> seen;
    while (seen.size() < n_same) {
      const auto& rows = by_speaker[pick_speaker(rng)];
      std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
      const std::size_t a = rows[pick(rng)];
      const std::size_t b = rows[pick(rng)];
      if (a == b) continue;
      if (seen.insert(ordered(a, b)).second) out.push_back({ordered(a, b).first, ordered(a, b).second, true});
    }
  }

  if (diff_available <= 4 * n_diff) {
    std::vector<TrialPair> all;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (speaker_labels[i] != speaker_labels[j]) all.push_back({i, j, false});
      }
    }
    std::shuffle(all.begin(), all.end(), rng);
    out.insert(out.end(), all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_diff));
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::set<PairKey> seen;
    while (seen.size() < n_diff) {
      const std::size_t a = pick(rng);
      const std::size_t b = pick(rng);
      if (speaker_labels[a] == speaker_labels[b]) continue;
      if (seen.insert(ordered(a, b)).second) out.push_back({ordered(a, b).first, ordered(a, b).second, false});
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<VerificationTrial> build_trials(const Tensor& embeddings, std::span<const int> speaker_labels,
                                            std::size_t max_trials, std::uint64_t seed) {
  if (embeddings.rows() != speaker_labels.size()) {
    throw DimensionError("build_trials: " + std::to_string(embeddings.rows()) + " embeddings for " +
                         std::to_string(speaker_labels.size()) + " labels");
  }
  std::vector<VerificationTrial> out;
  for (const TrialPair& p : sample_trial_pairs(speaker_labels, max_trials, seed)) {
    const auto a = embeddings.row(p.a);
    const auto b = embeddings.row(p.b);
    out.push_back({{a.begin(), a.end()}, {b.begin(), b.end()}, p.same_speaker});
  }
  return out;
}

std::vector<ScoredTrial> score_trials(const Tensor& embeddings, std::span<const TrialPair> pairs) {
  std::vector<ScoredTrial> out;
  out.reserve(pairs.size());
  for (const TrialPair& p : pairs) {
    out.push_back({cosine_score(embeddings.row(p.a), embeddings.row(p.b)), p.same_speaker});
  }
  return out;
}

std::vector<ScoredTrial> score_trials(std::span<const VerificationTrial> trials) {
  std::vector<ScoredTrial> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back({cosine_score(t.embedding_a, t.embedding_b), t.same_speaker});
  return out;
}

std::uint64_t trial_fingerprint(std::span<const TrialPair> pairs) {
  Fnv1a h;
  for (const auto& p : pairs) {
    h.update_value(static_cast<std::uint64_t>(p.a));
    h.update_value(static_cast<std::uint64_t>(p.b));
    h.update_value(static_cast<std::uint8_t>(p.same_speaker));
  }
  return h.digest();
}

nlohmann::json to_json(const MetricReport& report, std::span<const std::string> class_names) {
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& s = report.per_class[c];
    classes.push_back({{"class", c < class_names.size() ? class_names[c] : std::to_string(c)},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"support", s.support}});
  }
  return {{"weighted_f_score", report.weighted_f_score},
          {"eer", report.eer},
          {"eer_threshold", report.eer_threshold},
          {"trial_count", report.trial_count},
          {"per_class", std::move(classes)}};
}

}  // namespace lrvae
