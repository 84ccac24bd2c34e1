#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrvae/tensor.hpp"

namespace lrvae {

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

/// Per-class scores from a confusion count; undefined ratios are 0.
std::vector<ClassScores> per_class_scores(std::span<const int> predictions, std::span<const int> labels,
                                          std::size_t num_classes);

/// Sum over classes of support_c / N * F1_c.
double weighted_f_score(std::span<const int> predictions, std::span<const int> labels, std::size_t num_classes);

/// Inner product over norms; 0 when either vector is zero.
double cosine_score(std::span<const double> a, std::span<const double> b);

struct ScoredTrial {
  double score = 0.0;
  bool same_speaker = false;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Sweeps every distinct score as threshold t with FAR(t) = P(score >= t | different)
/// and FRR(t) = P(score < t | same), and linearly interpolates the FAR = FRR crossing.
EerResult equal_error_rate(std::span<const ScoredTrial> trials);

/// Index pair into an embedding matrix.
struct TrialPair {
  std::size_t a = 0;
  std::size_t b = 0;
  bool same_speaker = false;

  friend bool operator==(const TrialPair&, const TrialPair&) = default;
};

/// Seeded same/different pairs, balanced to within one, capped at max_trials, no self-pairs.
std::vector<TrialPair> sample_trial_pairs(std::span<const int> speaker_labels, std::size_t max_trials,
                                          std::uint64_t seed);

struct VerificationTrial {
  std::vector<double> embedding_a;
  std::vector<double> embedding_b;
  bool same_speaker = false;
};

std::vector<VerificationTrial> build_trials(const Tensor& embeddings, std::span<const int> speaker_labels,
                                            std::size_t max_trials, std::uint64_t seed);

/// Cosine-scores the pairs against rows of `embeddings`.
std::vector<ScoredTrial> score_trials(const Tensor& embeddings, std::span<const TrialPair> pairs);
std::vector<ScoredTrial> score_trials(std::span<const VerificationTrial> trials);

std::uint64_t trial_fingerprint(std::span<const TrialPair> pairs);

struct MetricReport {
  double weighted_f_score = 0.0;
  double eer = 0.0;
  double eer_threshold = 0.0;
  std::vector<ClassScores> per_class;
  std::size_t trial_count = 0;
};

nlohmann::json to_json(const MetricReport& report, std::span<const std::string> class_names = {});

}  // namespace lrvae
