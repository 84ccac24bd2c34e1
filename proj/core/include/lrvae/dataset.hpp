#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lrvae/standardization.hpp"
#include "lrvae/tensor.hpp"

namespace lrvae {

enum class Split : std::uint8_t { kTrain, kDev, kTest };

std::string to_string(Split s);
Split parse_split(const std::string& s);

/// Feature rows with emotion and speaker labels and a speaker-disjoint split.
///
/// Invariants (checked by validate()): all three splits are non-empty, no
/// speaker appears in two splits, and every emotion class occurs in every split.
struct LabeledDataset {
  Tensor features;  // [N x F]
  std::vector<int> emotion;
  std::vector<int> speaker;
  std::vector<Split> split;
  std::vector<std::string> emotion_names;
  std::vector<std::string> speaker_names;
  Standardization stats;  // fitted on train rows only

  std::size_t size() const noexcept { return emotion.size(); }
  std::size_t feature_dim() const { return features.cols(); }
  std::size_t num_emotions() const noexcept { return emotion_names.size(); }
  std::size_t num_speakers() const noexcept { return speaker_names.size(); }

  std::vector<std::size_t> rows_in(Split s) const;
  /// Sorted speaker indices present in a split.
  std::vector<int> speakers_in(Split s) const;

  void validate() const;
  void fit_statistics();

  /// Fingerprint of the row-to-split assignment and labels (not the features).
  std::uint64_t split_fingerprint() const;
};

/// Applies the dataset's train statistics to every split.
LabeledDataset standardize(const LabeledDataset& dataset);

/// Reads `feature_0,...,feature_{F-1},emotion,speaker,split`. Label vocabularies
/// follow first appearance. Errors name the offending line.
LabeledDataset parse_csv(std::istream& in, const std::string& source = "<stream>");
LabeledDataset ingest_csv(const std::filesystem::path& path);

std::string to_csv(const LabeledDataset& dataset);
void export_csv(const LabeledDataset& dataset, const std::filesystem::path& path);

struct SynthConfig {
  std::size_t num_rows = 6000;
  std::size_t feature_dim = 64;
  std::size_t num_emotions = 5;
  std::size_t num_speakers = 40;
  std::size_t identity_dim = 8;
  std::size_t nuisance_dim = 8;
  double emotion_strength = 2.0;
  double identity_strength = 1.0;
  /// Weight of the speaker term mixed into the emotion factor, in [0, 1].
  double cross_leak = 0.5;
  double noise_std = 0.1;
  /// Empty selects the defaults from default_emotion_priors().
  std::vector<double> emotion_priors;
  double dev_fraction = 0.15;
  double test_fraction = 0.15;
  std::uint64_t seed = 0;

  void validate() const;
};

/// 53.05/27.10/8.81/7.09/3.95 percent for five classes, uniform otherwise.
std::vector<double> default_emotion_priors(std::size_t num_emotions);
std::vector<std::string> default_emotion_names(std::size_t num_emotions);

/// Generator output together with the latent factors behind each row.
struct SyntheticDraw {
  LabeledDataset dataset;
  Tensor emotion_factors;        // [N x E], includes the cross-leak term
  Tensor identity_factors;       // [N x identity_dim]
  Tensor mixing;                 // [F x (E + identity_dim + nuisance_dim)]
  Tensor emotion_only_features;  // tanh(mixing * [emotion_factors; 0; 0]), no noise
};

SyntheticDraw generate_synthetic_draw(const SynthConfig& config);
LabeledDataset generate_synthetic(const SynthConfig& config);

}  // namespace lrvae
