#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "lrvae/dataset.hpp"
#include "lrvae/errors.hpp"
#include "lrvae/rng.hpp"

namespace lrvae {

void SynthConfig::validate() const {
  if (num_rows == 0 || feature_dim == 0 || identity_dim == 0) {
    throw ValidationError("synthetic sizes must be positive");
  }
  if (num_emotions < 2) throw ValidationError("synthetic data needs at least 2 emotions");
  if (num_speakers < 3) {
    throw ValidationError("synthetic data needs at least 3 speakers to form disjoint train/dev/test splits, got " +
                          std::to_string(num_speakers));
  }
  if (!(emotion_strength > 0.0) || !(identity_strength > 0.0)) {
    throw ValidationError("emotion_strength and identity_strength must be positive");
  }
  if (!(cross_leak >= 0.0 && cross_leak <= 1.0)) throw ValidationError("cross_leak must lie in [0, 1]");
  if (!(noise_std >= 0.0)) throw ValidationError("noise_std must be nonnegative");
  if (!emotion_priors.empty()) {
    if (emotion_priors.size() != num_emotions) {
      throw ValidationError("emotion_priors has " + std::to_string(emotion_priors.size()) + " entries for " +
                            std::to_string(num_emotions) + " emotions");
    }
    for (double p : emotion_priors) {
      if (!(p > 0.0)) throw ValidationError("emotion priors must be positive");
    }
  }
  if (!(dev_fraction > 0.0 && test_fraction > 0.0 && dev_fraction + test_fraction < 1.0)) {
    throw ValidationError("dev_fraction and test_fraction must be positive and sum below 1");
  }
}

std::vector<double> default_emotion_priors(std::size_t num_emotions) {
  if (num_emotions == 5) return {0.5305, 0.2710, 0.0881, 0.0709, 0.0395};
  return std::vector<double>(num_emotions, 1.0 / static_cast<double>(num_emotions));
}

std::vector<std::string> default_emotion_names(std::size_t num_emotions) {
  if (num_emotions == 5) return {"neutral", "happy", "angry", "disgust", "sad"};
  std::vector<std::string> names;
  for (std::size_t e = 0; e < num_emotions; ++e) names.push_back("emo" + std::to_string(e));
  return names;
}

SyntheticDraw generate_synthetic_draw(const SynthConfig& config) {
  config.validate();
  const std::size_t n = config.num_rows;
  const std::size_t e_dim = config.num_emotions;
  const std::size_t s_dim = config.identity_dim;
  const std::size_t n_dim = config.nuisance_dim;
  const std::size_t k = e_dim + s_dim + n_dim;
  const std::size_t f = config.feature_dim;

  Rng rng = make_rng(config.seed, "synthetic");
  std::normal_distribution<double> normal(0.0, 1.0);

  Tensor speaker_embed = Tensor::zeros({config.num_speakers, s_dim});
  for (double& v : speaker_embed.values()) v = normal(rng);
  // Projects a speaker embedding into the emotion-factor space.
  Tensor leak = Tensor::zeros({e_dim, s_dim});
  const double leak_scale = 1.0 / std::sqrt(static_cast<double>(s_dim));
  for (double& v : leak.values()) v = normal(rng) * leak_scale;
  Tensor mixing = Tensor::zeros({f, k});
  const double mix_scale = 1.0 / std::sqrt(static_cast<double>(s_dim + 1));
  for (double& v : mixing.values()) v = normal(rng) * mix_scale;

  // Speaker-disjoint split assignment.
  std::vector<std::size_t> order(config.num_speakers);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto s_total = static_cast<double>(config.num_speakers);
  const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(s_total * config.test_fraction)));
  const auto n_dev = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(s_total * config.dev_fraction)));
  if (n_test + n_dev >= config.num_speakers) {
    throw ValidationError("split fractions leave no training speakers");
  }
  std::vector<Split> speaker_split(config.num_speakers, Split::kTrain);
  for (std::size_t i = 0; i < n_test; ++i) speaker_split[order[i]] = Split::kTest;
  for (std::size_t i = n_test; i < n_test + n_dev; ++i) speaker_split[order[i]] = Split::kDev;

  const std::vector<double> priors =
      config.emotion_priors.empty() ? default_emotion_priors(e_dim) : config.emotion_priors;
  std::discrete_distribution<int> emotion_dist(priors.begin(), priors.end());
  std::uniform_int_distribution<int> speaker_dist(0, static_cast<int>(config.num_speakers) - 1);

  SyntheticDraw draw;
  LabeledDataset& ds = draw.dataset;
  ds.emotion_names = default_emotion_names(e_dim);
  for (std::size_t s = 0; s < config.num_speakers; ++s) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "spk%03zu", s);
    ds.speaker_names.emplace_back(buf);
  }
  ds.features = Tensor::zeros({n, f});
  draw.emotion_factors = Tensor::zeros({n, e_dim});
  draw.identity_factors = Tensor::zeros({n, s_dim});
  draw.emotion_only_features = Tensor::zeros({n, f});
  draw.mixing = mixing;

  std::vector<double> factors(k);
  for (std::size_t r = 0; r < n; ++r) {
    const int emo = emotion_dist(rng);
    const int spk = speaker_dist(rng);
    ds.emotion.push_back(emo);
    ds.speaker.push_back(spk);
    ds.split.push_back(speaker_split[static_cast<std::size_t>(spk)]);

    const auto s_row = speaker_embed.row(static_cast<std::size_t>(spk));
    for (std::size_t i = 0; i < e_dim; ++i) {
      double v = i == static_cast<std::size_t>(emo) ? config.emotion_strength : 0.0;
      double coupled = 0.0;
      for (std::size_t j = 0; j < s_dim; ++j) coupled += leak(i, j) * s_row[j];
      v += config.cross_leak * config.identity_strength * coupled;
      factors[i] = v;
      draw.emotion_factors(r, i) = v;
    }
    for (std::size_t j = 0; j < s_dim; ++j) {
      factors[e_dim + j] = config.identity_strength * s_row[j];
      draw.identity_factors(r, j) = factors[e_dim + j];
    }
    for (std::size_t j = 0; j < n_dim; ++j) factors[e_dim + s_dim + j] = normal(rng);

    for (std::size_t c = 0; c < f; ++c) {
      double full = 0.0;
      double emotion_only = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double term = mixing(c, j) * factors[j];
        full += term;
        if (j < e_dim) emotion_only += term;
      }
      ds.features(r, c) = std::tanh(full);
      draw.emotion_only_features(r, c) = std::tanh(emotion_only);
    }
    if (config.noise_std > 0.0) {
      for (std::size_t c = 0; c < f; ++c) ds.features(r, c) += config.noise_std * normal(rng);
    }
  }
  try {
    ds.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("synthetic draw violates dataset invariants (try more rows): ") + e.what());
  }
  ds.fit_statistics();
  return draw;
}

LabeledDataset generate_synthetic(const SynthConfig& config) { return generate_synthetic_draw(config).dataset; }

}  // namespace lrvae
