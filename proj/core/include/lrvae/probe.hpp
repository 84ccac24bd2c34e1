#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrvae/metrics.hpp"
#include "lrvae/model.hpp"

namespace lrvae {

enum class ProbeTask : std::uint8_t { kEmotion, kSpeaker };

std::string to_string(ProbeTask t);

struct ProbeConfig {
  std::size_t hidden = 64;
  std::size_t max_epochs = 20;
  std::size_t patience = 5;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  double weight_regularization = 1e-6;
  std::size_t max_trials = 20000;
  std::uint64_t seed = 0;
  /// Seeds dev/test trial lists; kept apart from `seed` so trials stay fixed across probes.
  std::uint64_t trial_seed = 0;
};

/// Frozen latents with labels for one split.
struct ProbeSplit {
  Tensor latents;
  std::vector<int> labels;  // emotion classes, or dataset speaker ids
};

struct ProbeInput {
  ProbeSplit train;
  ProbeSplit dev;
  ProbeSplit test;
  std::size_t num_emotions = 0;
};

struct ProbeResult {
  Mlp probe;
  MetricReport report;    // test split; WFS for emotion probes, EER for speaker probes
  double dev_metric = 0;  // WFS or EER on dev at the selected epoch
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

/// Trains a one-hidden-layer classifier on frozen latents and scores it on the test split.
/// Speaker probes classify train speakers; their hidden-layer embeddings are scored by
/// cosine EER on dev (selection) and test (report) trials.
ProbeResult train_probe(const ProbeInput& input, ProbeTask task, const ProbeConfig& config);

/// Hidden-layer activations of a probe.
Tensor probe_embeddings(const Mlp& probe, const Tensor& latents);
std::vector<int> probe_predictions(const Mlp& probe, const Tensor& latents);

}  // namespace lrvae
