#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrvae/dataset.hpp"
#include "lrvae/model.hpp"

namespace lrvae {

struct TrainConfig {
  Variant variant = Variant::kLrVae;
  double learning_rate = 5e-4;
  std::size_t batch_size = 128;
  /// Coefficient of the sum-of-squares term in the loss; the optimizer applies no decay.
  double weight_regularization = 1e-6;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  /// Verification trials drawn from dev speakers for model selection.
  std::size_t dev_trials = 5000;

  void validate() const;
};

/// Dev-split measurements used for model selection.
struct DevMetrics {
  std::optional<double> emotion_wfs;
  /// 1 - EER of cosine-scored dev latents. Dev speakers are disjoint from
  /// the identity head's vocabulary, so verification is the only identity measure.
  std::optional<double> identity_accuracy;
};

/// Higher is better. lr_vae/lr_vae_no_adv/vae/dnn: WFS + identity; a_vae_ser: WFS; a_vae_sv: identity.
double selection_criterion(const DevMetrics& metrics, Variant variant);

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown losses;  // example-weighted means over the epoch
  DevMetrics dev;
  double criterion = 0.0;
  bool selected = false;
};

struct TrainResult {
  LrVaeModel model;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;  // 0 means the initialization was kept
  std::size_t optimizer_steps = 0;
};

/// Model shape for a dataset: feature, emotion and train-speaker counts filled in.
ModelConfig model_config_for(const LabeledDataset& dataset, Variant variant, const ModelConfig& base = {});

/// Mini-batch Adam on the combined objective with dev-based selection and early stopping.
/// `dataset` holds raw features; train statistics are applied and stored in the model.
TrainResult train(LrVaeModel model, const LabeledDataset& dataset, const TrainConfig& config);

/// Convenience: initialize from `model_base` (variant taken from config) and train.
TrainResult train(const LabeledDataset& dataset, const TrainConfig& config, const ModelConfig& model_base = {});

DevMetrics evaluate_dev(const LrVaeModel& model, const LabeledDataset& standardized, std::size_t dev_trials,
                        std::uint64_t trial_seed);

nlohmann::json to_json(const EpochRecord& record);
nlohmann::json to_json(const LossBreakdown& losses);
/// One JSON object per line.
std::string training_log_jsonl(const std::vector<EpochRecord>& log);

}  // namespace lrvae
