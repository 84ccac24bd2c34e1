#include "lrvae/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lrvae/adam.hpp"
#include "lrvae/errors.hpp"
#include "lrvae/metrics.hpp"
#include "lrvae/rng.hpp"

namespace lrvae {
namespace {

void check_finite(const LossBreakdown& b, std::size_t epoch, std::size_t step) {
  const std::pair<const char*, double> terms[] = {
      {"l_recon", b.l_recon}, {"l_kl", b.l_kl},           {"l_emo", b.l_emo}, {"l_id", b.l_id},
      {"l_emo_adv", b.l_emo_adv}, {"l_id_adv", b.l_id_adv}, {"l_reg", b.l_reg}, {"l_total", b.l_total}};
  for (const auto& [name, v] : terms) {
    if (!std::isfinite(v)) {
      throw NumericalError("non-finite " + std::string(name) + " at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step));
    }
  }
}

void accumulate(LossBreakdown& acc, const LossBreakdown& b, double w) {
  acc.l_vae += w * b.l_vae;
  acc.l_recon += w * b.l_recon;
  acc.l_kl += w * b.l_kl;
  acc.l_emo += w * b.l_emo;
  acc.l_id += w * b.l_id;
  acc.l_emo_adv += w * b.l_emo_adv;
  acc.l_id_adv += w * b.l_id_adv;
  acc.l_reg += w * b.l_reg;
  acc.l_total += w * b.l_total;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (batch_size == 0) throw ValidationError("batch_size must be at least 1");
  if (patience == 0) throw ValidationError("patience must be at least 1");
  if (!(weight_regularization >= 0.0)) throw ValidationError("weight_regularization must be nonnegative");
}

double selection_criterion(const DevMetrics& m, Variant variant) {
  const VariantTraits t = traits_of(variant);
  auto need = [&](const std::optional<double>& v, const char* name) {
    if (!v) throw ValidationError(std::string("selection criterion for ") + to_string(variant) + " needs " + name);
    return *v;
  };
  double score = 0.0;
  if (t.emotion_head) score += need(m.emotion_wfs, "emotion_wfs");
  if (t.identity_head) score += need(m.identity_accuracy, "identity_accuracy");
  return score;
}

ModelConfig model_config_for(const LabeledDataset& dataset, Variant variant, const ModelConfig& base) {
  ModelConfig c = base;
  c.variant = variant;
  c.feature_dim = dataset.feature_dim();
  c.num_emotions = dataset.num_emotions();
  c.num_speakers = dataset.speakers_in(Split::kTrain).size();
  return c;
}

DevMetrics evaluate_dev(const LrVaeModel& model, const LabeledDataset& standardized, std::size_t dev_trials,
                        std::uint64_t trial_seed) {
  const VariantTraits t = traits_of(model.config.variant);
  const auto rows = standardized.rows_in(Split::kDev);
  const Inference out = infer(model, standardized.features.gather_rows(rows));
  DevMetrics m;
  if (t.emotion_head) {
    std::vector<int> labels;
    for (std::size_t r : rows) labels.push_back(standardized.emotion[r]);
    m.emotion_wfs = weighted_f_score(argmax_rows(*out.emotion_logits), labels, model.config.num_emotions);
  }
  if (t.identity_head) {
    std::vector<int> speakers;
    for (std::size_t r : rows) speakers.push_back(standardized.speaker[r]);
    const auto pairs = sample_trial_pairs(speakers, dev_trials, trial_seed);
    m.identity_accuracy = 1.0 - equal_error_rate(score_trials(out.mu, pairs)).eer;
  }
  return m;
}

TrainResult train(LrVaeModel model, const LabeledDataset& dataset, const TrainConfig& config) {
  config.validate();
  if (config.variant != model.config.variant) {
    throw ValidationError("train config variant " + to_string(config.variant) + " does not match model variant " +
                          to_string(model.config.variant));
  }
  dataset.validate();
  if (dataset.stats.empty()) throw ContractError("train: dataset has no fitted statistics");
  if (dataset.feature_dim() != model.config.feature_dim) {
    throw DimensionError("dataset has " + std::to_string(dataset.feature_dim()) + " features, model expects " +
                         std::to_string(model.config.feature_dim));
  }

  const LabeledDataset data = standardize(dataset);
  const auto train_rows = data.rows_in(Split::kTrain);
  const auto train_speakers = data.speakers_in(Split::kTrain);
  if (train_speakers.size() != model.config.num_speakers) {
    throw ValidationError("model identity head has " + std::to_string(model.config.num_speakers) +
                          " classes but the train split has " + std::to_string(train_speakers.size()) + " speakers");
  }
  std::vector<int> speaker_to_head(data.num_speakers(), -1);
  model.metadata.speaker_names.clear();
  for (std::size_t i = 0; i < train_speakers.size(); ++i) {
    speaker_to_head[static_cast<std::size_t>(train_speakers[i])] = static_cast<int>(i);
    model.metadata.speaker_names.push_back(data.speaker_names[static_cast<std::size_t>(train_speakers[i])]);
  }
  model.metadata.emotion_names = data.emotion_names;
  model.metadata.input_stats = dataset.stats;
  model.metadata.train_seed = config.seed;

  TrainResult result{model, {}, 0, 0};
  if (config.max_epochs == 0) return result;

  Rng shuffle_rng = make_rng(config.seed, "shuffle");
  Rng noise_rng = make_rng(config.seed, "noise");
  const std::uint64_t trial_seed = derive_seed(config.seed, "dev-trials");
  const LossOptions loss_options{config.weight_regularization};
  auto params = model.parameters();
  AdamState adam;

  double best = selection_criterion(evaluate_dev(model, data, config.dev_trials, trial_seed), config.variant);
  std::size_t since_best = 0;
  std::vector<std::size_t> order = train_rows;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    LossBreakdown sums;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      Batch batch{data.features.gather_rows(idx), {}, {}};
      for (std::size_t r : idx) {
        batch.emotion.push_back(data.emotion[r]);
        batch.speaker.push_back(speaker_to_head[static_cast<std::size_t>(data.speaker[r])]);
      }
      ad::Graph g;
      const LossGraph losses = build_losses(g, model, batch, noise_rng, Mode::kTrain, loss_options);
      const LossBreakdown values = losses.values();
      check_finite(values, epoch, result.optimizer_steps + 1);
      accumulate(sums, values, static_cast<double>(idx.size()));
      adam_step(params, g.backward(losses.total), adam, config.learning_rate);
      ++result.optimizer_steps;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    accumulate(rec.losses, sums, 1.0 / static_cast<double>(order.size()));
    rec.dev = evaluate_dev(model, data, config.dev_trials, trial_seed);
    rec.criterion = selection_criterion(rec.dev, config.variant);
    result.log.push_back(rec);

    // Strict improvement: ties keep the earlier epoch.
    if (rec.criterion > best) {
      best = rec.criterion;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  for (auto& rec : result.log) rec.selected = rec.epoch == result.best_epoch;
  return result;
}

TrainResult train(const LabeledDataset& dataset, const TrainConfig& config, const ModelConfig& model_base) {
  const ModelConfig mc = model_config_for(dataset, config.variant, model_base);
  return train(LrVaeModel::initialize(mc, derive_seed(config.seed, "model")), dataset, config);
}

nlohmann::json to_json(const LossBreakdown& b) {
  return {{"l_vae", b.l_vae},     {"l_recon", b.l_recon},   {"l_kl", b.l_kl},   {"l_emo", b.l_emo},
          {"l_id", b.l_id},       {"l_emo_adv", b.l_emo_adv}, {"l_id_adv", b.l_id_adv}, {"l_reg", b.l_reg},
          {"l_total", b.l_total}};
}

nlohmann::json to_json(const EpochRecord& r) {
  nlohmann::json dev = nlohmann::json::object();
  if (r.dev.emotion_wfs) dev["emotion_wfs"] = *r.dev.emotion_wfs;
  if (r.dev.identity_accuracy) dev["identity_accuracy"] = *r.dev.identity_accuracy;
  return {{"epoch", r.epoch}, {"losses", to_json(r.losses)}, {"dev", dev}, {"criterion", r.criterion},
          {"selected", r.selected}};
}

std::string training_log_jsonl(const std::vector<EpochRecord>& log) {
  std::string out;
  for (const auto& r : log) out += to_json(r).dump() + "\n";
  return out;
}

}  // namespace lrvae
