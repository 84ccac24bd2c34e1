#include "lrvae/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "lrvae/errors.hpp"
#include "lrvae/rng.hpp"

namespace lrvae {
namespace {

ProbeSplit split_of(const Tensor& latents, const LabeledDataset& ds, Split s, bool speakers) {
  const auto rows = ds.rows_in(s);
  ProbeSplit out{latents.gather_rows(rows), {}};
  for (std::size_t r : rows) out.labels.push_back(speakers ? ds.speaker[r] : ds.emotion[r]);
  return out;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

AttributeMask mask_for(Condition c, Variant v, std::size_t latent_dim, double cut) {
  // A-VAE latents are already the protected representation.
  if (c == Condition::kOrigin || !traits_of(v).layered_dropout) return AttributeMask::keep_all(latent_dim);
  return make_attribute_mask(latent_dim, c == Condition::kPpSer ? MaskPurpose::kPpSer : MaskPurpose::kPpSv, cut);
}

}  // namespace

std::string to_string(Condition c) {
  switch (c) {
    case Condition::kOrigin: return "origin";
    case Condition::kPpSer: return "pp_ser";
    case Condition::kPpSv: return "pp_sv";
  }
  return "unknown";
}

std::vector<Condition> conditions_for(Variant v) {
  switch (v) {
    case Variant::kDnn:
    case Variant::kVae: return {Condition::kOrigin};
    case Variant::kAVaeSer: return {Condition::kPpSer};
    case Variant::kAVaeSv: return {Condition::kPpSv};
    case Variant::kLrVaeNoAdv:
    case Variant::kLrVae: return {Condition::kOrigin, Condition::kPpSer, Condition::kPpSv};
  }
  return {};
}

ProbeInput probe_input(const Tensor& latents, const LabeledDataset& dataset) {
  ProbeInput in;
  in.num_emotions = dataset.num_emotions();
  in.train = split_of(latents, dataset, Split::kTrain, false);
  in.dev = split_of(latents, dataset, Split::kDev, false);
  in.test = split_of(latents, dataset, Split::kTest, false);
  return in;
}

MetricReport probe_report(const Tensor& latents, const LabeledDataset& dataset, const ProbeConfig& config) {
  ProbeInput emotion = probe_input(latents, dataset);
  ProbeInput speaker;
  speaker.num_emotions = dataset.num_emotions();
  speaker.train = split_of(latents, dataset, Split::kTrain, true);
  speaker.dev = split_of(latents, dataset, Split::kDev, true);
  speaker.test = split_of(latents, dataset, Split::kTest, true);

  ProbeConfig emo_cfg = config;
  emo_cfg.seed = derive_seed(config.seed, "emotion-probe");
  ProbeConfig spk_cfg = config;
  spk_cfg.seed = derive_seed(config.seed, "speaker-probe");
  const ProbeResult e = train_probe(emotion, ProbeTask::kEmotion, emo_cfg);
  const ProbeResult s = train_probe(speaker, ProbeTask::kSpeaker, spk_cfg);
  MetricReport r = e.report;
  r.eer = s.report.eer;
  r.eer_threshold = s.report.eer_threshold;
  r.trial_count = s.report.trial_count;
  return r;
}

const ComparisonCell& ComparisonResult::cell(Variant v, Condition c) const {
  for (const auto& cell : cells) {
    if (cell.variant == v && cell.condition == c) return cell;
  }
  throw ValidationError("no comparison cell for " + to_string(v) + "/" + to_string(c));
}

const VariantLedger& ComparisonResult::cost(Variant v) const {
  for (const auto& l : ledger) {
    if (l.variant == v) return l;
  }
  throw ValidationError("no ledger entry for " + to_string(v));
}

ComparisonResult run_comparison(const LabeledDataset& dataset, std::span<const Variant> variants,
                                std::span<const std::uint64_t> seeds, const ExperimentConfig& config) {
  if (seeds.empty()) throw ValidationError("comparison needs at least one seed");
  if (variants.empty()) throw ValidationError("comparison needs at least one variant");
  dataset.validate();

  ComparisonResult result;
  result.seeds.assign(seeds.begin(), seeds.end());
  result.split_hash = dataset.split_fingerprint();
  const auto test_rows = dataset.rows_in(Split::kTest);
  std::vector<int> test_speakers;
  for (std::size_t r : test_rows) test_speakers.push_back(dataset.speaker[r]);
  const std::uint64_t trial_hash = trial_fingerprint(sample_trial_pairs(
      test_speakers, config.probe.max_trials, derive_seed(config.probe.trial_seed, "test")));

  for (Variant v : variants) {
    VariantLedger ledger;
    ledger.variant = v;
    ledger.conditions = conditions_for(v);
    std::vector<ComparisonCell> cells;
    for (Condition c : ledger.conditions) {
      cells.push_back({.variant = v, .condition = c, .split_hash = result.split_hash, .trial_hash = trial_hash});
    }
    for (std::uint64_t seed : seeds) {
      TrainConfig tc = config.train;
      tc.variant = v;
      tc.seed = seed;
      const auto start = std::chrono::steady_clock::now();
      const TrainResult trained = train(dataset, tc, config.model);
      ledger.wall_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      ledger.parameter_count = trained.model.parameter_count();
      ledger.optimizer_steps += trained.optimizer_steps;
      ledger.best_epochs.push_back(trained.best_epoch);

      const Tensor latents = embed(trained.model, dataset.features);
      ProbeConfig pc = config.probe;
      pc.seed = derive_seed(seed, "probe");
      for (auto& cell : cells) {
        const AttributeMask mask = mask_for(cell.condition, v, trained.model.config.latent_dim, config.cut);
        cell.per_seed.push_back(probe_report(mask_latent(latents, mask), dataset, pc));
      }
    }
    for (auto& cell : cells) {
      std::vector<double> wfs, eer;
      for (const auto& r : cell.per_seed) {
        wfs.push_back(r.weighted_f_score);
        eer.push_back(r.eer);
      }
      std::tie(cell.wfs_mean, cell.wfs_std) = mean_std(wfs);
      std::tie(cell.eer_mean, cell.eer_std) = mean_std(eer);
      result.cells.push_back(std::move(cell));
    }
    result.ledger.push_back(std::move(ledger));
  }

  result.config = {{"variants", [&] {
                      std::vector<std::string> names;
                      for (Variant v : variants) names.push_back(to_string(v));
                      return names;
                    }()},
                   {"seeds", result.seeds},
                   {"cut", config.cut},
                   {"train",
                    {{"learning_rate", config.train.learning_rate},
                     {"batch_size", config.train.batch_size},
                     {"weight_regularization", config.train.weight_regularization},
                     {"max_epochs", config.train.max_epochs},
                     {"patience", config.train.patience},
                     {"selection", "dev emotion WFS + dev (1 - EER), per-variant heads"}}},
                   {"probe",
                    {{"hidden", config.probe.hidden},
                     {"max_epochs", config.probe.max_epochs},
                     {"patience", config.probe.patience},
                     {"learning_rate", config.probe.learning_rate},
                     {"max_trials", config.probe.max_trials},
                     {"trial_seed", config.probe.trial_seed}}}};
  return result;
}

nlohmann::json to_json(const ComparisonResult& result) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : result.cells) {
    nlohmann::json per_seed = nlohmann::json::array();
    for (std::size_t i = 0; i < c.per_seed.size(); ++i) {
      per_seed.push_back({{"seed", result.seeds[i]},
                          {"weighted_f_score", c.per_seed[i].weighted_f_score},
                          {"eer", c.per_seed[i].eer}});
    }
    cells.push_back({{"variant", to_string(c.variant)},
                     {"condition", to_string(c.condition)},
                     {"wfs", {{"mean", c.wfs_mean}, {"std", c.wfs_std}}},
                     {"eer", {{"mean", c.eer_mean}, {"std", c.eer_std}}},
                     {"per_seed", std::move(per_seed)},
                     {"split_hash", c.split_hash},
                     {"trial_hash", c.trial_hash}});
  }
  nlohmann::json ledger = nlohmann::json::array();
  for (const auto& l : result.ledger) {
    std::vector<std::string> conds;
    for (Condition c : l.conditions) conds.push_back(to_string(c));
    ledger.push_back({{"variant", to_string(l.variant)},
                      {"training_runs_per_seed", l.training_runs_per_seed},
                      {"parameter_count", l.parameter_count},
                      {"optimizer_steps", l.optimizer_steps},
                      {"best_epochs", l.best_epochs},
                      {"conditions", conds}});
  }
  // Training runs (and parameters) each family spent to serve both protected settings,
  // counted from the runs actually performed.
  nlohmann::json coverage = nlohmann::json::object();
  auto family = [&](const char* name, std::initializer_list<Variant> members) {
    std::size_t runs = 0, models = 0, params = 0, steps = 0;
    bool ser = false, sv = false;
    for (Variant v : members) {
      const auto it = std::find_if(result.ledger.begin(), result.ledger.end(),
                                   [&](const auto& l) { return l.variant == v; });
      if (it == result.ledger.end()) continue;
      runs += it->best_epochs.size() / std::max<std::size_t>(1, result.seeds.size());
      models += it->training_runs_per_seed;
      params += it->parameter_count;
      steps += it->optimizer_steps;
      for (Condition c : it->conditions) {
        ser = ser || c == Condition::kPpSer;
        sv = sv || c == Condition::kPpSv;
      }
    }
    if (ser && sv) {
      coverage[name] = {{"training_runs", runs}, {"models", models}, {"parameter_count", params},
                        {"optimizer_steps", steps}};
    }
  };
  family("lr_vae", {Variant::kLrVae});
  family("a_vae", {Variant::kAVaeSer, Variant::kAVaeSv});
  return {{"format", "lrvae-comparison"},
          {"format_version", 1},
          {"split_hash", result.split_hash},
          {"config", result.config},
          {"cells", std::move(cells)},
          {"ledger", std::move(ledger)},
          {"coverage_pp_ser_and_pp_sv", std::move(coverage)}};
}

nlohmann::json timing_json(const ComparisonResult& result) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& l : result.ledger) out[to_string(l.variant)] = {{"wall_seconds", l.wall_seconds}};
  return out;
}

std::string to_string(MaskDirection d) { return d == MaskDirection::kBottomUp ? "bottom_up" : "top_down"; }

MaskDirection parse_mask_direction(const std::string& s) {
  if (s == "bottom_up") return MaskDirection::kBottomUp;
  if (s == "top_down") return MaskDirection::kTopDown;
  throw ValidationError("unknown mask direction '" + s + "' (expected bottom_up|top_down)");
}

AttributeMask group_mask(std::size_t latent_dim, std::size_t group_count, std::size_t groups_masked,
                         MaskDirection direction) {
  if (group_count == 0 || latent_dim % group_count != 0) {
    throw ValidationError("group count " + std::to_string(group_count) + " does not divide latent dimension " +
                          std::to_string(latent_dim));
  }
  if (groups_masked > group_count) throw ValidationError("cannot mask more groups than exist");
  const std::size_t masked = groups_masked * (latent_dim / group_count);
  AttributeMask mask = AttributeMask::keep_all(latent_dim);
  for (std::size_t i = 0; i < masked; ++i) {
    mask.keep[direction == MaskDirection::kBottomUp ? latent_dim - 1 - i : i] = 0;
  }
  return mask;
}

MaskingCurve run_masking_curve(const LrVaeModel& model, const LabeledDataset& dataset, std::size_t group_count,
                               MaskDirection direction, const ProbeConfig& config) {
  const std::size_t d = model.config.latent_dim;
  (void)group_mask(d, group_count, 0, direction);
  dataset.validate();
  MaskingCurve curve{group_count, d, direction, {}};
  const Tensor latents = embed(model, dataset.features);
  for (std::size_t k = 0; k <= group_count; ++k) {
    const MetricReport r = probe_report(mask_latent(latents, group_mask(d, group_count, k, direction)), dataset, config);
    curve.steps.push_back({k, r.weighted_f_score, r.eer});
  }
  return curve;
}

}  // namespace lrvae
