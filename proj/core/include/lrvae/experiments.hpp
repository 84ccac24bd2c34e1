#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrvae/dataset.hpp"
#include "lrvae/metrics.hpp"
#include "lrvae/model.hpp"
#include "lrvae/probe.hpp"
#include "lrvae/training.hpp"

namespace lrvae {

enum class Condition : std::uint8_t { kOrigin, kPpSer, kPpSv };

std::string to_string(Condition c);

/// Conditions reported for a variant: maskable latents get all three, A-VAE models
/// stand for the one protected setting they were trained for, the rest only origin.
std::vector<Condition> conditions_for(Variant v);

struct ExperimentConfig {
  TrainConfig train;  // variant and seed are set per run
  ModelConfig model;  // shape template; data-dependent sizes are filled in
  ProbeConfig probe;  // seed is set per run
  double cut = 0.5;
};

/// Frozen latents of a trained model, split for probing.
ProbeInput probe_input(const Tensor& latents, const LabeledDataset& dataset);

/// Emotion probe WFS plus speaker probe EER on one latent view.
MetricReport probe_report(const Tensor& latents, const LabeledDataset& dataset, const ProbeConfig& config);

struct ComparisonCell {
  Variant variant = Variant::kLrVae;
  Condition condition = Condition::kOrigin;
  std::vector<MetricReport> per_seed;
  double wfs_mean = 0.0, wfs_std = 0.0;
  double eer_mean = 0.0, eer_std = 0.0;
  std::uint64_t split_hash = 0;
  std::uint64_t trial_hash = 0;
};

/// Training cost of one variant, summed over seeds.
struct VariantLedger {
  Variant variant = Variant::kLrVae;
  std::size_t training_runs_per_seed = 1;
  std::size_t parameter_count = 0;
  std::size_t optimizer_steps = 0;
  std::vector<std::size_t> best_epochs;
  std::vector<Condition> conditions;
  double wall_seconds = 0.0;  // reported separately from the deterministic table
};

struct ComparisonResult {
  std::vector<ComparisonCell> cells;
  std::vector<VariantLedger> ledger;
  std::vector<std::uint64_t> seeds;
  std::uint64_t split_hash = 0;
  nlohmann::json config;

  const ComparisonCell& cell(Variant v, Condition c) const;
  const VariantLedger& cost(Variant v) const;
};

/// Trains every variant once per seed on the same splits and probes each condition.
ComparisonResult run_comparison(const LabeledDataset& dataset, std::span<const Variant> variants,
                                std::span<const std::uint64_t> seeds, const ExperimentConfig& config);

/// Deterministic result table (no wall-clock values).
nlohmann::json to_json(const ComparisonResult& result);
nlohmann::json timing_json(const ComparisonResult& result);

enum class MaskDirection : std::uint8_t { kBottomUp, kTopDown };

std::string to_string(MaskDirection d);
MaskDirection parse_mask_direction(const std::string& s);

/// Keeps everything except the first `groups_masked` groups counted from the
/// bottom (identity end) or the top (emotion end).
AttributeMask group_mask(std::size_t latent_dim, std::size_t group_count, std::size_t groups_masked,
                         MaskDirection direction);

struct CurveStep {
  std::size_t groups_masked = 0;
  double wfs = 0.0;
  double eer = 0.0;

  friend bool operator==(const CurveStep&, const CurveStep&) = default;
};

struct MaskingCurve {
  std::size_t group_count = 32;
  std::size_t latent_dim = 0;
  MaskDirection direction = MaskDirection::kBottomUp;
  std::vector<CurveStep> steps;  // groups_masked = 0 .. group_count
};

/// Masks one more group per step and retrains fresh emotion and speaker probes.
MaskingCurve run_masking_curve(const LrVaeModel& model, const LabeledDataset& dataset, std::size_t group_count,
                               MaskDirection direction, const ProbeConfig& config);

std::string curve_csv(const MaskingCurve& curve);
MaskingCurve parse_curve_csv(const std::string& text);
std::string curve_svg(const MaskingCurve& curve);

/// Writes <stem>.csv and <stem>.svg into `directory`.
void emit_curve_artifacts(const MaskingCurve& curve, const std::filesystem::path& directory,
                          const std::string& stem = "curve");

}  // namespace lrvae
