#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lrvae/autodiff.hpp"
#include "lrvae/rng.hpp"
#include "lrvae/schedule.hpp"
#include "lrvae/standardization.hpp"
#include "lrvae/tensor.hpp"

namespace lrvae {

/// The model families compared in the experiments.
enum class Variant : std::uint8_t { kDnn, kVae, kAVaeSer, kAVaeSv, kLrVaeNoAdv, kLrVae };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);
std::span<const Variant> all_variants();
std::string variant_list();

/// Which pieces a variant switches on.
struct VariantTraits {
  bool stochastic = true;  // Gaussian posterior, decoder and KL term
  bool emotion_head = true;
  bool identity_head = true;
  bool emotion_adversary = false;
  bool identity_adversary = false;
  bool layered_dropout = false;
};

VariantTraits traits_of(Variant v);

/// How adversary heads attach to the latent. kPassThrough exists for gradient tests.
enum class AdversaryCoupling : std::uint8_t { kReversal, kPassThrough };

struct ModelConfig {
  Variant variant = Variant::kLrVae;
  std::size_t feature_dim = 0;
  std::size_t latent_dim = 128;
  std::vector<std::size_t> encoder_hidden{256, 128};
  std::size_t head_hidden = 64;
  std::size_t num_emotions = 0;
  std::size_t num_speakers = 0;
  double p_max = 0.95;
  double p_min = 0.05;
  ScheduleForm schedule_form = ScheduleForm::kLinear;
  double emotion_adversary_lambda = 1.0;
  double identity_adversary_lambda = 1.0;
  AdversaryCoupling coupling = AdversaryCoupling::kReversal;

  void validate() const;
};

struct DenseLayer {
  ad::Parameter weight;
  ad::Parameter bias;
};

/// Dense layers with ReLU between them and a linear output.
struct Mlp {
  std::vector<DenseLayer> layers;

  /// Layers dims[0] -> dims[1] -> ...; weights uniform in +-sqrt(6 / fan_in), zero biases.
  static Mlp create(const std::string& name, const std::vector<std::size_t>& dims, Rng& rng);

  bool empty() const noexcept { return layers.empty(); }
  ad::Var forward(ad::Graph& g, ad::Var x) const;
  /// Output of the last hidden (post-ReLU) layer.
  ad::Var penultimate(ad::Graph& g, ad::Var x) const;
};

/// Labels and provenance carried with a trained model.
struct ModelMetadata {
  std::vector<std::string> emotion_names;
  std::vector<std::string> speaker_names;  // train-split speakers, head index order
  Standardization input_stats;
  std::uint64_t init_seed = 0;
  std::uint64_t train_seed = 0;
};

/// Gaussian encoder, decoder, two task heads and two adversary heads.
/// Pieces a variant does not use are left empty.
struct LrVaeModel {
  ModelConfig config;
  Mlp encoder;  // feature_dim -> hidden..., ReLU after each layer
  DenseLayer mean_layer;
  std::optional<DenseLayer> log_var_layer;
  Mlp decoder;
  Mlp emotion_head;
  Mlp identity_head;
  Mlp emotion_adversary;
  Mlp identity_adversary;
  PreserveRateSchedule emotion_schedule;
  PreserveRateSchedule identity_schedule;
  ModelMetadata metadata;

  /// He-uniform weights and zero biases; the posterior layers of stochastic variants use 0.1 of that range.
  static LrVaeModel initialize(const ModelConfig& config, std::uint64_t seed);

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  std::size_t parameter_count() const;
  void validate() const;
};

struct GaussianPosterior {
  Tensor mu;
  Tensor log_var;
};

struct PosteriorVars {
  ad::Var mu;
  ad::Var log_var;  // invalid for deterministic variants
};

enum class Mode : std::uint8_t { kTrain, kEval };

/// Posterior of already-standardized inputs.
PosteriorVars encode(ad::Graph& g, const LrVaeModel& model, ad::Var x);
GaussianPosterior encode(const LrVaeModel& model, const Tensor& x);

/// Posterior means of raw features, standardized with the model's stored statistics.
Tensor embed(const LrVaeModel& model, const Tensor& raw_features);

/// z = mu + exp(log_var / 2) * eps. No gradient reaches eps.
ad::Var reparameterize(const PosteriorVars& post, const Tensor& eps);
Tensor reparameterize(const GaussianPosterior& post, const Tensor& eps);

/// Batch mean of -1/2 * sum(1 + log_var - mu^2 - exp(log_var)).
double kl_divergence(const GaussianPosterior& post);
/// Mean squared error over all elements.
double reconstruction_loss(const Tensor& x, const Tensor& x_hat);

struct Batch {
  Tensor x;                   // standardized features
  std::vector<int> emotion;   // [0, num_emotions)
  std::vector<int> speaker;   // [0, num_speakers), train-speaker index
};

struct LossBreakdown {
  double l_vae = 0.0;
  double l_recon = 0.0;  // unit-variance Gaussian NLL: (feature_dim / 2) * reconstruction_loss
  double l_kl = 0.0;
  double l_emo = 0.0;
  double l_id = 0.0;
  double l_emo_adv = 0.0;
  double l_id_adv = 0.0;
  double l_reg = 0.0;
  double l_total = 0.0;

  double component_sum() const noexcept { return l_vae + l_emo + l_id + l_emo_adv + l_id_adv + l_reg; }
};

struct LossOptions {
  double weight_regularization = 1e-6;
};

/// Every loss term as a graph node. Terms a variant lacks are invalid Vars.
struct LossGraph {
  ad::Var recon, kl, vae, emo, id, emo_adv, id_adv, reg, total;

  LossBreakdown values() const;
};

LossGraph build_losses(ad::Graph& g, const LrVaeModel& model, const Batch& batch, Rng& rng, Mode mode,
                       const LossOptions& options = {});
LossBreakdown forward_losses(const LrVaeModel& model, const Batch& batch, Rng& rng, Mode mode,
                             const LossOptions& options = {});

/// Eval-mode head outputs for standardized inputs.
struct Inference {
  Tensor mu;
  std::optional<Tensor> emotion_logits;
  std::optional<Tensor> identity_logits;
};
Inference infer(const LrVaeModel& model, const Tensor& x);

enum class MaskPurpose : std::uint8_t { kPpSer, kPpSv };

std::string to_string(MaskPurpose p);
MaskPurpose parse_mask_purpose(const std::string& s);

/// Binary keep-selector over latent nodes.
struct AttributeMask {
  std::vector<std::uint8_t> keep;

  std::size_t size() const noexcept { return keep.size(); }
  std::size_t kept() const noexcept;
  static AttributeMask keep_all(std::size_t size);
};

/// pp_ser keeps the top ceil(cut * D) nodes; pp_sv keeps the bottom ceil(cut * D).
AttributeMask make_attribute_mask(std::size_t latent_dim, MaskPurpose purpose, double cut);
Tensor mask_latent(const Tensor& z, const AttributeMask& mask);

}  // namespace lrvae
