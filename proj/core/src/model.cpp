#include "lrvae/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "lrvae/errors.hpp"

namespace lrvae {
namespace {

constexpr std::array kVariants{Variant::kDnn,       Variant::kVae,        Variant::kAVaeSer,
                               Variant::kAVaeSv,    Variant::kLrVaeNoAdv, Variant::kLrVae};

// He-scale posterior outputs start with a per-sample KL that grows with D, which
// collapses the posterior within the first epoch at D >= 64. Starting near the prior avoids it.
constexpr double kPosteriorInitScale = 0.1;

DenseLayer make_layer(const std::string& name, std::size_t in, std::size_t out, Rng& rng, double scale = 1.0) {
  const double limit = scale * std::sqrt(6.0 / static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> w(in * out);
  for (double& v : w) v = dist(rng);
  return DenseLayer{{name + ".weight", Tensor({in, out}, std::move(w))},
                    {name + ".bias", Tensor::zeros({out})}};
}

ad::Var apply(ad::Graph& g, const DenseLayer& layer, ad::Var x) {
  return ad::dense(x, g.parameter(layer.weight), g.parameter(layer.bias));
}

void append_params(Mlp& mlp, std::vector<ad::Parameter*>& out) {
  for (auto& l : mlp.layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
}

ad::Var add_terms(std::initializer_list<ad::Var> terms) {
  ad::Var acc;
  for (ad::Var t : terms) {
    if (!t.valid()) continue;
    acc = acc.valid() ? ad::add(acc, t) : t;
  }
  return acc;
}

double value_or_zero(ad::Var v) { return v.valid() ? v.value().item() : 0.0; }

void check_labels(const std::vector<int>& labels, std::size_t rows, std::size_t classes, const char* what) {
  if (labels.size() != rows) {
    throw DimensionError(std::string(what) + " labels: " + std::to_string(labels.size()) + " for " +
                         std::to_string(rows) + " rows");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw IndexError(std::string(what) + " label " + std::to_string(labels[i]) + " at row " +
                       std::to_string(i) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kDnn: return "dnn";
    case Variant::kVae: return "vae";
    case Variant::kAVaeSer: return "a_vae_ser";
    case Variant::kAVaeSv: return "a_vae_sv";
    case Variant::kLrVaeNoAdv: return "lr_vae_no_adv";
    case Variant::kLrVae: return "lr_vae";
  }
  return "unknown";
}

std::span<const Variant> all_variants() { return kVariants; }

std::string variant_list() {
  std::string out;
  for (Variant v : kVariants) {
    if (!out.empty()) out += ", ";
    out += to_string(v);
  }
  return out;
}

Variant parse_variant(const std::string& name) {
  for (Variant v : kVariants) {
    if (to_string(v) == name) return v;
  }
  throw ValidationError("unknown variant '" + name + "'; valid variants: " + variant_list());
}

VariantTraits traits_of(Variant v) {
  switch (v) {
    case Variant::kDnn: return {.stochastic = false};
    case Variant::kVae: return {};
    case Variant::kAVaeSer: return {.identity_head = false, .identity_adversary = true};
    case Variant::kAVaeSv: return {.emotion_head = false, .emotion_adversary = true};
    case Variant::kLrVaeNoAdv: return {.layered_dropout = true};
    case Variant::kLrVae:
      return {.emotion_adversary = true, .identity_adversary = true, .layered_dropout = true};
  }
  return {};
}

void ModelConfig::validate() const {
  if (feature_dim == 0) throw ValidationError("model feature_dim must be positive");
  if (latent_dim < 2) throw ValidationError("model latent_dim must be at least 2");
  if (encoder_hidden.empty()) throw ValidationError("model needs at least one encoder hidden layer");
  for (std::size_t h : encoder_hidden) {
    if (h == 0) throw ValidationError("encoder hidden widths must be positive");
  }
  if (head_hidden == 0) throw ValidationError("head_hidden must be positive");
  if (num_emotions < 2) throw ValidationError("model needs at least 2 emotion classes");
  if (num_speakers < 2) throw ValidationError("model needs at least 2 training speakers");
  if (!std::isfinite(emotion_adversary_lambda) || !std::isfinite(identity_adversary_lambda) ||
      emotion_adversary_lambda < 0.0 || identity_adversary_lambda < 0.0) {
    throw ValidationError("reversal strengths must be finite and nonnegative");
  }
  // Surfaces schedule errors at configuration time.
  (void)PreserveRateSchedule::build(latent_dim, p_max, p_min, ScheduleDirection::kDecreasing, schedule_form);
}

Mlp Mlp::create(const std::string& name, const std::vector<std::size_t>& dims, Rng& rng) {
  Mlp mlp;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    mlp.layers.push_back(make_layer(name + "." + std::to_string(i), dims[i], dims[i + 1], rng));
  }
  return mlp;
}

ad::Var Mlp::forward(ad::Graph& g, ad::Var x) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = apply(g, layers[i], x);
    if (i + 1 < layers.size()) x = ad::relu(x);
  }
  return x;
}

ad::Var Mlp::penultimate(ad::Graph& g, ad::Var x) const {
  if (layers.size() < 2) throw ContractError("penultimate() needs a hidden layer");
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) x = ad::relu(apply(g, layers[i], x));
  return x;
}

LrVaeModel LrVaeModel::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const VariantTraits t = traits_of(config.variant);
  Rng rng = make_rng(seed, "init");
  LrVaeModel m;
  m.config = config;

  std::vector<std::size_t> enc_dims{config.feature_dim};
  enc_dims.insert(enc_dims.end(), config.encoder_hidden.begin(), config.encoder_hidden.end());
  m.encoder = Mlp::create("encoder", enc_dims, rng);
  const std::size_t top = config.encoder_hidden.back();
  m.mean_layer = make_layer("posterior.mean", top, config.latent_dim, rng, t.stochastic ? kPosteriorInitScale : 1.0);
  if (t.stochastic) {
    m.log_var_layer = make_layer("posterior.log_var", top, config.latent_dim, rng, kPosteriorInitScale);
    std::vector<std::size_t> dec_dims{config.latent_dim};
    dec_dims.insert(dec_dims.end(), config.encoder_hidden.rbegin(), config.encoder_hidden.rend());
    dec_dims.push_back(config.feature_dim);
    m.decoder = Mlp::create("decoder", dec_dims, rng);
  }
  const std::size_t d = config.latent_dim;
  const std::size_t h = config.head_hidden;
  if (t.emotion_head) m.emotion_head = Mlp::create("emotion_head", {d, h, config.num_emotions}, rng);
  if (t.identity_head) m.identity_head = Mlp::create("identity_head", {d, h, config.num_speakers}, rng);
  if (t.emotion_adversary) {
    m.emotion_adversary = Mlp::create("emotion_adversary", {d, h, config.num_emotions}, rng);
  }
  if (t.identity_adversary) {
    m.identity_adversary = Mlp::create("identity_adversary", {d, h, config.num_speakers}, rng);
  }
  m.emotion_schedule = PreserveRateSchedule::build(d, config.p_max, config.p_min,
                                                   ScheduleDirection::kDecreasing, config.schedule_form);
  m.identity_schedule = PreserveRateSchedule::build(d, config.p_max, config.p_min,
                                                    ScheduleDirection::kIncreasing, config.schedule_form);
  m.metadata.init_seed = seed;
  return m;
}

std::vector<ad::Parameter*> LrVaeModel::parameters() {
  std::vector<ad::Parameter*> out;
  append_params(encoder, out);
  out.push_back(&mean_layer.weight);
  out.push_back(&mean_layer.bias);
  if (log_var_layer) {
    out.push_back(&log_var_layer->weight);
    out.push_back(&log_var_layer->bias);
  }
  append_params(decoder, out);
  append_params(emotion_head, out);
  append_params(identity_head, out);
  append_params(emotion_adversary, out);
  append_params(identity_adversary, out);
  return out;
}

std::vector<const ad::Parameter*> LrVaeModel::parameters() const {
  auto mutable_params = const_cast<LrVaeModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::size_t LrVaeModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value.size();
  return n;
}

void LrVaeModel::validate() const {
  config.validate();
  const VariantTraits t = traits_of(config.variant);
  if (emotion_schedule.size() != config.latent_dim || identity_schedule.size() != config.latent_dim) {
    throw ValidationError("schedule length does not match latent_dim " + std::to_string(config.latent_dim));
  }
  if (t.stochastic != log_var_layer.has_value() || t.stochastic == decoder.empty()) {
    throw ValidationError("posterior layers do not match variant " + to_string(config.variant));
  }
  auto check_head = [&](const Mlp& head, bool wanted, std::size_t arity, const char* name) {
    if (head.empty() != !wanted) throw ValidationError(std::string(name) + " presence does not match variant");
    if (wanted && head.layers.back().bias.value.size() != arity) {
      throw ValidationError(std::string(name) + " output arity mismatch");
    }
  };
  check_head(emotion_head, t.emotion_head, config.num_emotions, "emotion head");
  check_head(identity_head, t.identity_head, config.num_speakers, "identity head");
  check_head(emotion_adversary, t.emotion_adversary, config.num_emotions, "emotion adversary");
  check_head(identity_adversary, t.identity_adversary, config.num_speakers, "identity adversary");
}

PosteriorVars encode(ad::Graph& g, const LrVaeModel& model, ad::Var x) {
  if (x.value().rank() != 2 || x.shape()[1] != model.config.feature_dim) {
    throw DimensionError("encode: input " + format_shape(x.shape()) + " but model expects " +
                         std::to_string(model.config.feature_dim) + " features");
  }
  ad::Var h = x;
  for (const auto& layer : model.encoder.layers) h = ad::relu(apply(g, layer, h));
  PosteriorVars post{apply(g, model.mean_layer, h), {}};
  if (model.log_var_layer) post.log_var = apply(g, *model.log_var_layer, h);
  return post;
}

GaussianPosterior encode(const LrVaeModel& model, const Tensor& x) {
  ad::Graph g;
  const PosteriorVars post = encode(g, model, g.input(x));
  GaussianPosterior out{post.mu.value(), {}};
  out.log_var = post.log_var.valid() ? post.log_var.value() : Tensor::zeros(out.mu.shape());
  return out;
}

Tensor embed(const LrVaeModel& model, const Tensor& raw_features) {
  const Tensor x = model.metadata.input_stats.empty() ? raw_features
                                                      : model.metadata.input_stats.apply(raw_features);
  constexpr std::size_t kChunk = 1024;
  const std::size_t n = x.rows();
  std::vector<double> out;
  out.reserve(n * model.config.latent_dim);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += kChunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(n, start + kChunk); ++i) idx.push_back(i);
    const Tensor mu = encode(model, x.gather_rows(idx)).mu;
    out.insert(out.end(), mu.values().begin(), mu.values().end());
  }
  return Tensor({n, model.config.latent_dim}, std::move(out));
}

ad::Var reparameterize(const PosteriorVars& post, const Tensor& eps) {
  if (!post.log_var.valid()) throw ContractError("reparameterize: posterior has no log-variance");
  const ad::Var sigma = ad::exp(ad::scale(post.log_var, 0.5));
  return ad::add(post.mu, ad::mul_constant(sigma, eps));
}

Tensor reparameterize(const GaussianPosterior& post, const Tensor& eps) {
  ad::Graph g;
  return reparameterize(PosteriorVars{g.input(post.mu), g.input(post.log_var)}, eps).value();
}

double kl_divergence(const GaussianPosterior& post) {
  ad::Graph g;
  return ad::gaussian_kl(g.input(post.mu), g.input(post.log_var)).value().item();
}

double reconstruction_loss(const Tensor& x, const Tensor& x_hat) {
  ad::Graph g;
  return ad::mean_squared_error(g.input(x_hat), g.input(x)).value().item();
}

LossBreakdown LossGraph::values() const {
  LossBreakdown b;
  b.l_recon = value_or_zero(recon);
  b.l_kl = value_or_zero(kl);
  b.l_vae = value_or_zero(vae);
  b.l_emo = value_or_zero(emo);
  b.l_id = value_or_zero(id);
  b.l_emo_adv = value_or_zero(emo_adv);
  b.l_id_adv = value_or_zero(id_adv);
  b.l_reg = value_or_zero(reg);
  b.l_total = value_or_zero(total);
  return b;
}

LossGraph build_losses(ad::Graph& g, const LrVaeModel& model, const Batch& batch, Rng& rng, Mode mode,
                       const LossOptions& options) {
  const VariantTraits t = traits_of(model.config.variant);
  const ModelConfig& cfg = model.config;
  if (batch.x.rank() != 2 || batch.x.rows() == 0) throw ValidationError("empty batch");
  const std::size_t rows = batch.x.rows();
  if (t.emotion_head || t.emotion_adversary) check_labels(batch.emotion, rows, cfg.num_emotions, "emotion");
  if (t.identity_head || t.identity_adversary) check_labels(batch.speaker, rows, cfg.num_speakers, "speaker");

  LossGraph out;
  const ad::Var x = g.input(batch.x);
  const PosteriorVars post = encode(g, model, x);
  ad::Var z = post.mu;
  if (t.stochastic) {
    if (mode == Mode::kTrain) {
      std::normal_distribution<double> normal(0.0, 1.0);
      Tensor eps = Tensor::zeros(post.mu.shape());
      for (double& v : eps.values()) v = normal(rng);
      z = reparameterize(post, eps);
    }
    // Unit-variance Gaussian negative log-likelihood per example, constants dropped.
    const double half_features = 0.5 * static_cast<double>(cfg.feature_dim);
    out.recon = ad::scale(ad::mean_squared_error(model.decoder.forward(g, z), x), half_features);
    out.kl = ad::gaussian_kl(post.mu, post.log_var);
    out.vae = ad::add(out.recon, out.kl);
  }

  ad::Var emo_view = z;
  ad::Var id_view = z;
  if (t.layered_dropout) {
    if (mode == Mode::kTrain) {
      emo_view = apply_dropout_train(z, model.emotion_schedule, rng);
      id_view = apply_dropout_train(z, model.identity_schedule, rng);
    } else {
      emo_view = apply_dropout_eval(z, model.emotion_schedule);
      id_view = apply_dropout_eval(z, model.identity_schedule);
    }
  }
  auto couple = [&](ad::Var v, double lambda) {
    return cfg.coupling == AdversaryCoupling::kReversal ? ad::gradient_reversal(v, lambda) : ad::pass_through(v);
  };

  if (t.emotion_head) {
    out.emo = ad::softmax_cross_entropy(model.emotion_head.forward(g, emo_view), batch.emotion);
  }
  if (t.identity_head) {
    out.id = ad::softmax_cross_entropy(model.identity_head.forward(g, id_view), batch.speaker);
  }
  // The identity adversary reads what the emotion task sees, and vice versa.
  if (t.identity_adversary) {
    const ad::Var in = couple(emo_view, cfg.identity_adversary_lambda);
    out.id_adv = ad::softmax_cross_entropy(model.identity_adversary.forward(g, in), batch.speaker);
  }
  if (t.emotion_adversary) {
    const ad::Var in = couple(id_view, cfg.emotion_adversary_lambda);
    out.emo_adv = ad::softmax_cross_entropy(model.emotion_adversary.forward(g, in), batch.emotion);
  }

  std::vector<ad::Var> params;
  for (const ad::Parameter* p : model.parameters()) params.push_back(g.parameter(*p));
  out.reg = ad::sum_squares(params, options.weight_regularization);

  out.total = add_terms({out.vae, out.emo, out.id, out.emo_adv, out.id_adv, out.reg});
  return out;
}

LossBreakdown forward_losses(const LrVaeModel& model, const Batch& batch, Rng& rng, Mode mode,
                             const LossOptions& options) {
  ad::Graph g;
  return build_losses(g, model, batch, rng, mode, options).values();
}

Inference infer(const LrVaeModel& model, const Tensor& x) {
  const VariantTraits t = traits_of(model.config.variant);
  ad::Graph g;
  const PosteriorVars post = encode(g, model, g.input(x));
  Inference out{post.mu.value(), std::nullopt, std::nullopt};
  if (t.emotion_head) {
    ad::Var view = t.layered_dropout ? apply_dropout_eval(post.mu, model.emotion_schedule) : post.mu;
    out.emotion_logits = model.emotion_head.forward(g, view).value();
  }
  if (t.identity_head) {
    ad::Var view = t.layered_dropout ? apply_dropout_eval(post.mu, model.identity_schedule) : post.mu;
    out.identity_logits = model.identity_head.forward(g, view).value();
  }
  return out;
}

std::string to_string(MaskPurpose p) { return p == MaskPurpose::kPpSer ? "pp_ser" : "pp_sv"; }

MaskPurpose parse_mask_purpose(const std::string& s) {
  if (s == "pp_ser") return MaskPurpose::kPpSer;
  if (s == "pp_sv") return MaskPurpose::kPpSv;
  throw ValidationError("unknown mask purpose '" + s + "' (expected pp_ser|pp_sv)");
}

std::size_t AttributeMask::kept() const noexcept {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), std::uint8_t{1}));
}

AttributeMask AttributeMask::keep_all(std::size_t size) { return {std::vector<std::uint8_t>(size, 1)}; }

AttributeMask make_attribute_mask(std::size_t latent_dim, MaskPurpose purpose, double cut) {
  if (!(cut > 0.0 && cut < 1.0)) {
    throw ValidationError("mask cut must lie in (0, 1), got " + std::to_string(cut));
  }
  const double exact = cut * static_cast<double>(latent_dim);
  // Tolerate representation error so that 0.3 * 10 keeps 3 nodes, not 4.
  const auto count = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  AttributeMask mask{std::vector<std::uint8_t>(latent_dim, 0)};
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = purpose == MaskPurpose::kPpSer ? i : latent_dim - 1 - i;
    mask.keep[idx] = 1;
  }
  return mask;
}

Tensor mask_latent(const Tensor& z, const AttributeMask& mask) {
  if (z.rank() != 2 || z.cols() != mask.size()) {
    throw DimensionError("mask_latent: latent " + format_shape(z.shape()) + " with mask of length " +
                         std::to_string(mask.size()));
  }
  Tensor out = z;
  const std::size_t d = mask.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask.keep[i % d] == 0) out[i] = 0.0;
  }
  return out;
}

}  // namespace lrvae
