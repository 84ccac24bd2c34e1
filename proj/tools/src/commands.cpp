#include <chrono>
#include <filesystem>
#include <memory>
#include <sstream>

#include "lrvae/checkpoint.hpp"
#include "lrvae/dataset.hpp"
#include "lrvae/errors.hpp"
#include "lrvae/experiments.hpp"
#include "lrvae/io.hpp"
#include "lrvae/training.hpp"
#include "lrvae_cli/cli.hpp"
#include "settings.hpp"

namespace lrvae::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_json(const fs::path& path, const json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

/// Snapshot next to a file output, or inside a directory output.
void write_snapshot_beside(const fs::path& file, const json& doc) {
  write_json(fs::path(file.string() + ".config.json"), doc);
}

// Flag groups shared by several commands.

struct TrainFlags {
  std::string variant = "lr_vae";
  TrainConfig train;
  ModelConfig model;
  std::string schedule_form = "linear";

  void add(Settings& s, bool with_variant, bool with_seed) {
    if (with_variant) s.add("variant", variant, "model variant: " + variant_list());
    if (with_seed) s.add("seed", train.seed, "training seed");
    s.add("learning_rate", train.learning_rate, "Adam learning rate");
    s.add("batch_size", train.batch_size, "mini-batch size");
    s.add("weight_regularization", train.weight_regularization, "L2 coefficient on all weights and biases");
    s.add("max_epochs", train.max_epochs, "epoch budget");
    s.add("patience", train.patience, "epochs without dev improvement before stopping");
    s.add("dev_trials", train.dev_trials, "dev verification trials used for selection");
    s.add("latent_dim", model.latent_dim, "latent dimension D");
    s.add("encoder_hidden", model.encoder_hidden, "encoder hidden widths, comma separated");
    s.add("head_hidden", model.head_hidden, "hidden width of every head");
    s.add("p_max", model.p_max, "largest preserve rate");
    s.add("p_min", model.p_min, "smallest preserve rate");
    s.add("schedule_form", schedule_form, "preserve-rate schedule form: linear|exponential");
    s.add("emotion_adversary_lambda", model.emotion_adversary_lambda, "reversal strength of the emotion adversary");
    s.add("identity_adversary_lambda", model.identity_adversary_lambda,
          "reversal strength of the identity adversary");
  }

  void finish() {
    train.variant = parse_variant(variant);
    model.variant = train.variant;
    model.schedule_form = parse_schedule_form(schedule_form);
  }
};

struct ProbeFlags {
  ProbeConfig probe;

  void add(Settings& s, bool with_seeds) {
    s.add("probe_hidden", probe.hidden, "probe hidden width");
    s.add("probe_epochs", probe.max_epochs, "probe epoch budget");
    s.add("probe_patience", probe.patience, "probe early-stopping patience");
    s.add("probe_batch_size", probe.batch_size, "probe mini-batch size");
    s.add("probe_learning_rate", probe.learning_rate, "probe Adam learning rate");
    s.add("probe_weight_regularization", probe.weight_regularization, "probe L2 coefficient");
    s.add("max_trials", probe.max_trials, "verification trials per split");
    if (with_seeds) s.add("probe_seed", probe.seed, "probe initialization seed");
    s.add("trial_seed", probe.trial_seed, "seed of the dev/test trial lists");
  }
};

// gen-data

struct GenData {
  SynthConfig synth;
  std::string out;

  void add(Settings& s) {
    s.add_required("out", out, "output CSV path");
    s.add("rows", synth.num_rows, "number of rows N");
    s.add("features", synth.feature_dim, "feature dimension F");
    s.add("emotions", synth.num_emotions, "emotion classes E");
    s.add("speakers", synth.num_speakers, "speakers S");
    s.add("identity_dim", synth.identity_dim, "speaker embedding dimension");
    s.add("nuisance_dim", synth.nuisance_dim, "nuisance factor dimension");
    s.add("emotion_strength", synth.emotion_strength, "scale of the emotion one-hot factor");
    s.add("identity_strength", synth.identity_strength, "scale of the speaker factor");
    s.add("cross_leak", synth.cross_leak, "speaker term mixed into the emotion factor, in [0, 1]");
    s.add("noise_std", synth.noise_std, "additive feature noise");
    s.add("emotion_priors", synth.emotion_priors, "class priors, comma separated (default: built-in)");
    s.add("dev_fraction", synth.dev_fraction, "fraction of speakers in dev");
    s.add("test_fraction", synth.test_fraction, "fraction of speakers in test");
    s.add("seed", synth.seed, "generator seed");
  }

  void run(const json& snapshot, std::ostream& out_stream) const {
    const LabeledDataset ds = generate_synthetic(synth);
    export_csv(ds, out);
    write_snapshot_beside(out, snapshot);
    out_stream << "wrote " << out << ": N=" << ds.size() << " F=" << ds.feature_dim() << " E=" << ds.num_emotions()
               << " S=" << ds.num_speakers() << "\n";
  }
};

// train

struct Train {
  std::string data;
  std::string out;
  TrainFlags flags;

  void add(Settings& s) {
    s.add_required("data", data, "dataset CSV");
    s.add_required("out", out, "output directory");
    flags.add(s, true, true);
  }

  void run(const json& snapshot, std::ostream& out_stream) {
    flags.finish();
    const LabeledDataset ds = ingest_csv(data);
    const TrainResult result = train(ds, flags.train, flags.model);
    const fs::path dir(out);
    save_checkpoint(result.model, dir / "model.json");
    write_text_file(dir / "log.jsonl", training_log_jsonl(result.log));
    write_json(dir / "config.json", snapshot);
    out_stream << "trained " << to_string(flags.train.variant) << ": " << result.log.size() << " epochs, best epoch "
               << result.best_epoch << ", " << result.model.parameter_count() << " parameters -> " << out << "\n";
  }
};

// encode

struct Encode {
  std::string model;
  std::string data;
  std::string out;
  std::string mask = "none";
  double cut = 0.5;
  std::size_t latent_dim = 0;

  void add(Settings& s) {
    s.add_required("model", model, "checkpoint JSON");
    s.add_required("data", data, "dataset CSV of raw features");
    s.add_required("out", out, "output CSV of latent means");
    s.add("mask", mask, "latent mask: none|pp_ser|pp_sv");
    s.add("cut", cut, "fraction of latent nodes kept by the mask");
    s.add("latent_dim", latent_dim, "expected latent dimension; 0 accepts the checkpoint's");
  }

  void run(const json& snapshot, std::ostream& out_stream) const {
    if (mask != "none" && mask != "pp_ser" && mask != "pp_sv") {
      throw ValidationError("unknown mask '" + mask + "' (expected none|pp_ser|pp_sv)");
    }
    const LrVaeModel m = load_checkpoint(model);
    if (latent_dim != 0 && latent_dim != m.config.latent_dim) {
      throw ValidationError("--latent-dim " + std::to_string(latent_dim) + " but checkpoint " + model + " has D=" +
                            std::to_string(m.config.latent_dim));
    }
    LabeledDataset ds = ingest_csv(data);
    Tensor z = embed(m, ds.features);
    AttributeMask keep = AttributeMask::keep_all(m.config.latent_dim);
    if (mask != "none") keep = make_attribute_mask(m.config.latent_dim, parse_mask_purpose(mask), cut);
    ds.features = mask_latent(z, keep);
    ds.fit_statistics();
    export_csv(ds, out);
    write_snapshot_beside(out, snapshot);
    out_stream << "encoded " << ds.size() << " rows into " << m.config.latent_dim << " latent columns ("
               << keep.kept() << " kept) -> " << out << "\n";
  }
};

// eval

struct Eval {
  std::string data;
  std::string out;
  ProbeFlags flags;

  void add(Settings& s) {
    s.add_required("data", data, "dataset CSV whose feature columns are the representation to probe");
    s.add_required("out", out, "output MetricReport JSON");
    flags.add(s, true);
  }

  void run(const json& snapshot, std::ostream& out_stream) const {
    const LabeledDataset ds = ingest_csv(data);
    const MetricReport report = probe_report(ds.features, ds, flags.probe);
    write_json(out, to_json(report, ds.emotion_names));
    write_snapshot_beside(out, snapshot);
    out_stream << "wfs=" << format_double(report.weighted_f_score) << " eer=" << format_double(report.eer)
               << " trials=" << report.trial_count << " -> " << out << "\n";
  }
};

// experiment compare

struct Compare {
  std::string data;
  std::string out;
  std::vector<std::string> variants{"dnn", "vae", "a_vae_ser", "a_vae_sv", "lr_vae_no_adv", "lr_vae"};
  std::size_t seeds = 3;
  std::uint64_t seed = 0;
  double cut = 0.5;
  TrainFlags train_flags;
  ProbeFlags probe_flags;

  void add(Settings& s) {
    s.add_required("data", data, "dataset CSV");
    s.add_required("out", out, "output directory");
    s.add("variants", variants, "variants to compare, comma separated");
    s.add("seeds", seeds, "number of training seeds");
    s.add("seed", seed, "first training seed; run i uses seed + i");
    s.add("cut", cut, "fraction of latent nodes kept by pp masks");
    train_flags.add(s, false, false);
    probe_flags.add(s, false);
  }

  void run(const json& snapshot, std::ostream& out_stream) {
    train_flags.finish();
    if (seeds == 0) throw ValidationError("--seeds must be positive");
    std::vector<Variant> vs;
    for (const auto& name : variants) vs.push_back(parse_variant(name));
    std::vector<std::uint64_t> seed_list;
    for (std::size_t i = 0; i < seeds; ++i) seed_list.push_back(seed + i);
    const LabeledDataset ds = ingest_csv(data);
    const ExperimentConfig config{train_flags.train, train_flags.model, probe_flags.probe, cut};
    const ComparisonResult result = run_comparison(ds, vs, seed_list, config);
    const fs::path dir(out);
    write_json(dir / "comparison.json", to_json(result));
    write_json(dir / "timing.json", timing_json(result));
    write_json(dir / "config.json", snapshot);
    out_stream << "compared " << vs.size() << " variants x " << seeds << " seeds -> " << out << "\n";
  }
};

// experiment curve

struct Curve {
  std::string data;
  std::string out;
  std::string model;
  std::size_t groups = 32;
  std::string direction = "bottom_up";
  TrainFlags train_flags;
  ProbeFlags probe_flags;

  void add(Settings& s) {
    s.add_required("data", data, "dataset CSV");
    s.add_required("out", out, "output directory");
    s.add("model", model, "trained lr_vae checkpoint; when empty an lr_vae is trained first");
    s.add("groups", groups, "number of latent groups; must divide D");
    s.add("direction", direction, "masking direction: bottom_up|top_down");
    train_flags.add(s, false, true);
    probe_flags.add(s, true);
  }

  void run(const json& snapshot, std::ostream& out_stream) {
    train_flags.finish();
    const MaskDirection dir = parse_mask_direction(direction);
    const LabeledDataset ds = ingest_csv(data);
    LrVaeModel m;
    if (!model.empty()) {
      m = load_checkpoint(model);
    } else {
      // Fail on indivisible group counts before spending time on training.
      (void)group_mask(train_flags.model.latent_dim, groups, 0, dir);
      TrainConfig tc = train_flags.train;
      tc.variant = Variant::kLrVae;
      ModelConfig mc = train_flags.model;
      mc.variant = Variant::kLrVae;
      m = train(ds, tc, mc).model;
    }
    const MaskingCurve curve = run_masking_curve(m, ds, groups, dir, probe_flags.probe);
    const fs::path out_dir(out);
    emit_curve_artifacts(curve, out_dir);
    write_json(out_dir / "config.json", snapshot);
    out_stream << "curve with " << curve.steps.size() << " steps -> " << (out_dir / "curve.csv").string() << "\n";
  }
};

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  if (dynamic_cast<const NumericalError*>(&e)) return kNumerical;
  return kUsage;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Layered-representation VAE: data generation, training, encoding and evaluation", "lrvae"};
  app.require_subcommand(1);

  GenData gen_data;
  Train train_cmd;
  Encode encode;
  Eval eval;
  Compare compare;
  Curve curve;

  std::vector<std::unique_ptr<Settings>> settings;
  std::vector<std::pair<CLI::App*, std::function<void()>>> handlers;
  auto register_command = [&](CLI::App* sub, const std::string& name, auto& command) {
    settings.push_back(std::make_unique<Settings>(sub, name));
    Settings* s = settings.back().get();
    command.add(*s);
    handlers.emplace_back(sub, [s, &command, &out] {
      s->resolve();
      command.run(s->snapshot(), out);
    });
  };
  register_command(app.add_subcommand("gen-data", "generate a synthetic dataset CSV"), "gen-data", gen_data);
  register_command(app.add_subcommand("train", "train one model variant"), "train", train_cmd);
  register_command(app.add_subcommand("encode", "write (masked) latent means as a dataset CSV"), "encode", encode);
  register_command(app.add_subcommand("eval", "probe a representation for emotion WFS and speaker EER"), "eval",
                   eval);
  CLI::App* experiment = app.add_subcommand("experiment", "multi-run experiments");
  experiment->require_subcommand(1);
  register_command(experiment->add_subcommand("compare", "compare variants across seeds"), "experiment compare",
                   compare);
  register_command(experiment->add_subcommand("curve", "incremental masking curve of an lr_vae"),
                   "experiment curve", curve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    for (auto& [sub, handler] : handlers) {
      if (sub->parsed()) handler();
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kOk;
}

}  // namespace lrvae::cli
