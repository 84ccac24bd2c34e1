#include "lrvae/probe.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <utility>

#include "lrvae/adam.hpp"
#include "lrvae/errors.hpp"
#include "lrvae/rng.hpp"

namespace lrvae {
namespace {

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

void check_split(const ProbeSplit& s, std::size_t dim, const char* name) {
  if (s.latents.rank() != 2 || s.latents.rows() != s.labels.size() || s.latents.cols() != dim) {
    throw DimensionError(std::string("probe ") + name + " split: latents " + format_shape(s.latents.shape()) +
                         " with " + std::to_string(s.labels.size()) + " labels");
  }
}

}  // namespace

std::string to_string(ProbeTask t) { return t == ProbeTask::kEmotion ? "emotion" : "speaker"; }

Tensor probe_embeddings(const Mlp& probe, const Tensor& latents) {
  ad::Graph g;
  return probe.penultimate(g, g.input(latents)).value();
}

std::vector<int> probe_predictions(const Mlp& probe, const Tensor& latents) {
  ad::Graph g;
  return argmax_rows(probe.forward(g, g.input(latents)).value());
}

ProbeResult train_probe(const ProbeInput& input, ProbeTask task, const ProbeConfig& config) {
  if (input.train.labels.empty() || input.dev.labels.empty() || input.test.labels.empty()) {
    throw ValidationError("probe needs non-empty train, dev and test splits");
  }
  const std::size_t dim = input.train.latents.cols();
  check_split(input.train, dim, "train");
  check_split(input.dev, dim, "dev");
  check_split(input.test, dim, "test");
  if (config.batch_size == 0 || config.patience == 0) throw ValidationError("probe batch_size and patience must be positive");

  // Train-split class ids: emotions as given, speakers renumbered 0..k-1.
  std::vector<int> train_labels = input.train.labels;
  std::size_t classes = input.num_emotions;
  if (task == ProbeTask::kSpeaker) {
    std::map<int, int> remap;
    for (int s : train_labels) remap.emplace(s, 0);
    int next = 0;
    for (auto& [id, idx] : remap) idx = next++;
    for (int& s : train_labels) s = remap.at(s);
    classes = remap.size();
  }
  {
    std::vector<int> distinct(train_labels);
    std::sort(distinct.begin(), distinct.end());
    if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2) {
      throw ValidationError("probe training labels are degenerate: fewer than 2 classes in train split");
    }
  }
  for (int y : train_labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw IndexError("probe label outside class range");
  }

  std::vector<TrialPair> dev_pairs, test_pairs;
  if (task == ProbeTask::kSpeaker) {
    dev_pairs = sample_trial_pairs(input.dev.labels, config.max_trials, derive_seed(config.trial_seed, "dev"));
    test_pairs = sample_trial_pairs(input.test.labels, config.max_trials, derive_seed(config.trial_seed, "test"));
  }

  // Higher is better for both tasks: WFS, or -EER. Emotion ties go to lower dev cross-entropy so that a probe
  // still moving toward its first correct argmax is not stopped on a flat WFS.
  auto dev_score = [&](const Mlp& probe) -> std::pair<double, double> {
    if (task == ProbeTask::kEmotion) {
      ad::Graph g;
      const ad::Var logits = probe.forward(g, g.input(input.dev.latents));
      const double wfs = weighted_f_score(argmax_rows(logits.value()), input.dev.labels, input.num_emotions);
      return {wfs, -ad::softmax_cross_entropy(logits, input.dev.labels).value()[0]};
    }
    return {-equal_error_rate(score_trials(probe_embeddings(probe, input.dev.latents), dev_pairs)).eer, 0.0};
  };

  Rng rng = make_rng(config.seed, "probe");
  ProbeResult result;
  result.probe = Mlp::create("probe", {dim, config.hidden, classes}, rng);
  Mlp best = result.probe;
  std::pair<double, double> best_score = dev_score(result.probe);
  std::size_t since_best = 0;
  AdamState adam;
  std::vector<std::size_t> order(train_labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<ad::Parameter*> params;
  for (auto& l : result.probe.layers) {
    params.push_back(&l.weight);
    params.push_back(&l.bias);
  }

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      std::vector<int> labels;
      for (std::size_t i : idx) labels.push_back(train_labels[i]);
      ad::Graph g;
      const ad::Var logits = result.probe.forward(g, g.input(input.train.latents.gather_rows(idx)));
      std::vector<ad::Var> weights;
      for (const ad::Parameter* p : params) weights.push_back(g.parameter(*p));
      const ad::Var loss =
          ad::add(ad::softmax_cross_entropy(logits, labels), ad::sum_squares(weights, config.weight_regularization));
      adam_step(params, g.backward(loss), adam, config.learning_rate);
    }
    result.epochs_run = epoch;
    const std::pair<double, double> score = dev_score(result.probe);
    if (score > best_score) {
      best_score = score;
      best = result.probe;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  result.probe = std::move(best);
  result.dev_metric = task == ProbeTask::kEmotion ? best_score.first : -best_score.first;

  if (task == ProbeTask::kEmotion) {
    const auto predictions = probe_predictions(result.probe, input.test.latents);
    result.report.per_class = per_class_scores(predictions, input.test.labels, input.num_emotions);
    result.report.weighted_f_score = weighted_f_score(predictions, input.test.labels, input.num_emotions);
  } else {
    const auto scored = score_trials(probe_embeddings(result.probe, input.test.latents), test_pairs);
    const EerResult eer = equal_error_rate(scored);
    result.report.eer = eer.eer;
    result.report.eer_threshold = eer.threshold;
    result.report.trial_count = scored.size();
  }
  return result;
}

}  // namespace lrvae
