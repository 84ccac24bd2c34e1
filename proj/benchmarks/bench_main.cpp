#include <benchmark/benchmark.h>

#include <random>

#include "lrvae/adam.hpp"
#include "lrvae/metrics.hpp"
#include "lrvae/model.hpp"
#include "lrvae/rng.hpp"

namespace lrvae {
namespace {

Tensor normal_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor t = Tensor::zeros({rows, cols});
  for (double& v : t.values()) v = normal(rng);
  return t;
}

ModelConfig bench_config(std::size_t latent_dim) {
  ModelConfig c;
  c.feature_dim = 64;
  c.latent_dim = latent_dim;
  c.num_emotions = 5;
  c.num_speakers = 28;
  return c;
}

Batch bench_batch(std::size_t rows) {
  Batch b;
  b.x = normal_matrix(rows, 64, 1);
  for (std::size_t i = 0; i < rows; ++i) {
    b.emotion.push_back(static_cast<int>(i % 5));
    b.speaker.push_back(static_cast<int>(i % 28));
  }
  return b;
}

void BM_DenseForwardBackward(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  Rng rng = make_rng(2, "bench");
  const Mlp mlp = Mlp::create("mlp", {width, width, width}, rng);
  const Tensor x = normal_matrix(128, width, 3);
  for (auto _ : state) {
    ad::Graph g;
    const ad::Var y = mlp.forward(g, g.input(x));
    auto grads = g.backward(ad::sum_squares(std::vector<ad::Var>{y}, 1.0));
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_DenseForwardBackward)->Arg(64)->Arg(256);

void BM_TrainStep(benchmark::State& state) {
  LrVaeModel model = LrVaeModel::initialize(bench_config(static_cast<std::size_t>(state.range(0))), 4);
  const Batch batch = bench_batch(128);
  AdamState adam;
  Rng rng = make_rng(5, "bench");
  const auto params = model.parameters();
  for (auto _ : state) {
    ad::Graph g;
    const LossGraph losses = build_losses(g, model, batch, rng, Mode::kTrain);
    adam_step(params, g.backward(losses.total), adam, 5e-4);
  }
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(128);

void BM_EqualErrorRate(benchmark::State& state) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ScoredTrial> trials;
  for (std::int64_t i = 0; i < state.range(0); ++i) trials.push_back({normal(rng) + (i % 2 ? 1.0 : 0.0), i % 2 == 1});
  for (auto _ : state) benchmark::DoNotOptimize(equal_error_rate(trials));
}
BENCHMARK(BM_EqualErrorRate)->Arg(20000);

}  // namespace
}  // namespace lrvae

BENCHMARK_MAIN();
