#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lrvae/errors.hpp"
#include "lrvae/training.hpp"

namespace lrvae {
namespace {

LabeledDataset toy_dataset(std::uint64_t seed = 1) {
  SynthConfig s;
  s.num_rows = 200;
  s.feature_dim = 12;
  s.num_emotions = 2;
  s.num_speakers = 8;
  s.dev_fraction = 0.25;
  s.test_fraction = 0.25;
  s.identity_dim = 3;
  s.nuisance_dim = 2;
  s.seed = seed;
  return generate_synthetic(s);
}

ModelConfig toy_model() {
  ModelConfig m;
  m.latent_dim = 8;
  m.encoder_hidden = {16, 12};
  m.head_hidden = 8;
  return m;
}

TrainConfig toy_train(Variant v, std::size_t epochs) {
  TrainConfig t;
  t.variant = v;
  t.max_epochs = epochs;
  t.patience = 100;
  t.batch_size = 16;
  t.learning_rate = 1e-3;
  t.seed = 5;
  return t;
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const LabeledDataset data = toy_dataset();
  const TrainConfig tc = toy_train(Variant::kLrVae, 0);
  const ModelConfig mc = model_config_for(data, tc.variant, toy_model());
  const LrVaeModel init = LrVaeModel::initialize(mc, 3);
  const TrainResult r = train(init, data, tc);
  EXPECT_TRUE(r.log.empty());
  EXPECT_EQ(r.best_epoch, 0u);
  EXPECT_EQ(r.optimizer_steps, 0u);
  const auto a = init.parameters();
  const auto b = r.model.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value);
}

TEST(Train, SameSeedIsBitIdentical) {
  const LabeledDataset data = toy_dataset();
  const TrainResult a = train(data, toy_train(Variant::kLrVae, 4), toy_model());
  const TrainResult b = train(data, toy_train(Variant::kLrVae, 4), toy_model());
  const auto pa = a.model.parameters();
  const auto pb = b.model.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
  EXPECT_EQ(training_log_jsonl(a.log), training_log_jsonl(b.log));

  TrainConfig other = toy_train(Variant::kLrVae, 4);
  other.seed = 6;
  const TrainResult c = train(data, other, toy_model());
  EXPECT_NE(training_log_jsonl(a.log), training_log_jsonl(c.log));
}

TEST(Train, LossDecreasesOverFirstEpochs) {
  const LabeledDataset data = toy_dataset();
  for (Variant v : all_variants()) {
    const TrainResult r = train(data, toy_train(v, 5), toy_model());
    ASSERT_EQ(r.log.size(), 5u) << to_string(v);
    for (std::size_t e = 1; e < r.log.size(); ++e) {
      EXPECT_LT(r.log[e].losses.l_total, r.log[e - 1].losses.l_total) << to_string(v) << " epoch " << e + 1;
    }
  }
}

TEST(Train, LogComponentsSumToTotal) {
  const TrainResult r = train(toy_dataset(), toy_train(Variant::kLrVae, 3), toy_model());
  std::istringstream lines(training_log_jsonl(r.log));
  std::string line;
  std::size_t count = 0;
  std::size_t selected = 0;
  while (std::getline(lines, line)) {
    const auto rec = nlohmann::json::parse(line);
    const auto& l = rec.at("losses");
    const double sum = l.at("l_vae").get<double>() + l.at("l_emo").get<double>() + l.at("l_id").get<double>() +
                       l.at("l_emo_adv").get<double>() + l.at("l_id_adv").get<double>() + l.at("l_reg").get<double>();
    EXPECT_NEAR(sum, l.at("l_total").get<double>(), 1e-12 * std::abs(sum));
    EXPECT_NEAR(l.at("l_recon").get<double>() + l.at("l_kl").get<double>(), l.at("l_vae").get<double>(), 1e-12);
    EXPECT_TRUE(rec.at("dev").contains("emotion_wfs"));
    EXPECT_TRUE(rec.at("dev").contains("identity_accuracy"));
    EXPECT_EQ(rec.at("epoch").get<std::size_t>(), ++count);
    selected += rec.at("selected").get<bool>();
  }
  EXPECT_EQ(count, 3u);
  EXPECT_EQ(selected, r.best_epoch == 0 ? 0u : 1u);
}

TEST(Train, EarlyStoppingHonorsPatience) {
  TrainConfig tc = toy_train(Variant::kVae, 200);
  tc.patience = 2;
  const TrainResult r = train(toy_dataset(), tc, toy_model());
  ASSERT_FALSE(r.log.empty());
  EXPECT_LT(r.log.size(), 200u);
  EXPECT_EQ(r.log.size(), r.best_epoch + 2);
}

TEST(Train, NonFiniteLossNamesStep) {
  TrainConfig tc = toy_train(Variant::kLrVae, 3);
  tc.learning_rate = 1e200;
  try {
    train(toy_dataset(), tc, toy_model());
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("non-finite"), std::string::npos) << msg;
    EXPECT_NE(msg.find("step"), std::string::npos) << msg;
  }
}

TEST(Train, RejectsBadConfigs) {
  const LabeledDataset data = toy_dataset();
  TrainConfig tc = toy_train(Variant::kLrVae, 1);
  tc.learning_rate = 0.0;
  EXPECT_THROW(train(data, tc, toy_model()), ValidationError);
  tc = toy_train(Variant::kLrVae, 1);
  tc.batch_size = 0;
  EXPECT_THROW(train(data, tc, toy_model()), ValidationError);
  tc = toy_train(Variant::kLrVae, 1);
  tc.patience = 0;
  EXPECT_THROW(train(data, tc, toy_model()), ValidationError);
  const LrVaeModel vae = LrVaeModel::initialize(model_config_for(data, Variant::kVae, toy_model()), 1);
  EXPECT_THROW(train(vae, data, toy_train(Variant::kLrVae, 1)), ValidationError);
}

TEST(SelectionCriterion, Examples) {
  EXPECT_DOUBLE_EQ(selection_criterion({0.5, 0.3}, Variant::kLrVae), 0.8);
  EXPECT_DOUBLE_EQ(selection_criterion({0.5, 0.3}, Variant::kVae), 0.8);
  EXPECT_DOUBLE_EQ(selection_criterion({0.52, std::nullopt}, Variant::kAVaeSer), 0.52);
  EXPECT_DOUBLE_EQ(selection_criterion({std::nullopt, 0.4}, Variant::kAVaeSv), 0.4);
  EXPECT_THROW(selection_criterion({0.5, std::nullopt}, Variant::kLrVae), ValidationError);
}

}  // namespace
}  // namespace lrvae
