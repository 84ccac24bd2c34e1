#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lrvae/errors.hpp"
#include "lrvae/experiments.hpp"
#include "lrvae/io.hpp"

namespace lrvae {
namespace {

LabeledDataset small_dataset() {
  SynthConfig s;
  s.num_rows = 900;
  s.feature_dim = 12;
  s.num_emotions = 3;
  s.num_speakers = 16;
  s.identity_dim = 4;
  s.nuisance_dim = 2;
  s.seed = 4;
  return generate_synthetic(s);
}

ExperimentConfig small_experiment() {
  ExperimentConfig c;
  c.model.latent_dim = 8;
  c.model.encoder_hidden = {16, 12};
  c.model.head_hidden = 8;
  c.train.max_epochs = 3;
  c.train.batch_size = 64;
  c.train.learning_rate = 2e-3;
  c.probe.max_epochs = 4;
  c.probe.max_trials = 2000;
  return c;
}

MaskingCurve sample_curve() {
  MaskingCurve c{4, 8, MaskDirection::kTopDown, {}};
  for (std::size_t k = 0; k <= 4; ++k) {
    c.steps.push_back({k, 0.7 - 0.1 * static_cast<double>(k) + 1e-17, 0.1 + 0.3 / 7.0 * static_cast<double>(k)});
  }
  return c;
}

TEST(GroupMask, MasksWholeGroupsFromTheChosenEnd) {
  for (std::size_t k = 0; k <= 4; ++k) {
    const AttributeMask bottom = group_mask(16, 4, k, MaskDirection::kBottomUp);
    const AttributeMask top = group_mask(16, 4, k, MaskDirection::kTopDown);
    EXPECT_EQ(bottom.kept(), 16 - 4 * k);
    EXPECT_EQ(top.kept(), 16 - 4 * k);
    for (std::size_t i = 0; i < 16; ++i) {
      EXPECT_EQ(bottom.keep[i], i < 16 - 4 * k ? 1 : 0);
      EXPECT_EQ(top.keep[i], i >= 4 * k ? 1 : 0);
    }
  }
  EXPECT_THROW(group_mask(128, 7, 0, MaskDirection::kBottomUp), ValidationError);
  EXPECT_THROW(group_mask(16, 4, 5, MaskDirection::kBottomUp), ValidationError);
  EXPECT_EQ(parse_mask_direction("top_down"), MaskDirection::kTopDown);
  EXPECT_THROW(parse_mask_direction("sideways"), ValidationError);
}

TEST(Conditions, FollowVariantStructure) {
  EXPECT_EQ(conditions_for(Variant::kDnn), std::vector<Condition>{Condition::kOrigin});
  EXPECT_EQ(conditions_for(Variant::kVae), std::vector<Condition>{Condition::kOrigin});
  EXPECT_EQ(conditions_for(Variant::kAVaeSer), std::vector<Condition>{Condition::kPpSer});
  EXPECT_EQ(conditions_for(Variant::kAVaeSv), std::vector<Condition>{Condition::kPpSv});
  const std::vector<Condition> all{Condition::kOrigin, Condition::kPpSer, Condition::kPpSv};
  EXPECT_EQ(conditions_for(Variant::kLrVae), all);
  EXPECT_EQ(conditions_for(Variant::kLrVaeNoAdv), all);
}

TEST(CurveArtifacts, CsvRoundTrip) {
  const MaskingCurve c = sample_curve();
  const std::string csv = curve_csv(c);
  const MaskingCurve back = parse_curve_csv(csv);
  EXPECT_EQ(back.steps, c.steps);
  EXPECT_EQ(curve_csv(back), csv);
  EXPECT_THROW(parse_curve_csv("a,b,c\n"), ValidationError);
  EXPECT_THROW(parse_curve_csv("groups_masked,wfs,eer\n1,2\n"), ValidationError);
}

TEST(CurveArtifacts, ThirtyTwoGroupsGiveThirtyThreeRows) {
  MaskingCurve c{32, 128, MaskDirection::kBottomUp, {}};
  for (std::size_t k = 0; k <= 32; ++k) c.steps.push_back({k, 0.5, 0.2});
  std::istringstream lines(curve_csv(c));
  std::string line;
  std::size_t count = 0;
  std::getline(lines, line);
  EXPECT_EQ(line, "groups_masked,wfs,eer");
  while (std::getline(lines, line)) ++count;
  EXPECT_EQ(count, 33u);
}

TEST(CurveArtifacts, SvgIsByteStableAndLabelled) {
  const std::string a = curve_svg(sample_curve());
  EXPECT_EQ(a, curve_svg(sample_curve()));
  EXPECT_EQ(a.rfind("<svg", 0), 0u);
  EXPECT_NE(a.find("groups masked"), std::string::npos);
  EXPECT_NE(a.find("WFS"), std::string::npos);
  EXPECT_NE(a.find("EER"), std::string::npos);
}

TEST(CurveArtifacts, EmitWritesBothFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "lrvae_emit_test";
  std::filesystem::remove_all(dir);
  emit_curve_artifacts(sample_curve(), dir);
  EXPECT_EQ(read_text_file(dir / "curve.csv"), curve_csv(sample_curve()));
  EXPECT_EQ(read_text_file(dir / "curve.svg"), curve_svg(sample_curve()));
  std::filesystem::remove_all(dir);
}

TEST(CurveArtifacts, WriteFailureNamesPath) {
  const auto blocker = std::filesystem::temp_directory_path() / "lrvae_emit_blocker";
  std::filesystem::remove_all(blocker);
  std::ofstream(blocker) << "not a directory";
  try {
    emit_curve_artifacts(sample_curve(), blocker / "out");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("lrvae_emit_blocker"), std::string::npos) << e.what();
  }
  std::filesystem::remove(blocker);
}

TEST(Comparison, StructureFairnessAndLedger) {
  const LabeledDataset data = small_dataset();
  const std::vector<Variant> variants{Variant::kDnn, Variant::kAVaeSer, Variant::kAVaeSv, Variant::kLrVae};
  const std::vector<std::uint64_t> seeds{1, 2};
  const ComparisonResult r = run_comparison(data, variants, seeds, small_experiment());

  EXPECT_EQ(r.cells.size(), 1u + 1u + 1u + 3u);
  EXPECT_THROW(r.cell(Variant::kDnn, Condition::kPpSer), ValidationError);
  EXPECT_NO_THROW(r.cell(Variant::kDnn, Condition::kOrigin));
  for (const auto& c : r.cells) {
    EXPECT_EQ(c.split_hash, data.split_fingerprint());
    EXPECT_EQ(c.trial_hash, r.cells.front().trial_hash);
    EXPECT_EQ(c.per_seed.size(), 2u);
    EXPECT_GE(c.wfs_std, 0.0);
  }

  const auto j = to_json(r);
  const auto& cov = j.at("coverage_pp_ser_and_pp_sv");
  EXPECT_EQ(cov.at("lr_vae").at("training_runs").get<int>(), 1);
  EXPECT_EQ(cov.at("a_vae").at("training_runs").get<int>(), 2);
  EXPECT_EQ(cov.at("a_vae").at("models").get<int>(), 2);
  EXPECT_EQ(r.cost(Variant::kLrVae).best_epochs.size(), 2u);
  EXPECT_GT(r.cost(Variant::kLrVae).parameter_count, 0u);
  EXPECT_TRUE(timing_json(r).contains("lr_vae"));
  EXPECT_EQ(j.dump().find("wall_seconds"), std::string::npos);
}

TEST(Comparison, DeterministicAcrossRuns) {
  const LabeledDataset data = small_dataset();
  const std::vector<Variant> variants{Variant::kVae, Variant::kLrVaeNoAdv};
  const std::vector<std::uint64_t> seeds{7};
  const auto a = to_json(run_comparison(data, variants, seeds, small_experiment())).dump();
  const auto b = to_json(run_comparison(data, variants, seeds, small_experiment())).dump();
  EXPECT_EQ(a, b);
}

TEST(Comparison, RejectsEmptyInputs) {
  const LabeledDataset data = small_dataset();
  const std::vector<Variant> variants{Variant::kVae};
  EXPECT_THROW(run_comparison(data, variants, std::vector<std::uint64_t>{}, small_experiment()), ValidationError);
  EXPECT_THROW(run_comparison(data, std::vector<Variant>{}, std::vector<std::uint64_t>{1}, small_experiment()),
               ValidationError);
}

TEST(MaskingCurve, StepZeroEqualsUnmaskedProbe) {
  const LabeledDataset data = small_dataset();
  ExperimentConfig cfg = small_experiment();
  cfg.train.variant = Variant::kLrVae;
  const TrainResult trained = train(data, cfg.train, cfg.model);
  const MaskingCurve curve = run_masking_curve(trained.model, data, 4, MaskDirection::kBottomUp, cfg.probe);
  ASSERT_EQ(curve.steps.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(curve.steps[k].groups_masked, k);
  const MetricReport full = probe_report(embed(trained.model, data.features), data, cfg.probe);
  EXPECT_EQ(curve.steps[0].wfs, full.weighted_f_score);
  EXPECT_EQ(curve.steps[0].eer, full.eer);
  // Nothing left to probe once every group is masked.
  EXPECT_NEAR(curve.steps[4].eer, 0.5, 0.05);
  EXPECT_THROW(run_masking_curve(trained.model, data, 3, MaskDirection::kBottomUp, cfg.probe), ValidationError);
}

}  // namespace
}  // namespace lrvae
