#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dgzsl/error.hpp"
#include "dgzsl/io.hpp"
#include "dgzsl/pipeline.hpp"
#include "dgzsl/training.hpp"

using namespace dgzsl;
namespace fs = std::filesystem;

namespace {

Dataset small_dataset() {
  SynthSpec s;
  s.seen = 4;
  s.unseen = 3;
  s.attribute_dim = 4;
  s.feature_dim = 8;
  s.samples_per_class = 20;
  s.seed = 2;
  return synth_generate(s);
}

TrainConfig small_config() {
  TrainConfig c;
  c.latent_dim = 4;
  c.hidden = {16};
  c.batch_size = 16;
  c.epochs = 6;
  c.transductive_epochs = 3;
  c.fewshot_epochs = 2;
  c.fewshot_k = 2;
  c.seed = 5;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Adam, FirstStepMovesBySignTimesLearningRate) {
  ModelParams p;
  p.encoder.mean_head = {Matrix{{1.0}}, Matrix{{0.0}}};
  p.encoder.logvar_head = {Matrix{{0.0}}, Matrix{{0.0}}};
  p.decoder.output = {Matrix{{0.0}}, Matrix{{0.0}}};
  p.prior = {Matrix{{0.0}}, Matrix{{0.0}}};
  std::vector<Matrix> grads;
  for (const auto& [name, t] : p.tensors()) grads.emplace_back(t->rows(), t->cols(), 0.0);
  grads[0](0, 0) = 4.0;   // encoder.mean_head.weight
  grads[1](0, 0) = -0.5;  // encoder.mean_head.bias
  Adam adam(0.01);
  adam.ascend(p, grads);
  EXPECT_NEAR(p.encoder.mean_head.weight(0, 0), 1.01, 1e-8);
  EXPECT_NEAR(p.encoder.mean_head.bias(0, 0), -0.01, 1e-8);
  EXPECT_EQ(p.decoder.output.weight(0, 0), 0.0);
  EXPECT_EQ(adam.steps(), 1u);
  grads.pop_back();
  EXPECT_THROW(adam.ascend(p, grads), ShapeError);
}

TEST(TrainSupervised, ObjectiveImprovesAndIsDeterministic) {
  const Dataset ds = small_dataset();
  const TrainConfig cfg = small_config();
  const auto run = [&] {
    Rng rng(1);
    ModelParams m = init_model(cfg.architecture(8, 4), rng);
    std::vector<double> objectives;
    train_supervised(m, ds.examples(Split::kTrain), ds.seen_classes(), cfg.inductive_options(),
                     PhaseSettings::from(cfg, "inductive", 15), rng,
                     [&](const EpochRecord& r, const ModelParams&) {
                       EXPECT_EQ(r.phase, "inductive");
                       EXPECT_FALSE(r.has_unlabeled);
                       EXPECT_NEAR(r.objective, r.labeled.total, 0.0);
                       objectives.push_back(r.objective);
                     });
    return std::make_pair(objectives, m);
  };
  const auto [first, m1] = run();
  const auto [second, m2] = run();
  ASSERT_EQ(first.size(), 15u);
  EXPECT_GT(first.back(), first.front());
  EXPECT_EQ(first, second);
  EXPECT_EQ(*m1.tensors()[0].second, *m2.tensors()[0].second);
}

TEST(TrainSupervised, RejectsLabelsOutsideClasses) {
  const Dataset ds = small_dataset();
  const TrainConfig cfg = small_config();
  Rng rng(1);
  ModelParams m = init_model(cfg.architecture(8, 4), rng);
  EXPECT_THROW(train_supervised(m, ds.examples(Split::kTest), ds.seen_classes(),
                                cfg.inductive_options(), PhaseSettings::from(cfg, "x", 1), rng),
               DataError);
}

TEST(TrainTransductive, RecordsComposeAndBothRefreshCadencesRun) {
  const Dataset ds = small_dataset();
  for (TargetRefresh refresh : {TargetRefresh::kEpoch, TargetRefresh::kBatch}) {
    const TrainConfig cfg = small_config();
    Rng rng(2);
    ModelParams m = init_model(cfg.architecture(8, 4), rng);
    const Examples unl = ds.examples(ds.unseen_test_rows());
    std::size_t epochs = 0;
    train_transductive(m, ds.examples(Split::kTrain), ds.seen_classes(), unl.features,
                       ds.unseen_classes(), cfg.transductive_options(), refresh,
                       PhaseSettings::from(cfg, "transductive", 3), rng,
                       [&](const EpochRecord& r, const ModelParams&) {
                         ++epochs;
                         EXPECT_TRUE(r.has_unlabeled);
                         EXPECT_NEAR(r.objective, r.labeled.total + r.unlabeled, 1e-9);
                         EXPECT_NEAR(r.unlabeled, r.unlabeled_reconstruction - r.kl_PQ, 1e-9);
                         EXPECT_GE(r.kl_PQ, 0.0);
                       });
    EXPECT_EQ(epochs, 3u);
  }
}

TEST(Pipeline, StageStreamsAreIndependent) {
  Rng a = stage_rng(1, 0), b = stage_rng(1, 1), c = stage_rng(1, 0);
  EXPECT_NE(a(), b());
  Rng d = stage_rng(1, 0);
  EXPECT_EQ(c(), d());
}

TEST(Pipeline, MetricsAreReproducibleForEveryRegime) {
  const Dataset ds = small_dataset();
  for (Regime regime : {Regime::kInductive, Regime::kTransductive, Regime::kFewShot}) {
    TrainConfig cfg = small_config();
    cfg.regime = regime;
    cfg.fewshot_transductive = regime == Regime::kFewShot;
    const RunResult r1 = run_pipeline(cfg, ds);
    const RunResult r2 = run_pipeline(cfg, ds);
    ASSERT_EQ(r1.metrics.size(), r2.metrics.size());
    for (std::size_t i = 0; i < r1.metrics.size(); ++i)
      EXPECT_EQ(r1.metrics[i].dump(), r2.metrics[i].dump());
    EXPECT_EQ(r1.report.accuracy, r2.report.accuracy);
    std::size_t expected = cfg.epochs;
    if (regime == Regime::kTransductive) expected += cfg.transductive_epochs;
    if (regime == Regime::kFewShot) expected += cfg.fewshot_epochs + cfg.transductive_epochs;
    EXPECT_EQ(r1.metrics.size(), expected);
    for (const auto& m : r1.metrics) {
      EXPECT_GE(m["accuracy"].get<double>(), 0.0);
      EXPECT_LE(m["accuracy"].get<double>(), 1.0);
      EXPECT_FALSE(m.contains("seconds"));
    }
    if (regime == Regime::kFewShot) {
      EXPECT_EQ(r1.eval_rows.size(), 3u * (20 - cfg.fewshot_k));
    } else {
      EXPECT_EQ(r1.eval_rows.size(), 60u);
    }
  }
}

TEST(Pipeline, PretrainedModelSkipsSeenClassStage) {
  const Dataset ds = small_dataset();
  TrainConfig cfg = small_config();
  const RunResult base = run_pipeline(cfg, ds);
  cfg.regime = Regime::kTransductive;
  RunHooks hooks;
  hooks.pretrained = &base.params;
  const RunResult cont = run_pipeline(cfg, ds, hooks);
  ASSERT_EQ(cont.metrics.size(), cfg.transductive_epochs);
  EXPECT_EQ(cont.metrics.front()["phase"], "transductive");

  // Same as the single run that includes the seen-class stage.
  const RunResult full = run_pipeline(cfg, ds);
  EXPECT_EQ(full.metrics.back().dump(), cont.metrics.back().dump());
}

TEST(Pipeline, RunDirectoryContents) {
  const Dataset ds = small_dataset();
  const TrainConfig cfg = small_config();
  const fs::path a = fs::temp_directory_path() / "dgzsl_test_run_a";
  const fs::path b = fs::temp_directory_path() / "dgzsl_test_run_b";
  fs::remove_all(a);
  fs::remove_all(b);
  run_train(cfg, ds, a);
  run_train(cfg, ds, b);
  for (const char* f : {"config.cfg", "metrics.jsonl", "timings.jsonl", "checkpoint.bin",
                        "summary.json"}) {
    EXPECT_TRUE(fs::exists(a / f)) << f;
  }
  EXPECT_EQ(slurp(a / "metrics.jsonl"), slurp(b / "metrics.jsonl"));
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  EXPECT_EQ(parse_config(slurp(a / "config.cfg")).to_text(), cfg.to_text());

  const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
  EXPECT_EQ(summary["seed"], cfg.seed);
  EXPECT_EQ(summary["version"], kVersion);
  std::size_t confusion_total = 0;
  for (const auto& row : summary["report"]["confusion"])
    for (const auto& v : row) confusion_total += v.get<std::size_t>();
  EXPECT_EQ(confusion_total, summary["report"]["total"].get<std::size_t>());

  std::ifstream metrics(a / "metrics.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(metrics, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["epoch"].get<std::size_t>(), ++lines);
  }
  EXPECT_EQ(lines, cfg.epochs);

  const ModelParams loaded = load_checkpoint(a / "checkpoint.bin");
  EXPECT_EQ(loaded.latent_dim(), 4u);
}

TEST(Export, LatentAndReconstructionShapes) {
  const Dataset ds = small_dataset();
  const TrainConfig cfg = small_config();
  Rng rng(1);
  const ModelParams m = init_model(cfg.architecture(8, 4), rng);
  const fs::path dir = fs::temp_directory_path() / "dgzsl_test_export";
  fs::remove_all(dir);
  export_embeddings(m, ds, dir);
  const Matrix latent = load_matrix(dir / "latent.bin");
  const Matrix recon = load_matrix(dir / "recon.bin");
  EXPECT_EQ(latent.rows(), ds.size());
  EXPECT_EQ(latent.cols(), 4u);
  EXPECT_EQ(recon.rows(), ds.size());
  EXPECT_EQ(recon.cols(), 8u);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const DiagGaussian q = encode(ds.features.row(i), m.encoder);
    const std::vector<double> x_hat = decode(q.mean, m.decoder);
    for (std::size_t j = 0; j < 4; ++j)
      ASSERT_EQ(latent(i, j), static_cast<double>(static_cast<float>(q.mean[j])));
    for (std::size_t j = 0; j < 8; ++j)
      ASSERT_NEAR(recon(i, j), x_hat[j], 1e-6 * (1 + std::abs(x_hat[j])));
  }
  EXPECT_EQ(load_matrix(dir / "inputs.bin").rows(), ds.size());

  Rng other(2);
  Architecture wrong = cfg.architecture(5, 4);
  EXPECT_THROW(export_embeddings(init_model(wrong, other), ds, dir), ShapeError);
}
