#include "dgzsl/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <random>

#include "dgzsl/error.hpp"
#include "dgzsl/io.hpp"

namespace dgzsl {

using nlohmann::json;

Rng stage_rng(std::uint64_t seed, std::uint64_t stage) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stage), 0x64677a73u};
  return Rng(seq);
}

json metrics_json(const EpochRecord& record, std::uint64_t seed, double accuracy) {
  json j;
  j["phase"] = record.phase;
  j["epoch"] = record.epoch;
  j["seed"] = seed;
  j["objective"] = record.objective;
  j["reconstruction"] = record.labeled.reconstruction;
  j["kl_true_class"] = record.labeled.kl_true_class;
  j["margin_R"] = record.labeled.margin_R;
  j["lambda"] = record.labeled.lambda;
  j["labeled_objective"] = record.labeled.total;
  if (record.has_unlabeled) {
    j["unlabeled_reconstruction"] = record.unlabeled_reconstruction;
    j["kl_PQ"] = record.kl_PQ;
    j["unlabeled_objective"] = record.unlabeled;
  }
  j["accuracy"] = accuracy;
  return j;
}

json to_json(const EvalReport& report) {
  json j;
  j["total"] = report.total;
  j["correct"] = report.correct;
  j["accuracy"] = report.accuracy;
  j["classes"] = report.classes;
  j["confusion"] = report.confusion;
  return j;
}

RunResult run_pipeline(const TrainConfig& config, const Dataset& ds, const RunHooks& hooks) {
  config.validate();
  ds.validate();

  RunResult result;
  const ClassSet seen = ds.seen_classes();
  const ClassSet unseen = ds.unseen_classes();

  FewShotSplit shots;
  if (config.regime == Regime::kFewShot) {
    shots = fewshot_sample(ds, config.fewshot_k, config.seed);
    result.eval_rows = shots.unlabeled_rows;
  } else {
    result.eval_rows = ds.unseen_test_rows();
  }
  const Examples eval_set = ds.examples(result.eval_rows);

  using Clock = std::chrono::steady_clock;
  auto epoch_start = Clock::now();
  const EpochObserver observer = [&](const EpochRecord& rec, const ModelParams& p) {
    const double seconds = std::chrono::duration<double>(Clock::now() - epoch_start).count();
    const double acc = eval_set.size() ? evaluate(p, eval_set, unseen).accuracy : 0.0;
    json line = metrics_json(rec, config.seed, acc);
    if (hooks.on_metrics) hooks.on_metrics(line);
    result.metrics.push_back(std::move(line));
    if (hooks.on_timing) {
      hooks.on_timing(json{{"phase", rec.phase}, {"epoch", rec.epoch}, {"seconds", seconds}});
    }
    epoch_start = Clock::now();
  };

  const Examples train = ds.examples(Split::kTrain);
  if (hooks.pretrained) {
    result.params = *hooks.pretrained;
    result.params.validate();
    if (result.params.input_dim() != ds.feature_dim()) {
      throw ShapeError("pretrained model expects " + std::to_string(result.params.input_dim()) +
                       " features, dataset has " + std::to_string(ds.feature_dim()));
    }
  } else {
    Rng rng = stage_rng(config.seed, 0);
    result.params = init_model(config.architecture(ds.feature_dim(), ds.attribute_dim()), rng);
    epoch_start = Clock::now();
    train_supervised(result.params, train, seen, config.inductive_options(),
                     PhaseSettings::from(config, "inductive", config.epochs), rng, observer);
  }

  const auto transductive_phase = [&](const Matrix& pool, std::uint64_t stage) {
    Rng rng = stage_rng(config.seed, stage);
    epoch_start = Clock::now();
    train_transductive(result.params, train, seen, pool, unseen, config.transductive_options(),
                       config.target_refresh,
                       PhaseSettings::from(config, "transductive", config.transductive_epochs),
                       rng, observer);
  };

  switch (config.regime) {
    case Regime::kInductive:
      break;
    case Regime::kTransductive:
      transductive_phase(eval_set.features, 1);
      break;
    case Regime::kFewShot: {
      Rng rng = stage_rng(config.seed, 2);
      epoch_start = Clock::now();
      result.params = fewshot_finetune(std::move(result.params), ds.examples(shots.labeled_rows),
                                       ds, config, rng, observer);
      if (config.fewshot_transductive) transductive_phase(eval_set.features, 3);
      break;
    }
  }

  result.report = evaluate(result.params, eval_set, unseen);
  return result;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

RunResult run_train(const TrainConfig& config, const Dataset& ds,
                    const std::filesystem::path& out_dir, const ModelParams* pretrained) {
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "config.cfg", config.to_text());

  std::ofstream metrics(out_dir / "metrics.jsonl", std::ios::binary);
  std::ofstream timings(out_dir / "timings.jsonl", std::ios::binary);
  if (!metrics || !timings) throw Error("cannot write logs under " + out_dir.string());

  RunHooks hooks;
  hooks.pretrained = pretrained;
  hooks.on_metrics = [&](const json& j) { metrics << j.dump() << '\n' << std::flush; };
  hooks.on_timing = [&](const json& j) { timings << j.dump() << '\n' << std::flush; };

  const auto start = std::chrono::steady_clock::now();
  RunResult result = run_pipeline(config, ds, hooks);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  save_checkpoint(out_dir / "checkpoint.bin", result.params);

  json summary;
  summary["version"] = kVersion;
  summary["regime"] = to_string(config.regime);
  summary["seed"] = config.seed;
  summary["eval_rows"] = result.eval_rows.size();
  summary["accuracy"] = result.report.accuracy;
  summary["report"] = to_json(result.report);
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  timings << json{{"phase", "total"}, {"seconds", seconds}}.dump() << '\n';
  return result;
}

GradCheckSummary run_gradcheck(std::uint64_t seed, double epsilon) {
  SynthSpec spec;
  spec.seen = 4;
  spec.unseen = 3;
  spec.attribute_dim = 5;
  spec.feature_dim = 8;
  spec.samples_per_class = 3;
  spec.seed = seed;
  const Dataset ds = synth_generate(spec);

  Rng rng = stage_rng(seed, 7);
  Architecture arch;
  arch.input_dim = 8;
  arch.attribute_dim = 5;
  arch.latent_dim = 4;
  arch.hidden = {16};
  arch.keep_prob = 1.0;
  ModelParams model = init_model(arch, rng);
  // Move off the zero initialization so every gradient path is exercised.
  std::normal_distribution<double> jitter(0.0, 0.1);
  for (auto& [name, tensor] : model.tensors()) {
    for (double& v : tensor->data()) v += jitter(rng);
  }

  const Examples train = ds.examples(Split::kTrain);
  const auto unseen_rows = ds.unseen_test_rows();
  LabeledBatch labeled;
  labeled.features = train.features;
  labeled.labels = train.labels;
  labeled.noise = standard_normal(train.size(), arch.latent_dim, rng);

  UnlabeledBatch unlabeled;
  unlabeled.features = gather_rows(ds.features, unseen_rows);
  unlabeled.noise = standard_normal(unseen_rows.size(), arch.latent_dim, rng);
  unlabeled.targets = sharpen(soft_assign(unlabeled.features, ds.unseen_classes(), model)).values;

  std::vector<Matrix> start;
  for (const auto& [name, tensor] : model.tensors()) start.push_back(*tensor);

  const auto with_params = [model](std::span<const Matrix> p) {
    ModelParams m = model;
    auto tensors = m.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) *tensors[i].second = p[i];
    return m;
  };
  const ClassSet seen = ds.seen_classes();
  const ClassSet unseen = ds.unseen_classes();

  GradCheckSummary out;
  const InductiveOptions inductive;
  out.inductive = grad_check(
      [&](std::span<const Matrix> p, std::vector<Matrix>* grads) {
        ObjectiveResult r = inductive_objective(with_params(p), labeled, seen, inductive);
        if (grads) *grads = std::move(r.grads);
        return r.breakdown.total;
      },
      start, epsilon);

  const TransductiveOptions transductive;
  out.transductive = grad_check(
      [&](std::span<const Matrix> p, std::vector<Matrix>* grads) {
        TransductiveResult r =
            transductive_objective(with_params(p), labeled, seen, unlabeled, unseen, transductive);
        if (grads) *grads = std::move(r.grads);
        return r.breakdown.total;
      },
      start, epsilon);
  return out;
}

void export_embeddings(const ModelParams& params, const Dataset& ds,
                       const std::filesystem::path& out_dir) {
  if (params.input_dim() != ds.feature_dim()) {
    throw ShapeError("model expects " + std::to_string(params.input_dim()) +
                     " features, dataset has " + std::to_string(ds.feature_dim()));
  }
  std::filesystem::create_directories(out_dir);
  const BatchGaussian posterior = encode_batch(ds.features, params.encoder);
  save_matrix(out_dir / "inputs.bin", ds.features);
  save_matrix(out_dir / "latent.bin", posterior.mean);
  save_matrix(out_dir / "recon.bin", decode_batch(posterior.mean, params.decoder));
}

}  // namespace dgzsl
