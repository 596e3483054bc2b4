// Command-line front end: synthetic data, training, evaluation, export.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dgzsl/config.hpp"
#include "dgzsl/data.hpp"
#include "dgzsl/error.hpp"
#include "dgzsl/inference.hpp"
#include "dgzsl/io.hpp"
#include "dgzsl/pipeline.hpp"

namespace {

using namespace dgzsl;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  std::string regime;
  bool no_recon = false;
  bool recon_only_unlabeled = false;
  bool exclude_true_class = false;
  std::optional<std::size_t> k;

  TrainConfig resolve() const {
    TrainConfig c = config.empty() ? TrainConfig{} : load_config(config);
    if (seed) c.seed = *seed;
    if (!regime.empty()) c.regime = parse_regime(regime);
    if (no_recon) c.no_recon = true;
    if (recon_only_unlabeled) c.recon_only_unlabeled = true;
    if (exclude_true_class) c.exclude_true_class = true;
    if (k) c.fewshot_k = *k;
    c.validate();
    return c;
  }
};

void add_train_options(CLI::App* cmd, TrainArgs& a, bool fewshot) {
  cmd->add_option("--config", a.config, "key = value training config")->check(CLI::ExistingFile);
  cmd->add_option("--data", a.data, "dataset directory")->required();
  cmd->add_option("--out", a.out, "run directory")->required();
  cmd->add_option("--checkpoint", a.checkpoint, "start from this model, skipping seen-class training")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", a.seed, "overrides the config seed");
  cmd->add_flag("--no-recon", a.no_recon, "drop the reconstruction term");
  cmd->add_flag("--recon-only-unlabeled", a.recon_only_unlabeled,
                "unlabeled term is reconstruction only");
  cmd->add_flag("--exclude-true-class", a.exclude_true_class,
                "leave the true class out of the margin term");
  if (fewshot) {
    cmd->add_option("--k", a.k, "labeled examples per unseen class");
  } else {
    cmd->add_option("--regime", a.regime, "inductive, transductive or fewshot");
    cmd->add_option("--k", a.k, "few-shot examples per unseen class");
  }
}

int run_train_command(const TrainArgs& a, bool fewshot) {
  TrainConfig config = a.resolve();
  if (fewshot) config.regime = Regime::kFewShot;
  const Dataset ds = load_dataset_dir(a.data);
  std::optional<ModelParams> start;
  if (!a.checkpoint.empty()) start = load_checkpoint(a.checkpoint);
  const RunResult r = run_train(config, ds, a.out, start ? &*start : nullptr);
  std::printf("%s accuracy %.4f on %zu examples\n", to_string(config.regime), r.report.accuracy,
              r.report.total);
  return 0;
}

ClassSet candidates_for(const Dataset& ds, const std::string& which) {
  if (which == "unseen") return ds.unseen_classes();
  if (which == "seen") return ds.seen_classes();
  if (which == "all") return ds.all_classes();
  throw ConfigError("--candidates must be unseen, seen or all, got '" + which + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attribute-conditioned VAE for zero- and few-shot classification"};
  app.require_subcommand(1);

  SynthSpec synth;
  std::string synth_config, synth_out;
  std::optional<std::uint64_t> synth_seed;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--config", synth_config, "synthetic spec (key = value)")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", synth_out, "dataset directory")->required();
  synth_cmd->add_option("--seed", synth_seed, "overrides the spec seed");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model and evaluate it");
  add_train_options(train_cmd, train_args, false);

  TrainArgs fewshot_args;
  auto* fewshot_cmd = app.add_subcommand("fewshot", "fine-tune on k labeled unseen examples");
  add_train_options(fewshot_cmd, fewshot_args, true);

  std::string eval_checkpoint, eval_data, eval_out, eval_candidates = "unseen";
  auto* eval_cmd = app.add_subcommand("eval", "accuracy of a checkpoint on unseen test rows");
  eval_cmd->add_option("--checkpoint", eval_checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
  eval_cmd->add_option("--candidates", eval_candidates, "unseen, seen or all");
  eval_cmd->add_option("--out", eval_out, "write the JSON report here");

  std::uint64_t gc_seed = 0;
  double gc_tolerance = 1e-4;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check on a small model");
  gc_cmd->add_option("--seed", gc_seed);
  gc_cmd->add_option("--tolerance", gc_tolerance, "largest accepted relative error");

  std::string export_checkpoint, export_data, export_out;
  auto* export_cmd = app.add_subcommand("export", "write latent means and reconstructions");
  export_cmd->add_option("--checkpoint", export_checkpoint)->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--data", export_data, "dataset directory")->required();
  export_cmd->add_option("--out", export_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      if (!synth_config.empty()) synth = parse_synth_spec(read_file(synth_config));
      if (synth_seed) synth.seed = *synth_seed;
      synth.validate();
      const Dataset ds = synth_generate(synth);
      save_dataset(ds, synth_out);
      std::printf("wrote %zu examples (noise sd %.6g) to %s\n", ds.size(), synth_noise_sd(synth),
                  synth_out.c_str());
      return 0;
    }
    if (*train_cmd) return run_train_command(train_args, false);
    if (*fewshot_cmd) return run_train_command(fewshot_args, true);
    if (*eval_cmd) {
      const ModelParams params = load_checkpoint(eval_checkpoint);
      const Dataset ds = load_dataset_dir(eval_data);
      const ClassSet candidates = candidates_for(ds, eval_candidates);
      const auto rows = eval_candidates == "seen" ? ds.rows_in(Split::kTrain) : ds.unseen_test_rows();
      const EvalReport report = evaluate(params, ds.examples(rows), candidates);
      const std::string text = to_json(report).dump(2) + "\n";
      if (eval_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream(eval_out) << text;
        std::printf("accuracy %.4f on %zu examples\n", report.accuracy, report.total);
      }
      return 0;
    }
    if (*gc_cmd) {
      const GradCheckSummary s = run_gradcheck(gc_seed);
      std::printf("supervised   max rel error %.3e over %zu entries\n", s.inductive.max_rel_error,
                  s.inductive.entries_checked);
      std::printf("transductive max rel error %.3e over %zu entries\n",
                  s.transductive.max_rel_error, s.transductive.entries_checked);
      const bool ok = s.inductive.max_rel_error < gc_tolerance &&
                      s.transductive.max_rel_error < gc_tolerance;
      return ok ? 0 : 1;
    }
    if (*export_cmd) {
      export_embeddings(load_checkpoint(export_checkpoint), load_dataset_dir(export_data),
                        export_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
