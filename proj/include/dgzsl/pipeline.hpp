#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgzsl/config.hpp"
#include "dgzsl/data.hpp"
#include "dgzsl/gradcheck.hpp"
#include "dgzsl/inference.hpp"
#include "dgzsl/networks.hpp"

namespace dgzsl {

inline constexpr const char* kVersion = "1.0.0";

/// Independent random stream for one stage of a run.
Rng stage_rng(std::uint64_t seed, std::uint64_t stage);

struct RunHooks {
  /// Start from these parameters and skip the supervised seen-class stage.
  const ModelParams* pretrained = nullptr;
  /// One deterministic JSON object per epoch.
  std::function<void(const nlohmann::json&)> on_metrics;
  /// Wall-clock seconds per epoch, kept apart so metrics stay reproducible.
  std::function<void(const nlohmann::json&)> on_timing;
};

struct RunResult {
  ModelParams params;
  EvalReport report;
  /// Dataset rows the accuracy was measured on.
  std::vector<std::size_t> eval_rows;
  std::vector<nlohmann::json> metrics;
};

/// Trains per config.regime and evaluates on the unseen-class test rows
/// (the unlabeled pool for few-shot runs).
RunResult run_pipeline(const TrainConfig& config, const Dataset& ds, const RunHooks& hooks = {});

/// JSON line for one epoch (no wall-clock fields).
nlohmann::json metrics_json(const EpochRecord& record, std::uint64_t seed, double accuracy);
nlohmann::json to_json(const EvalReport& report);

/// Writes config.cfg, metrics.jsonl, timings.jsonl, checkpoint.bin and
/// summary.json to `out_dir`. Metric lines are flushed as produced.
RunResult run_train(const TrainConfig& config, const Dataset& ds,
                    const std::filesystem::path& out_dir, const ModelParams* pretrained = nullptr);

struct GradCheckSummary {
  GradCheckReport inductive;
  GradCheckReport transductive;
};

/// Finite-difference check of the supervised and combined objectives on a
/// small random model (D = 8, L = 4, hidden = 16, S = 4, U = 3), dropout
/// off and noise fixed.
GradCheckSummary run_gradcheck(std::uint64_t seed, double epsilon = 1e-5);

/// Writes inputs.bin, latent.bin (posterior means) and recon.bin
/// (decoder output at the posterior mean), aligned with the dataset rows.
void export_embeddings(const ModelParams& params, const Dataset& ds,
                       const std::filesystem::path& out_dir);

}  // namespace dgzsl
