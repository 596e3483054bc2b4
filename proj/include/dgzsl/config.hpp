#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dgzsl/data.hpp"
#include "dgzsl/inductive.hpp"
#include "dgzsl/networks.hpp"
#include "dgzsl/transductive.hpp"

namespace dgzsl {

enum class Regime { kInductive, kTransductive, kFewShot };
enum class TargetRefresh { kEpoch, kBatch };

const char* to_string(Regime r);
Regime parse_regime(const std::string& text);

/// All hyperparameters of a training run. Defaults follow the published
/// architecture (two 1000-unit ReLU layers, keep probability 0.8, L = 100,
/// lambda = 1) and Adam at 1e-3.
struct TrainConfig {
  Regime regime = Regime::kInductive;
  double lambda = 1.0;
  std::size_t latent_dim = 100;
  std::vector<std::size_t> hidden = {1000, 1000};
  double keep_prob = 0.8;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  std::size_t batch_size = 64;
  /// Supervised epochs on the seen classes; also the pre-training length
  /// for the transductive and few-shot regimes.
  std::size_t epochs = 200;
  std::size_t transductive_epochs = 50;
  std::size_t fewshot_epochs = 50;
  std::size_t fewshot_k = 5;
  /// Few-shot margin term also covers the seen classes.
  bool fewshot_include_seen = false;
  /// After few-shot fine-tuning, run the transductive phase on the
  /// remaining unlabeled pool.
  bool fewshot_transductive = false;
  TargetRefresh target_refresh = TargetRefresh::kEpoch;
  std::uint64_t seed = 0;
  bool no_recon = false;
  bool recon_only_unlabeled = false;
  bool exclude_true_class = false;

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  Architecture architecture(std::size_t input_dim, std::size_t attribute_dim) const;
  InductiveOptions inductive_options() const;
  TransductiveOptions transductive_options() const;

  /// Flat "key = value" text that parse_config reads back unchanged.
  std::string to_text() const;
};

/// Parses "key = value" lines ('#' starts a comment) on top of defaults.
/// Unknown keys, duplicates and malformed values throw ConfigError.
TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);

/// Reads a synthetic-data config (keys seen, unseen, attribute_dim,
/// feature_dim, samples_per_class, noise_sd, seed).
SynthSpec parse_synth_spec(const std::string& text);

}  // namespace dgzsl
