#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "dgzsl/config.hpp"
#include "dgzsl/data.hpp"
#include "dgzsl/inductive.hpp"
#include "dgzsl/networks.hpp"
#include "dgzsl/transductive.hpp"

namespace dgzsl {

/// Adam with bias correction. Steps *up* the gradient: the objectives in
/// this library are maximized.
class Adam {
 public:
  Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void ascend(ModelParams& params, const std::vector<Matrix>& grads);
  std::size_t steps() const { return step_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t step_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

/// Means over an epoch's minibatches.
struct EpochRecord {
  std::string phase;
  std::size_t epoch = 0;
  ObjectiveBreakdown labeled;
  bool has_unlabeled = false;
  double unlabeled_reconstruction = 0.0;
  double kl_PQ = 0.0;
  double unlabeled = 0.0;
  double objective = 0.0;
};

using EpochObserver = std::function<void(const EpochRecord&, const ModelParams&)>;

struct PhaseSettings {
  std::string name;
  std::size_t epochs = 0;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;

  static PhaseSettings from(const TrainConfig& config, std::string name, std::size_t epochs);
};

/// Minibatch Adam on the supervised objective over `classes`. Dropout is
/// active; one fresh noise sample per example per step.
void train_supervised(ModelParams& params, const Examples& data, const ClassSet& classes,
                      const InductiveOptions& options, const PhaseSettings& phase, Rng& rng,
                      const EpochObserver& observer = {});

/// Each step pairs a labeled minibatch with a slice of the shuffled
/// unlabeled pool sized so one epoch visits every unlabeled input once.
/// Targets P are rebuilt from the full pool at the configured cadence and
/// held constant in between.
void train_transductive(ModelParams& params, const Examples& labeled, const ClassSet& seen,
                        const Matrix& unlabeled, const ClassSet& unseen,
                        const TransductiveOptions& options, TargetRefresh refresh,
                        const PhaseSettings& phase, Rng& rng,
                        const EpochObserver& observer = {});

/// n x dims matrix of independent N(0, 1) draws.
Matrix standard_normal(std::size_t n, std::size_t dims, Rng& rng);

}  // namespace dgzsl
