#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dgzsl/classes.hpp"
#include "dgzsl/config.hpp"
#include "dgzsl/data.hpp"
#include "dgzsl/gaussian.hpp"
#include "dgzsl/networks.hpp"
#include "dgzsl/training.hpp"

namespace dgzsl {

struct Prediction {
  int label = -1;
  /// KL(q(z|x) || p(z|A_c)) per candidate, in candidate order.
  std::vector<double> kl_scores;
  DiagGaussian posterior;
};

/// Index of the smallest score; ties go to the lowest class id.
std::size_t argmin_by_id(std::span<const double> scores, std::span<const int> ids);

/// Candidate whose class prior is closest in KL to the eval-mode posterior.
/// Throws DataError on an empty candidate set.
Prediction predict_zsl(std::span<const double> x, const ClassSet& candidates,
                       const ModelParams& params);

/// Candidate maximizing the single-sample lower bound, with the same noise
/// for every candidate. Ties go to the lowest class id.
int predict_via_bound(std::span<const double> x, const ClassSet& candidates,
                      const ModelParams& params, std::span<const double> noise);

/// predict_zsl labels for every row of `features`.
std::vector<int> predict_labels(const Matrix& features, const ClassSet& candidates,
                                const ModelParams& params);

struct EvalReport {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::vector<int> classes;
  /// confusion[true][predicted], indexed by position in `classes`.
  std::vector<std::vector<std::size_t>> confusion;
};

/// Top-1 accuracy of predict_zsl over `data` against `candidates`.
EvalReport evaluate(const ModelParams& params, const Examples& data, const ClassSet& candidates);

/// Continues maximizing the supervised objective on labeled unseen-class
/// examples. The margin term runs over the unseen classes, plus the seen
/// ones when config.fewshot_include_seen. An empty set returns the model
/// unchanged.
ModelParams fewshot_finetune(ModelParams model, const Examples& labeled, const Dataset& ds,
                             const TrainConfig& config, Rng& rng,
                             const EpochObserver& observer = {});

}  // namespace dgzsl
