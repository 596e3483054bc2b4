#pragma once

#include <span>
#include <vector>

#include "dgzsl/classes.hpp"
#include "dgzsl/gaussian.hpp"
#include "dgzsl/networks.hpp"

namespace dgzsl {

/// Per-term values of the supervised objective, averaged over a batch.
/// total == reconstruction - kl_true_class + lambda * margin_R.
struct ObjectiveBreakdown {
  double reconstruction = 0.0;
  double kl_true_class = 0.0;
  double margin_R = 0.0;
  double total = 0.0;
  double lambda = 0.0;
};

struct InductiveOptions {
  double lambda = 1.0;
  /// false drops the reconstruction term (the no-recon ablation).
  bool use_reconstruction = true;
  /// Leave the true class out of the margin log-sum-exp.
  bool exclude_true_class = false;
};

/// Labeled examples with their reparameterization noise (n x L).
struct LabeledBatch {
  Matrix features;
  std::vector<int> labels;
  Matrix noise;
};

struct InductiveTerms {
  Var total;
  Var reconstruction;
  Var kl_true_class;
  Var margin;
};

/// Builds the batch-mean objective on `vars`' tape. Every label must be in
/// `classes`, which is also the set the margin term runs over.
InductiveTerms build_inductive(const ModelVars& vars, const LabeledBatch& batch,
                               const ClassSet& classes, const InductiveOptions& options,
                               Mode mode, Rng* rng);

struct ObjectiveResult {
  ObjectiveBreakdown breakdown;
  /// d(total)/d(tensor) in ModelParams::tensors() order.
  std::vector<Matrix> grads;
};

/// Value and gradient of the supervised objective (to be maximized).
ObjectiveResult inductive_objective(const ModelParams& params, const LabeledBatch& batch,
                                    const ClassSet& classes, const InductiveOptions& options,
                                    Mode mode = Mode::kEval, Rng* rng = nullptr);

/// Single-example lower bound: one-sample reconstruction term minus
/// KL(q(z|x) || p(z|a)). Only reconstruction, kl_true_class and total are set.
ObjectiveBreakdown elbo_class(std::span<const double> x, std::span<const double> attributes,
                              const ModelParams& params, std::span<const double> noise);

/// -log sum_c exp(-KL(q || p(z|A_c))) over the rows of `class_attributes`,
/// skipping row `excluded` when given.
double margin_R(const DiagGaussian& q, const Matrix& class_attributes, const PriorParams& prior,
                std::size_t excluded = kNoColumn);

}  // namespace dgzsl
