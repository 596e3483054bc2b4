#pragma once

#include <vector>

#include "dgzsl/classes.hpp"
#include "dgzsl/inductive.hpp"
#include "dgzsl/networks.hpp"

namespace dgzsl {

/// Soft class probabilities q(x_i, c) over the unseen classes, one row per
/// unlabeled input, plus the class marginals g(c) = sum_i q(x_i, c).
struct AssignmentMatrix {
  Matrix values;
  std::vector<double> class_marginals;
};

/// Sharpened self-training target p(x_i, c).
struct TargetMatrix {
  Matrix values;
};

/// Row-wise softmax of -kl (n x U), computed through log-sum-exp.
/// Throws DataError when U < 2.
AssignmentMatrix assignments_from_kl(const Matrix& kl);

/// Soft assignment of unlabeled inputs to the unseen classes, encoder in
/// eval mode.
AssignmentMatrix soft_assign(const Matrix& unlabeled, const ClassSet& unseen,
                             const ModelParams& params);

/// p_ic = (q_ic^2 / g_c) / sum_c' (q_ic'^2 / g_c'). Columns with g_c = 0
/// get probability 0; a row with nothing left throws DataError.
TargetMatrix sharpen(const AssignmentMatrix& q);

/// sum_i sum_c p_ic log(p_ic / q_ic), with 0 log(0 / q) = 0.
/// Throws DataError when p_ic > 0 and q_ic = 0.
double kl_P_Q(const TargetMatrix& p, const AssignmentMatrix& q);

/// Unlabeled inputs, their frozen targets (rows of P) and reparameterization
/// noise.
struct UnlabeledBatch {
  Matrix features;
  Matrix targets;
  Matrix noise;
};

struct TransductiveOptions {
  InductiveOptions inductive;
  /// Unlabeled term is reconstruction only, without KL(P || Q).
  bool recon_only_unlabeled = false;
};

/// Batch means. total == labeled.total + unlabeled; unlabeled ==
/// unlabeled_reconstruction - kl_PQ.
struct TransductiveBreakdown {
  ObjectiveBreakdown labeled;
  double unlabeled_reconstruction = 0.0;
  double kl_PQ = 0.0;
  double unlabeled = 0.0;
  double total = 0.0;
};

struct TransductiveResult {
  TransductiveBreakdown breakdown;
  std::vector<Matrix> grads;
};

/// Combined objective: supervised term on the labeled batch plus the
/// unlabeled term. Targets are constants; Q is recomputed from the current
/// parameters. An empty unlabeled batch reduces to inductive_objective.
TransductiveResult transductive_objective(const ModelParams& params, const LabeledBatch& labeled,
                                          const ClassSet& seen, const UnlabeledBatch& unlabeled,
                                          const ClassSet& unseen,
                                          const TransductiveOptions& options,
                                          Mode mode = Mode::kEval, Rng* rng = nullptr);

}  // namespace dgzsl
