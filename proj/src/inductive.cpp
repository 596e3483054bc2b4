#include "dgzsl/inductive.hpp"

#include "dgzsl/error.hpp"

namespace dgzsl {

InductiveTerms build_inductive(const ModelVars& vars, const LabeledBatch& batch,
                               const ClassSet& classes, const InductiveOptions& options,
                               Mode mode, Rng* rng) {
  const std::size_t n = batch.features.rows();
  if (n == 0) throw DataError("inductive objective: empty batch");
  if (batch.labels.size() != n) {
    throw ShapeError("inductive objective: " + std::to_string(batch.labels.size()) +
                     " labels for " + std::to_string(n) + " examples");
  }
  if (classes.size() == 0) throw DataError("inductive objective: empty class set");
  if (options.lambda < 0.0) throw ConfigError("inductive objective: lambda must be >= 0");

  std::vector<std::size_t> targets(n);
  for (std::size_t i = 0; i < n; ++i) targets[i] = classes.position(batch.labels[i]);

  Tape& tape = *vars.leaves.front().tape;
  Var x = tape.constant(batch.features);
  GaussianVars q = encode(vars.encoder, x, mode, rng);
  GaussianVars priors = class_prior(vars.prior, tape.constant(classes.attributes));
  Var kl = kl_pairwise(q.mean, q.logvar, priors.mean, priors.logvar);  // n x C

  InductiveTerms terms;
  terms.kl_true_class = mean(pick(kl, targets));
  std::vector<std::size_t> excluded;
  if (options.exclude_true_class) {
    if (classes.size() < 2) {
      throw DataError("inductive objective: excluding the true class needs at least 2 classes");
    }
    excluded = targets;
  }
  // R = -logsumexp(-KL)
  terms.margin = scale(mean(row_logsumexp(scale(kl, -1.0), std::move(excluded))), -1.0);

  Var total = scale(terms.kl_true_class, -1.0);
  if (options.use_reconstruction) {
    if (!batch.noise.same_shape(q.mean.value())) {
      throw ShapeError("inductive objective: noise " + batch.noise.shape_string() +
                       " does not match posterior " + q.mean.value().shape_string());
    }
    Var z = sample_reparam(q.mean, q.logvar, tape.constant(batch.noise));
    terms.reconstruction = mean(gauss_loglik_rows(x, decode(vars.decoder, z, mode, rng)));
    total = terms.reconstruction + total;
  } else {
    terms.reconstruction = tape.constant(Matrix(1, 1));
  }
  if (options.lambda != 0.0) total = total + scale(terms.margin, options.lambda);
  terms.total = total;
  return terms;
}

ObjectiveResult inductive_objective(const ModelParams& params, const LabeledBatch& batch,
                                    const ClassSet& classes, const InductiveOptions& options,
                                    Mode mode, Rng* rng) {
  Tape tape;
  ModelVars vars = bind(tape, params, true);
  InductiveTerms terms = build_inductive(vars, batch, classes, options, mode, rng);
  tape.backward(terms.total);

  ObjectiveResult result;
  result.breakdown.reconstruction = terms.reconstruction.scalar();
  result.breakdown.kl_true_class = terms.kl_true_class.scalar();
  result.breakdown.margin_R = terms.margin.scalar();
  result.breakdown.total = terms.total.scalar();
  result.breakdown.lambda = options.lambda;
  result.grads = leaf_grads(tape, vars);
  return result;
}

ObjectiveBreakdown elbo_class(std::span<const double> x, std::span<const double> attributes,
                              const ModelParams& params, std::span<const double> noise) {
  Tape tape;
  ModelVars vars = bind(tape, params, false);
  LabeledBatch batch{Matrix::row_vector(x), {0}, Matrix::row_vector(noise)};
  ClassSet single{{0}, Matrix::row_vector(attributes)};
  InductiveOptions options;
  options.lambda = 0.0;
  InductiveTerms terms = build_inductive(vars, batch, single, options, Mode::kEval, nullptr);

  ObjectiveBreakdown out;
  out.reconstruction = terms.reconstruction.scalar();
  out.kl_true_class = terms.kl_true_class.scalar();
  out.total = terms.total.scalar();
  return out;
}

double margin_R(const DiagGaussian& q, const Matrix& class_attributes, const PriorParams& prior,
                std::size_t excluded) {
  if (class_attributes.rows() == 0) throw DataError("margin_R: empty class set");
  const BatchGaussian priors = class_prior_batch(class_attributes, prior);
  std::vector<double> neg_kl;
  neg_kl.reserve(class_attributes.rows());
  for (std::size_t c = 0; c < class_attributes.rows(); ++c) {
    if (c == excluded) continue;
    neg_kl.push_back(-kl_diag(q, priors.row(c)));
  }
  if (neg_kl.empty()) throw DataError("margin_R: no classes left after exclusion");
  return -logsumexp(neg_kl);
}

}  // namespace dgzsl
