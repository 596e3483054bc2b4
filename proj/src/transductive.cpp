#include "dgzsl/transductive.hpp"

#include <cmath>

#include "dgzsl/error.hpp"

namespace dgzsl {

AssignmentMatrix assignments_from_kl(const Matrix& kl) {
  if (kl.cols() < 2) {
    throw DataError("soft assignment needs at least 2 unseen classes, got " +
                    std::to_string(kl.cols()));
  }
  AssignmentMatrix out{Matrix(kl.rows(), kl.cols()), std::vector<double>(kl.cols(), 0.0)};
  std::vector<double> neg(kl.cols());
  for (std::size_t i = 0; i < kl.rows(); ++i) {
    for (std::size_t c = 0; c < kl.cols(); ++c) neg[c] = -kl(i, c);
    const double norm = logsumexp(neg);
    for (std::size_t c = 0; c < kl.cols(); ++c) {
      out.values(i, c) = std::exp(neg[c] - norm);
      out.class_marginals[c] += out.values(i, c);
    }
  }
  return out;
}

AssignmentMatrix soft_assign(const Matrix& unlabeled, const ClassSet& unseen,
                             const ModelParams& params) {
  if (unseen.size() < 2) {
    throw DataError("soft assignment needs at least 2 unseen classes, got " +
                    std::to_string(unseen.size()));
  }
  const BatchGaussian q = encode_batch(unlabeled, params.encoder);
  const BatchGaussian priors = class_prior_batch(unseen.attributes, params.prior);
  Matrix kl(unlabeled.rows(), unseen.size());
  for (std::size_t c = 0; c < unseen.size(); ++c) {
    const DiagGaussian p = priors.row(c);
    for (std::size_t i = 0; i < unlabeled.rows(); ++i) kl(i, c) = kl_diag(q.row(i), p);
  }
  return assignments_from_kl(kl);
}

TargetMatrix sharpen(const AssignmentMatrix& q) {
  const Matrix& v = q.values;
  std::vector<double> g(v.cols(), 0.0);
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t c = 0; c < v.cols(); ++c) g[c] += v(i, c);

  TargetMatrix p{Matrix(v.rows(), v.cols())};
  for (std::size_t i = 0; i < v.rows(); ++i) {
    double norm = 0.0;
    for (std::size_t c = 0; c < v.cols(); ++c) {
      const double s = g[c] > 0.0 ? v(i, c) * (v(i, c) / g[c]) : 0.0;
      p.values(i, c) = s;
      norm += s;
    }
    if (!(norm > 0.0)) {
      throw DataError("sharpen: row " + std::to_string(i) + " is all zero after sharpening");
    }
    for (std::size_t c = 0; c < v.cols(); ++c) p.values(i, c) /= norm;
  }
  return p;
}

double kl_P_Q(const TargetMatrix& p, const AssignmentMatrix& q) {
  if (!p.values.same_shape(q.values)) {
    throw ShapeError("kl_P_Q: P " + p.values.shape_string() + " vs Q " +
                     q.values.shape_string());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double pi = p.values.data()[i];
    const double qi = q.values.data()[i];
    if (pi == 0.0) continue;
    if (qi == 0.0) {
      throw DataError("kl_P_Q: target has mass where Q is zero (infinite divergence)");
    }
    acc += pi * std::log(pi / qi);
  }
  return acc;
}

TransductiveResult transductive_objective(const ModelParams& params, const LabeledBatch& labeled,
                                          const ClassSet& seen, const UnlabeledBatch& unlabeled,
                                          const ClassSet& unseen,
                                          const TransductiveOptions& options, Mode mode,
                                          Rng* rng) {
  TransductiveResult result;
  if (unlabeled.features.rows() == 0) {
    ObjectiveResult ind =
        inductive_objective(params, labeled, seen, options.inductive, mode, rng);
    result.breakdown.labeled = ind.breakdown;
    result.breakdown.total = ind.breakdown.total;
    result.grads = std::move(ind.grads);
    return result;
  }
  const std::size_t n = unlabeled.features.rows();
  if (unlabeled.targets.rows() != n || unlabeled.targets.cols() != unseen.size()) {
    throw ShapeError("transductive objective: targets " + unlabeled.targets.shape_string() +
                     " do not match " + std::to_string(n) + " inputs x " +
                     std::to_string(unseen.size()) + " unseen classes");
  }

  Tape tape;
  ModelVars vars = bind(tape, params, true);
  InductiveTerms sup = build_inductive(vars, labeled, seen, options.inductive, mode, rng);

  Var x = tape.constant(unlabeled.features);
  GaussianVars q = encode(vars.encoder, x, mode, rng);

  Var unlabeled_recon = tape.constant(Matrix(1, 1));
  if (options.inductive.use_reconstruction) {
    if (!unlabeled.noise.same_shape(q.mean.value())) {
      throw ShapeError("transductive objective: noise " + unlabeled.noise.shape_string() +
                       " does not match posterior " + q.mean.value().shape_string());
    }
    Var z = sample_reparam(q.mean, q.logvar, tape.constant(unlabeled.noise));
    unlabeled_recon = mean(gauss_loglik_rows(x, decode(vars.decoder, z, mode, rng)));
  }

  Var kl_pq = tape.constant(Matrix(1, 1));
  if (!options.recon_only_unlabeled) {
    if (unseen.size() < 2) throw DataError("transductive objective: needs at least 2 unseen classes");
    GaussianVars priors = class_prior(vars.prior, tape.constant(unseen.attributes));
    Var neg_kl = scale(kl_pairwise(q.mean, q.logvar, priors.mean, priors.logvar), -1.0);
    Var log_q = add_col(neg_kl, scale(row_logsumexp(neg_kl), -1.0));
    // KL(P||Q) per row = sum_c p log p - sum_c p log q; P is a constant.
    double entropy_term = 0.0;
    for (double p : unlabeled.targets.data()) {
      if (p > 0.0) entropy_term += p * std::log(p);
    }
    Var cross = sum(tape.constant(unlabeled.targets) * log_q);
    kl_pq = scale(add_scalar(scale(cross, -1.0), entropy_term), 1.0 / static_cast<double>(n));
  }

  Var unlabeled_total = unlabeled_recon - kl_pq;
  Var total = sup.total + unlabeled_total;
  tape.backward(total);

  TransductiveBreakdown& b = result.breakdown;
  b.labeled.reconstruction = sup.reconstruction.scalar();
  b.labeled.kl_true_class = sup.kl_true_class.scalar();
  b.labeled.margin_R = sup.margin.scalar();
  b.labeled.total = sup.total.scalar();
  b.labeled.lambda = options.inductive.lambda;
  b.unlabeled_reconstruction = unlabeled_recon.scalar();
  b.kl_PQ = kl_pq.scalar();
  b.unlabeled = unlabeled_total.scalar();
  b.total = total.scalar();
  result.grads = leaf_grads(tape, vars);
  return result;
}

}  // namespace dgzsl
