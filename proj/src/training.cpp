#include "dgzsl/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dgzsl/error.hpp"

namespace dgzsl {

Adam::Adam(double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::ascend(ModelParams& params, const std::vector<Matrix>& grads) {
  auto tensors = params.tensors();
  if (grads.size() != tensors.size()) {
    throw ShapeError("Adam: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(tensors.size()) + " tensors");
  }
  if (m_.empty()) {
    for (const auto& [name, t] : tensors) {
      m_.emplace_back(t->rows(), t->cols());
      v_.emplace_back(t->rows(), t->cols());
    }
  }
  ++step_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    Matrix& p = *tensors[t].second;
    const Matrix& g = grads[t];
    if (!g.same_shape(p)) {
      throw ShapeError("Adam: gradient " + g.shape_string() + " for tensor " + tensors[t].first +
                       " of shape " + p.shape_string());
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g.data()[i];
      double& m = m_[t].data()[i];
      double& v = v_[t].data()[i];
      m = beta1_ * m + (1.0 - beta1_) * gi;
      v = beta2_ * v + (1.0 - beta2_) * gi * gi;
      p.data()[i] += lr_ * (m / correction1) / (std::sqrt(v / correction2) + eps_);
    }
  }
}

PhaseSettings PhaseSettings::from(const TrainConfig& config, std::string name,
                                  std::size_t epochs) {
  PhaseSettings s;
  s.name = std::move(name);
  s.epochs = epochs;
  s.batch_size = config.batch_size;
  s.learning_rate = config.learning_rate;
  s.beta1 = config.adam_beta1;
  s.beta2 = config.adam_beta2;
  return s;
}

Matrix standard_normal(std::size_t n, std::size_t dims, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(n, dims);
  for (double& v : m.data()) v = gauss(rng);
  return m;
}

namespace {

LabeledBatch make_batch(const Examples& data, std::span<const std::size_t> rows,
                        std::size_t latent_dim, Rng& rng) {
  LabeledBatch b;
  b.features = gather_rows(data.features, rows);
  b.labels.reserve(rows.size());
  for (std::size_t r : rows) b.labels.push_back(data.labels[r]);
  b.noise = standard_normal(rows.size(), latent_dim, rng);
  return b;
}

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void accumulate(ObjectiveBreakdown& acc, const ObjectiveBreakdown& b) {
  acc.reconstruction += b.reconstruction;
  acc.kl_true_class += b.kl_true_class;
  acc.margin_R += b.margin_R;
  acc.total += b.total;
  acc.lambda = b.lambda;
}

void divide(ObjectiveBreakdown& acc, double n) {
  acc.reconstruction /= n;
  acc.kl_true_class /= n;
  acc.margin_R /= n;
  acc.total /= n;
}

}  // namespace

void train_supervised(ModelParams& params, const Examples& data, const ClassSet& classes,
                      const InductiveOptions& options, const PhaseSettings& phase, Rng& rng,
                      const EpochObserver& observer) {
  if (data.size() == 0 || phase.epochs == 0) return;
  for (int y : data.labels) {
    if (!classes.contains(y)) {
      throw DataError("training label " + std::to_string(y) + " is outside the active classes");
    }
  }
  Adam adam(phase.learning_rate, phase.beta1, phase.beta2);
  const std::size_t latent = params.latent_dim();
  const std::size_t batch = std::min(phase.batch_size, data.size());

  for (std::size_t epoch = 1; epoch <= phase.epochs; ++epoch) {
    const auto order = shuffled(data.size(), rng);
    EpochRecord record;
    record.phase = phase.name;
    record.epoch = epoch;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      LabeledBatch b = make_batch(data, rows, latent, rng);
      ObjectiveResult r = inductive_objective(params, b, classes, options, Mode::kTrain, &rng);
      adam.ascend(params, r.grads);
      accumulate(record.labeled, r.breakdown);
      ++steps;
    }
    divide(record.labeled, static_cast<double>(steps));
    record.objective = record.labeled.total;
    if (observer) observer(record, params);
  }
}

void train_transductive(ModelParams& params, const Examples& labeled, const ClassSet& seen,
                        const Matrix& unlabeled, const ClassSet& unseen,
                        const TransductiveOptions& options, TargetRefresh refresh,
                        const PhaseSettings& phase, Rng& rng, const EpochObserver& observer) {
  if (labeled.size() == 0 || phase.epochs == 0) return;
  for (int y : labeled.labels) {
    if (!seen.contains(y)) {
      throw DataError("training label " + std::to_string(y) + " is outside the seen classes");
    }
  }
  Adam adam(phase.learning_rate, phase.beta1, phase.beta2);
  const std::size_t latent = params.latent_dim();
  const std::size_t batch = std::min(phase.batch_size, labeled.size());
  const std::size_t steps_per_epoch = (labeled.size() + batch - 1) / batch;
  const std::size_t unlabeled_batch =
      (unlabeled.rows() + steps_per_epoch - 1) / std::max<std::size_t>(steps_per_epoch, 1);
  const bool needs_targets = !options.recon_only_unlabeled && unlabeled.rows() > 0;

  for (std::size_t epoch = 1; epoch <= phase.epochs; ++epoch) {
    Matrix targets;
    if (needs_targets) targets = sharpen(soft_assign(unlabeled, unseen, params)).values;
    const auto order = shuffled(labeled.size(), rng);
    const auto pool = shuffled(unlabeled.rows(), rng);

    EpochRecord record;
    record.phase = phase.name;
    record.epoch = epoch;
    record.has_unlabeled = true;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      const std::size_t start = step * batch;
      const std::size_t end = std::min(order.size(), start + batch);
      LabeledBatch lb =
          make_batch(labeled, std::span<const std::size_t>(order.data() + start, end - start),
                     latent, rng);

      const std::size_t ustart = std::min(pool.size(), step * unlabeled_batch);
      const std::size_t uend = std::min(pool.size(), ustart + unlabeled_batch);
      const std::span<const std::size_t> urows(pool.data() + ustart, uend - ustart);
      if (needs_targets && refresh == TargetRefresh::kBatch && step > 0) {
        targets = sharpen(soft_assign(unlabeled, unseen, params)).values;
      }
      UnlabeledBatch ub;
      ub.features = gather_rows(unlabeled, urows);
      ub.targets = needs_targets ? gather_rows(targets, urows) : Matrix(urows.size(), unseen.size());
      ub.noise = standard_normal(urows.size(), latent, rng);

      TransductiveResult r = transductive_objective(params, lb, seen, ub, unseen, options,
                                                    Mode::kTrain, &rng);
      adam.ascend(params, r.grads);
      accumulate(record.labeled, r.breakdown.labeled);
      record.unlabeled_reconstruction += r.breakdown.unlabeled_reconstruction;
      record.kl_PQ += r.breakdown.kl_PQ;
      record.unlabeled += r.breakdown.unlabeled;
    }
    const double n = static_cast<double>(steps_per_epoch);
    divide(record.labeled, n);
    record.unlabeled_reconstruction /= n;
    record.kl_PQ /= n;
    record.unlabeled /= n;
    record.objective = record.labeled.total + record.unlabeled;
    if (observer) observer(record, params);
  }
}

}  // namespace dgzsl
