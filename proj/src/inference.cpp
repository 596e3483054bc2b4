#include "dgzsl/inference.hpp"

#include <algorithm>

#include "dgzsl/error.hpp"
#include "dgzsl/inductive.hpp"

namespace dgzsl {

std::size_t argmin_by_id(std::span<const double> scores, std::span<const int> ids) {
  if (scores.empty() || scores.size() != ids.size()) {
    throw DataError("argmin_by_id: need one score per class id and at least one class");
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] < scores[best] || (scores[c] == scores[best] && ids[c] < ids[best])) best = c;
  }
  return best;
}

Prediction predict_zsl(std::span<const double> x, const ClassSet& candidates,
                       const ModelParams& params) {
  if (candidates.size() == 0) throw DataError("predict_zsl: empty candidate set");
  Prediction p;
  p.posterior = encode(x, params.encoder);
  const BatchGaussian priors = class_prior_batch(candidates.attributes, params.prior);
  p.kl_scores.reserve(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    p.kl_scores.push_back(kl_diag(p.posterior, priors.row(c)));
  }
  p.label = candidates.ids[argmin_by_id(p.kl_scores, candidates.ids)];
  return p;
}

int predict_via_bound(std::span<const double> x, const ClassSet& candidates,
                      const ModelParams& params, std::span<const double> noise) {
  if (candidates.size() == 0) throw DataError("predict_via_bound: empty candidate set");
  std::vector<double> negated(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    negated[c] = -elbo_class(x, candidates.attributes.row(c), params, noise).total;
  }
  return candidates.ids[argmin_by_id(negated, candidates.ids)];
}

std::vector<int> predict_labels(const Matrix& features, const ClassSet& candidates,
                                const ModelParams& params) {
  if (candidates.size() == 0) throw DataError("predict_labels: empty candidate set");
  const BatchGaussian q = encode_batch(features, params.encoder);
  const BatchGaussian priors = class_prior_batch(candidates.attributes, params.prior);
  std::vector<DiagGaussian> prior_rows;
  for (std::size_t c = 0; c < candidates.size(); ++c) prior_rows.push_back(priors.row(c));

  std::vector<int> labels(features.rows());
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const DiagGaussian posterior = q.row(i);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      scores[c] = kl_diag(posterior, prior_rows[c]);
    }
    labels[i] = candidates.ids[argmin_by_id(scores, candidates.ids)];
  }
  return labels;
}

EvalReport evaluate(const ModelParams& params, const Examples& data, const ClassSet& candidates) {
  EvalReport report;
  report.classes = candidates.ids;
  report.confusion.assign(candidates.size(), std::vector<std::size_t>(candidates.size(), 0));
  if (data.size() == 0) return report;
  const std::vector<int> predicted = predict_labels(data.features, candidates, params);
  for (std::size_t i = 0; i < data.size(); ++i) {
    ++report.total;
    if (predicted[i] == data.labels[i]) ++report.correct;
    if (candidates.contains(data.labels[i])) {
      ++report.confusion[candidates.position(data.labels[i])][candidates.position(predicted[i])];
    }
  }
  report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.total);
  return report;
}

ModelParams fewshot_finetune(ModelParams model, const Examples& labeled, const Dataset& ds,
                             const TrainConfig& config, Rng& rng, const EpochObserver& observer) {
  if (labeled.size() == 0) return model;
  for (int y : labeled.labels) {
    if (std::find(ds.unseen.begin(), ds.unseen.end(), y) == ds.unseen.end()) {
      throw DataError("fewshot: label " + std::to_string(y) + " is not an unseen class");
    }
  }
  const ClassSet classes = config.fewshot_include_seen ? ds.all_classes() : ds.unseen_classes();
  train_supervised(model, labeled, classes, config.inductive_options(),
                   PhaseSettings::from(config, "fewshot", config.fewshot_epochs), rng, observer);
  return model;
}

}  // namespace dgzsl
