#include "dgzsl/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "dgzsl/error.hpp"

namespace dgzsl {

namespace {

void require_length(const char* op, std::size_t a, std::size_t b) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": length mismatch " + std::to_string(a) + " vs " +
                     std::to_string(b));
  }
}

}  // namespace

DiagGaussian::DiagGaussian(std::vector<double> m, std::vector<double> lv)
    : mean(std::move(m)), logvar(std::move(lv)) {
  require_length("DiagGaussian", mean.size(), logvar.size());
}

DiagGaussian DiagGaussian::standard(std::size_t dims) {
  return DiagGaussian(std::vector<double>(dims, 0.0), std::vector<double>(dims, 0.0));
}

double kl_diag(const DiagGaussian& q, const DiagGaussian& p) {
  require_length("kl_diag", q.dims(), p.dims());
  double acc = 0.0;
  for (std::size_t l = 0; l < q.dims(); ++l) {
    const double diff = p.mean[l] - q.mean[l];
    acc += std::exp(q.logvar[l] - p.logvar[l]) + diff * diff * std::exp(-p.logvar[l]) - 1.0 +
           (p.logvar[l] - q.logvar[l]);
  }
  return 0.5 * acc;
}

std::vector<double> sample_reparam(const DiagGaussian& g, std::span<const double> noise) {
  require_length("sample_reparam", g.dims(), noise.size());
  std::vector<double> z(g.dims());
  for (std::size_t l = 0; l < z.size(); ++l) {
    z[l] = g.mean[l] + std::exp(0.5 * g.logvar[l]) * noise[l];
  }
  return z;
}

double gauss_loglik(std::span<const double> x, std::span<const double> mean) {
  require_length("gauss_loglik", x.size(), mean.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - mean[i];
    sq += r * r;
  }
  return -0.5 * sq - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
}

Var sample_reparam(Var mean, Var logvar, Var noise) {
  if (!mean.value().same_shape(noise.value())) {
    throw ShapeError("sample_reparam: noise " + noise.value().shape_string() +
                     " does not match mean " + mean.value().shape_string());
  }
  return mean + exp(scale(logvar, 0.5)) * noise;
}

Var gauss_loglik_rows(Var x, Var mean) {
  const double dims = static_cast<double>(x.cols());
  return add_scalar(scale(row_sum(square(x - mean)), -0.5),
                    -0.5 * dims * std::log(2.0 * std::numbers::pi));
}

}  // namespace dgzsl
