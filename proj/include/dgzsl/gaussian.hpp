#pragma once

#include <span>
#include <vector>

#include "dgzsl/tape.hpp"

namespace dgzsl {

/// Log-variances are clamped to this range before exponentiation.
inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

/// Diagonal Gaussian N(mean, diag(exp(logvar))).
struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> logvar;

  DiagGaussian() = default;
  /// Throws ShapeError when the lengths differ.
  DiagGaussian(std::vector<double> mean, std::vector<double> logvar);

  /// N(0, I) in `dims` dimensions.
  static DiagGaussian standard(std::size_t dims);

  std::size_t dims() const { return mean.size(); }
};

/// Closed-form KL(q || p) for diagonal Gaussians.
double kl_diag(const DiagGaussian& q, const DiagGaussian& p);

/// z = mean + exp(logvar / 2) * noise.
std::vector<double> sample_reparam(const DiagGaussian& g, std::span<const double> noise);

/// Unit-variance isotropic Gaussian log-density of x around mean.
double gauss_loglik(std::span<const double> x, std::span<const double> mean);

// Batched tape versions: one row per example.

/// Row-wise reparameterized sample; `noise` is normally a constant leaf.
Var sample_reparam(Var mean, Var logvar, Var noise);
/// Per-row unit-variance Gaussian log-density, n x 1.
Var gauss_loglik_rows(Var x, Var mean);

}  // namespace dgzsl
