#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dgzsl/gaussian.hpp"
#include "dgzsl/matrix.hpp"
#include "dgzsl/tape.hpp"

namespace dgzsl {

using Rng = std::mt19937_64;

enum class Mode { kTrain, kEval };

/// Fully connected layer y = x * weight + bias, weight is in x out.
struct Dense {
  Matrix weight;
  Matrix bias;  // 1 x out

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
};

/// Stack of ReLU hidden layers with inverted dropout in train mode.
struct MlpParams {
  std::vector<Dense> hidden;
  double keep_prob = 1.0;

  /// Checks that layer dimensions chain and keep_prob is in (0, 1].
  void validate(std::size_t input_dim) const;
  /// Output width of the trunk given its input width.
  std::size_t output_dim(std::size_t input_dim) const;
};

/// q(z|x): shared trunk with separate mean and log-variance heads.
struct EncoderParams {
  MlpParams trunk;
  Dense mean_head;
  Dense logvar_head;

  std::size_t input_dim() const;
  std::size_t latent_dim() const { return mean_head.out_dim(); }
};

/// p(x|z): trunk followed by a linear output layer giving the mean of x.
struct DecoderParams {
  MlpParams trunk;
  Dense output;

  std::size_t latent_dim() const;
  std::size_t output_dim() const { return output.out_dim(); }
};

/// p(z|a) = N(w_mean a, diag(exp(w_logvar a))). Both maps are L x M and
/// carry no bias.
struct PriorParams {
  Matrix w_mean;
  Matrix w_logvar;

  std::size_t latent_dim() const { return w_mean.rows(); }
  std::size_t attribute_dim() const { return w_mean.cols(); }
};

struct Architecture {
  std::size_t input_dim = 0;
  std::size_t latent_dim = 100;
  std::size_t attribute_dim = 0;
  std::vector<std::size_t> hidden = {1000, 1000};
  double keep_prob = 0.8;
};

struct ModelParams {
  EncoderParams encoder;
  DecoderParams decoder;
  PriorParams prior;

  std::size_t input_dim() const { return encoder.input_dim(); }
  std::size_t latent_dim() const { return encoder.latent_dim(); }
  std::size_t attribute_dim() const { return prior.attribute_dim(); }

  /// Every tensor with a stable name, in a fixed order shared by the
  /// optimizer, gradient checker and checkpoint format.
  std::vector<std::pair<std::string, Matrix*>> tensors();
  std::vector<std::pair<std::string, const Matrix*>> tensors() const;

  /// Throws ShapeError when any shapes are inconsistent.
  void validate() const;
};

/// Glorot-uniform weights, zero biases. The encoder log-variance head and
/// the prior log-variance map start at zero so every variance starts at 1.
ModelParams init_model(const Architecture& arch, Rng& rng);

// Tape bindings --------------------------------------------------------

struct DenseVars {
  Var weight;
  Var bias;
};

struct MlpVars {
  std::vector<DenseVars> hidden;
  double keep_prob = 1.0;
};

struct EncoderVars {
  MlpVars trunk;
  DenseVars mean_head;
  DenseVars logvar_head;
};

struct DecoderVars {
  MlpVars trunk;
  DenseVars output;
};

struct PriorVars {
  Var w_mean;
  Var w_logvar;
};

struct ModelVars {
  EncoderVars encoder;
  DecoderVars decoder;
  PriorVars prior;
  /// Leaves in ModelParams::tensors() order.
  std::vector<Var> leaves;
};

/// Places every model tensor on the tape, as parameters when `trainable`.
ModelVars bind(Tape& tape, const ModelParams& params, bool trainable = true);

/// Collects d(output)/d(tensor) for every leaf, after Tape::backward.
std::vector<Matrix> leaf_grads(const Tape& tape, const ModelVars& vars);

struct GaussianVars {
  Var mean;
  Var logvar;
};

/// Batched encoder: x is n x D, result rows are per-example posteriors.
/// `rng` is required in train mode when keep_prob < 1.
GaussianVars encode(const EncoderVars& enc, Var x, Mode mode, Rng* rng);
/// Batched decoder: z is n x L, returns n x D reconstruction means.
Var decode(const DecoderVars& dec, Var z, Mode mode, Rng* rng);
/// Class priors for attribute rows (c x M), one Gaussian per row.
GaussianVars class_prior(const PriorVars& prior, Var attributes);

// Value-level evaluation (eval mode, no dropout) -----------------------

struct BatchGaussian {
  Matrix mean;
  Matrix logvar;

  DiagGaussian row(std::size_t i) const;
};

DiagGaussian encode(std::span<const double> x, const EncoderParams& enc);
BatchGaussian encode_batch(const Matrix& x, const EncoderParams& enc);
std::vector<double> decode(std::span<const double> z, const DecoderParams& dec);
Matrix decode_batch(const Matrix& z, const DecoderParams& dec);
DiagGaussian class_prior(std::span<const double> attributes, const PriorParams& prior);
BatchGaussian class_prior_batch(const Matrix& attributes, const PriorParams& prior);

}  // namespace dgzsl
