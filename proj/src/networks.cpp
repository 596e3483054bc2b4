#include "dgzsl/networks.hpp"

#include <cmath>

#include "dgzsl/error.hpp"

namespace dgzsl {

namespace {

void check_dense(const Dense& d, const std::string& name) {
  if (d.bias.rows() != 1 || d.bias.cols() != d.weight.cols()) {
    throw ShapeError(name + ": bias " + d.bias.shape_string() + " does not fit weight " +
                     d.weight.shape_string());
  }
}

Dense glorot_dense(std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Dense d{Matrix(in, out), Matrix(1, out)};
  for (double& w : d.weight.data()) w = dist(rng);
  return d;
}

Matrix glorot_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (double& w : m.data()) w = dist(rng);
  return m;
}

DenseVars bind_dense(Tape& tape, const Dense& d, bool trainable, std::vector<Var>& leaves) {
  auto leaf = [&](const Matrix& m) {
    Var v = trainable ? tape.parameter(m) : tape.constant(m);
    leaves.push_back(v);
    return v;
  };
  DenseVars out;
  out.weight = leaf(d.weight);
  out.bias = leaf(d.bias);
  return out;
}

Var apply_dense(const DenseVars& d, Var x) { return add_row(matmul(x, d.weight), d.bias); }

Var run_trunk(const MlpVars& mlp, Var x, Mode mode, Rng* rng) {
  Var h = x;
  const bool drop = mode == Mode::kTrain && mlp.keep_prob < 1.0;
  if (drop && rng == nullptr) throw Error("dropout in train mode requires a random source");
  for (const DenseVars& layer : mlp.hidden) {
    h = relu(apply_dense(layer, h));
    if (drop) {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      Matrix mask(h.rows(), h.cols());
      const double inv_keep = 1.0 / mlp.keep_prob;
      for (double& m : mask.data()) m = unit(*rng) < mlp.keep_prob ? inv_keep : 0.0;
      h = h * h.tape->constant(std::move(mask));
    }
  }
  return h;
}

void require_cols(const char* op, const Matrix& m, std::size_t expected) {
  if (m.cols() != expected) {
    throw ShapeError(std::string(op) + ": input " + m.shape_string() + " expects " +
                     std::to_string(expected) + " columns");
  }
}

}  // namespace

void MlpParams::validate(std::size_t input_dim) const {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw ShapeError("MlpParams: keep_prob must lie in (0, 1], got " + std::to_string(keep_prob));
  }
  std::size_t width = input_dim;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    check_dense(hidden[i], "hidden layer " + std::to_string(i));
    if (hidden[i].in_dim() != width) {
      throw ShapeError("MlpParams: layer " + std::to_string(i) + " weight " +
                       hidden[i].weight.shape_string() + " does not chain from width " +
                       std::to_string(width));
    }
    width = hidden[i].out_dim();
  }
}

std::size_t MlpParams::output_dim(std::size_t input_dim) const {
  return hidden.empty() ? input_dim : hidden.back().out_dim();
}

std::size_t EncoderParams::input_dim() const {
  return trunk.hidden.empty() ? mean_head.in_dim() : trunk.hidden.front().in_dim();
}

std::size_t DecoderParams::latent_dim() const {
  return trunk.hidden.empty() ? output.in_dim() : trunk.hidden.front().in_dim();
}

std::vector<std::pair<std::string, Matrix*>> ModelParams::tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  auto add_dense = [&](const std::string& name, Dense& d) {
    out.emplace_back(name + ".weight", &d.weight);
    out.emplace_back(name + ".bias", &d.bias);
  };
  for (std::size_t i = 0; i < encoder.trunk.hidden.size(); ++i) {
    add_dense("encoder.hidden" + std::to_string(i), encoder.trunk.hidden[i]);
  }
  add_dense("encoder.mean_head", encoder.mean_head);
  add_dense("encoder.logvar_head", encoder.logvar_head);
  for (std::size_t i = 0; i < decoder.trunk.hidden.size(); ++i) {
    add_dense("decoder.hidden" + std::to_string(i), decoder.trunk.hidden[i]);
  }
  add_dense("decoder.output", decoder.output);
  out.emplace_back("prior.w_mean", &prior.w_mean);
  out.emplace_back("prior.w_logvar", &prior.w_logvar);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> ModelParams::tensors() const {
  auto mutable_view = const_cast<ModelParams*>(this)->tensors();
  std::vector<std::pair<std::string, const Matrix*>> out;
  out.reserve(mutable_view.size());
  for (auto& [name, ptr] : mutable_view) out.emplace_back(std::move(name), ptr);
  return out;
}

void ModelParams::validate() const {
  const std::size_t d = input_dim();
  encoder.trunk.validate(d);
  const std::size_t enc_width = encoder.trunk.output_dim(d);
  check_dense(encoder.mean_head, "encoder.mean_head");
  check_dense(encoder.logvar_head, "encoder.logvar_head");
  if (encoder.mean_head.in_dim() != enc_width || encoder.logvar_head.in_dim() != enc_width ||
      encoder.logvar_head.out_dim() != encoder.mean_head.out_dim()) {
    throw ShapeError("encoder heads " + encoder.mean_head.weight.shape_string() + " / " +
                     encoder.logvar_head.weight.shape_string() + " do not fit trunk width " +
                     std::to_string(enc_width));
  }
  const std::size_t l = latent_dim();
  decoder.trunk.validate(l);
  check_dense(decoder.output, "decoder.output");
  if (decoder.output.in_dim() != decoder.trunk.output_dim(l) || decoder.output.out_dim() != d) {
    throw ShapeError("decoder output " + decoder.output.weight.shape_string() +
                     " does not map trunk width to input dimension " + std::to_string(d));
  }
  if (!prior.w_mean.same_shape(prior.w_logvar) || prior.w_mean.rows() != l) {
    throw ShapeError("prior maps " + prior.w_mean.shape_string() + " / " +
                     prior.w_logvar.shape_string() + " must both be L x M with L = " +
                     std::to_string(l));
  }
}

ModelParams init_model(const Architecture& arch, Rng& rng) {
  if (arch.input_dim == 0 || arch.latent_dim == 0 || arch.attribute_dim == 0) {
    throw ShapeError("init_model: input, latent and attribute dimensions must be positive");
  }
  ModelParams m;
  std::size_t width = arch.input_dim;
  for (std::size_t h : arch.hidden) {
    m.encoder.trunk.hidden.push_back(glorot_dense(width, h, rng));
    width = h;
  }
  m.encoder.trunk.keep_prob = arch.keep_prob;
  m.encoder.mean_head = glorot_dense(width, arch.latent_dim, rng);
  m.encoder.logvar_head = Dense{Matrix(width, arch.latent_dim), Matrix(1, arch.latent_dim)};

  width = arch.latent_dim;
  for (std::size_t h : arch.hidden) {
    m.decoder.trunk.hidden.push_back(glorot_dense(width, h, rng));
    width = h;
  }
  m.decoder.trunk.keep_prob = arch.keep_prob;
  m.decoder.output = glorot_dense(width, arch.input_dim, rng);

  m.prior.w_mean = glorot_matrix(arch.latent_dim, arch.attribute_dim, rng);
  m.prior.w_logvar = Matrix(arch.latent_dim, arch.attribute_dim);
  m.validate();
  return m;
}

ModelVars bind(Tape& tape, const ModelParams& params, bool trainable) {
  ModelVars v;
  for (const Dense& d : params.encoder.trunk.hidden) {
    v.encoder.trunk.hidden.push_back(bind_dense(tape, d, trainable, v.leaves));
  }
  v.encoder.trunk.keep_prob = params.encoder.trunk.keep_prob;
  v.encoder.mean_head = bind_dense(tape, params.encoder.mean_head, trainable, v.leaves);
  v.encoder.logvar_head = bind_dense(tape, params.encoder.logvar_head, trainable, v.leaves);
  for (const Dense& d : params.decoder.trunk.hidden) {
    v.decoder.trunk.hidden.push_back(bind_dense(tape, d, trainable, v.leaves));
  }
  v.decoder.trunk.keep_prob = params.decoder.trunk.keep_prob;
  v.decoder.output = bind_dense(tape, params.decoder.output, trainable, v.leaves);
  v.prior.w_mean = trainable ? tape.parameter(params.prior.w_mean)
                             : tape.constant(params.prior.w_mean);
  v.prior.w_logvar = trainable ? tape.parameter(params.prior.w_logvar)
                               : tape.constant(params.prior.w_logvar);
  v.leaves.push_back(v.prior.w_mean);
  v.leaves.push_back(v.prior.w_logvar);
  return v;
}

std::vector<Matrix> leaf_grads(const Tape& tape, const ModelVars& vars) {
  std::vector<Matrix> out;
  out.reserve(vars.leaves.size());
  for (const Var& leaf : vars.leaves) out.push_back(tape.grad(leaf));
  return out;
}

GaussianVars encode(const EncoderVars& enc, Var x, Mode mode, Rng* rng) {
  const Matrix& w = enc.trunk.hidden.empty() ? enc.mean_head.weight.value()
                                             : enc.trunk.hidden.front().weight.value();
  require_cols("encode", x.value(), w.rows());
  Var h = run_trunk(enc.trunk, x, mode, rng);
  return {apply_dense(enc.mean_head, h),
          clamp(apply_dense(enc.logvar_head, h), kLogVarMin, kLogVarMax)};
}

Var decode(const DecoderVars& dec, Var z, Mode mode, Rng* rng) {
  const Matrix& w = dec.trunk.hidden.empty() ? dec.output.weight.value()
                                             : dec.trunk.hidden.front().weight.value();
  require_cols("decode", z.value(), w.rows());
  return apply_dense(dec.output, run_trunk(dec.trunk, z, mode, rng));
}

GaussianVars class_prior(const PriorVars& prior, Var attributes) {
  require_cols("class_prior", attributes.value(), prior.w_mean.value().cols());
  return {matmul(attributes, transpose(prior.w_mean)),
          clamp(matmul(attributes, transpose(prior.w_logvar)), kLogVarMin, kLogVarMax)};
}

DiagGaussian BatchGaussian::row(std::size_t i) const {
  return DiagGaussian({mean.row(i).begin(), mean.row(i).end()},
                      {logvar.row(i).begin(), logvar.row(i).end()});
}

BatchGaussian encode_batch(const Matrix& x, const EncoderParams& enc) {
  Tape tape;
  std::vector<Var> leaves;
  EncoderVars vars;
  for (const Dense& d : enc.trunk.hidden) vars.trunk.hidden.push_back(bind_dense(tape, d, false, leaves));
  vars.trunk.keep_prob = enc.trunk.keep_prob;
  vars.mean_head = bind_dense(tape, enc.mean_head, false, leaves);
  vars.logvar_head = bind_dense(tape, enc.logvar_head, false, leaves);
  GaussianVars g = encode(vars, tape.constant(x), Mode::kEval, nullptr);
  return {g.mean.value(), g.logvar.value()};
}

DiagGaussian encode(std::span<const double> x, const EncoderParams& enc) {
  return encode_batch(Matrix::row_vector(x), enc).row(0);
}

Matrix decode_batch(const Matrix& z, const DecoderParams& dec) {
  Tape tape;
  std::vector<Var> leaves;
  DecoderVars vars;
  for (const Dense& d : dec.trunk.hidden) vars.trunk.hidden.push_back(bind_dense(tape, d, false, leaves));
  vars.trunk.keep_prob = dec.trunk.keep_prob;
  vars.output = bind_dense(tape, dec.output, false, leaves);
  return decode(vars, tape.constant(z), Mode::kEval, nullptr).value();
}

std::vector<double> decode(std::span<const double> z, const DecoderParams& dec) {
  return decode_batch(Matrix::row_vector(z), dec).data();
}

BatchGaussian class_prior_batch(const Matrix& attributes, const PriorParams& prior) {
  Tape tape;
  PriorVars vars{tape.constant(prior.w_mean), tape.constant(prior.w_logvar)};
  GaussianVars g = class_prior(vars, tape.constant(attributes));
  return {g.mean.value(), g.logvar.value()};
}

DiagGaussian class_prior(std::span<const double> attributes, const PriorParams& prior) {
  return class_prior_batch(Matrix::row_vector(attributes), prior).row(0);
}

}  // namespace dgzsl
