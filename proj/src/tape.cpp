#include "dgzsl/tape.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

#include "dgzsl/error.hpp"

namespace dgzsl {

const Matrix& Var::value() const { return tape->value(id); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("Var::scalar: node is " + v.shape_string() + ", expected 1x1");
  }
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

Var Tape::parameter(Matrix value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = true;
  return push(std::move(node));
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Matrix& Tape::grad_slot(std::size_t id) {
  Matrix& g = grads_[id];
  if (g.empty() && !nodes_[id].value.empty()) {
    g = Matrix(nodes_[id].value.rows(), nodes_[id].value.cols());
  }
  return g;
}

Matrix Tape::grad(Var v) const {
  if (v.tape != this) throw Error("Tape::grad: variable belongs to another tape");
  if (v.id < grads_.size() && !grads_[v.id].empty()) return grads_[v.id];
  return Matrix(nodes_.at(v.id).value.rows(), nodes_.at(v.id).value.cols());
}

void Tape::backward(Var output) {
  if (output.tape != this) throw Error("Tape::backward: variable belongs to another tape");
  const Matrix& out = nodes_.at(output.id).value;
  if (out.rows() != 1 || out.cols() != 1) {
    throw ShapeError("Tape::backward: output node is " + out.shape_string() +
                     ", expected a 1x1 scalar");
  }
  grads_.assign(nodes_.size(), Matrix());
  grads_[output.id] = Matrix(1, 1, 1.0);
  for (std::size_t id = output.id + 1; id-- > 0;) {
    if (nodes_[id].requires_grad && !grads_[id].empty()) propagate(id);
  }
}

void Tape::propagate(std::size_t id) {
  const Node& node = nodes_[id];
  const Matrix& g = grads_[id];
  auto wants = [&](std::size_t k) { return nodes_[node.parents[k]].requires_grad; };
  auto parent_value = [&](std::size_t k) -> const Matrix& {
    return nodes_[node.parents[k]].value;
  };
  auto accumulate = [&](std::size_t k, auto&& fn) {
    if (!wants(k)) return;
    Matrix& dst = grad_slot(node.parents[k]);
    fn(dst);
  };

  switch (node.op) {
    case Op::kLeaf:
      break;
    case Op::kMatMul: {
      const Matrix& a = parent_value(0);
      const Matrix& b = parent_value(1);
      accumulate(0, [&](Matrix& da) {
        // da += g * b^T
        for (std::size_t i = 0; i < g.rows(); ++i) {
          const auto g_row = g.row(i);
          auto da_row = da.row(i);
          for (std::size_t k = 0; k < b.rows(); ++k) {
            const auto b_row = b.row(k);
            double acc = 0.0;
            for (std::size_t j = 0; j < g.cols(); ++j) acc += g_row[j] * b_row[j];
            da_row[k] += acc;
          }
        }
      });
      accumulate(1, [&](Matrix& db) {
        // db += a^T * g
        for (std::size_t i = 0; i < a.rows(); ++i) {
          const auto a_row = a.row(i);
          const auto g_row = g.row(i);
          for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a_row[k];
            if (aik == 0.0) continue;
            auto db_row = db.row(k);
            for (std::size_t j = 0; j < g.cols(); ++j) db_row[j] += aik * g_row[j];
          }
        }
      });
      break;
    }
    case Op::kTranspose:
      accumulate(0, [&](Matrix& da) {
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) da(j, i) += g(i, j);
      });
      break;
    case Op::kAddRow:
      accumulate(0, [&](Matrix& da) {
        for (std::size_t i = 0; i < g.size(); ++i) da.data()[i] += g.data()[i];
      });
      accumulate(1, [&](Matrix& db) {
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) db(0, j) += g(i, j);
      });
      break;
    case Op::kAddCol:
      accumulate(0, [&](Matrix& da) {
        for (std::size_t i = 0; i < g.size(); ++i) da.data()[i] += g.data()[i];
      });
      accumulate(1, [&](Matrix& db) {
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) db(i, 0) += g(i, j);
      });
      break;
    case Op::kAdd:
    case Op::kSub: {
      const double sign = node.op == Op::kAdd ? 1.0 : -1.0;
      accumulate(0, [&](Matrix& da) {
        for (std::size_t i = 0; i < g.size(); ++i) da.data()[i] += g.data()[i];
      });
      accumulate(1, [&](Matrix& db) {
        for (std::size_t i = 0; i < g.size(); ++i) db.data()[i] += sign * g.data()[i];
      });
      break;
    }
    case Op::kMul: {
      const Matrix& a = parent_value(0);
      const Matrix& b = parent_value(1);
      accumulate(0, [&](Matrix& da) {
        for (std::size_t i = 0; i < g.size(); ++i) da.data()[i] += g.data()[i] * b.data()[i];
      });
      accumulate(1, [&](Matrix& db) {
        for (std::size_t i = 0; i < g.size(); ++i) db.data()[i] += g.data()[i] * a.data()[i];
      });
      break;
    }
    case Op::kScale:
      accumulate(0, [&](Matrix& da) {
        for (std::size_t i = 0; i < g.size(); ++i) da.data()[i] += node.a * g.data()[i];
      });
      break;
    case Op::kAddScalar:
      accumulate(0, [&](Matrix& da) {
        for (std::size_t i = 0; i < g.size(); ++i) da.data()[i] += g.data()[i];
      });
      break;
    case Op::kRelu:
      accumulate(0, [&](Matrix& da) {
        for (std::size_t i = 0; i < g.size(); ++i)
          if (node.value.data()[i] > 0.0) da.data()[i] += g.data()[i];
      });
      break;
    case Op::kExp:
      accumulate(0, [&](Matrix& da) {
        for (std::size_t i = 0; i < g.size(); ++i) da.data()[i] += g.data()[i] * node.value.data()[i];
      });
      break;
    case Op::kSquare: {
      const Matrix& a = parent_value(0);
      accumulate(0, [&](Matrix& da) {
        for (std::size_t i = 0; i < g.size(); ++i) da.data()[i] += 2.0 * a.data()[i] * g.data()[i];
      });
      break;
    }
    case Op::kClamp: {
      const Matrix& a = parent_value(0);
      accumulate(0, [&](Matrix& da) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double x = a.data()[i];
          if (x >= node.a && x <= node.b) da.data()[i] += g.data()[i];
        }
      });
      break;
    }
    case Op::kRowSum:
      accumulate(0, [&](Matrix& da) {
        for (std::size_t i = 0; i < da.rows(); ++i)
          for (std::size_t j = 0; j < da.cols(); ++j) da(i, j) += g(i, 0);
      });
      break;
    case Op::kSum:
      accumulate(0, [&](Matrix& da) {
        for (double& v : da.data()) v += g(0, 0);
      });
      break;
    case Op::kRowLogSumExp:
      accumulate(0, [&](Matrix& da) {
        for (std::size_t i = 0; i < da.rows(); ++i)
          for (std::size_t j = 0; j < da.cols(); ++j) da(i, j) += g(i, 0) * node.aux(i, j);
      });
      break;
    case Op::kPick:
      accumulate(0, [&](Matrix& da) {
        for (std::size_t i = 0; i < node.index.size(); ++i) da(i, node.index[i]) += g(i, 0);
      });
      break;
    case Op::kKlPairwise: {
      const Matrix& mq = parent_value(0);
      const Matrix& lq = parent_value(1);
      const Matrix& mp = parent_value(2);
      const Matrix& lp = parent_value(3);
      const std::size_t n = mq.rows();
      const std::size_t c = mp.rows();
      const std::size_t dims = mq.cols();
      Matrix* d_mq = wants(0) ? &grad_slot(node.parents[0]) : nullptr;
      Matrix* d_lq = wants(1) ? &grad_slot(node.parents[1]) : nullptr;
      Matrix* d_mp = wants(2) ? &grad_slot(node.parents[2]) : nullptr;
      Matrix* d_lp = wants(3) ? &grad_slot(node.parents[3]) : nullptr;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < c; ++k) {
          const double gik = g(i, k);
          if (gik == 0.0) continue;
          for (std::size_t l = 0; l < dims; ++l) {
            const double inv_vp = std::exp(-lp(k, l));
            const double ratio = std::exp(lq(i, l) - lp(k, l));
            const double diff = mp(k, l) - mq(i, l);
            if (d_mq) (*d_mq)(i, l) += gik * (-diff * inv_vp);
            if (d_lq) (*d_lq)(i, l) += gik * 0.5 * (ratio - 1.0);
            if (d_mp) (*d_mp)(k, l) += gik * (diff * inv_vp);
            if (d_lp) (*d_lp)(k, l) += gik * 0.5 * (1.0 - ratio - diff * diff * inv_vp);
          }
        }
      }
      break;
    }
  }
}

struct TapeOps {
  using Node = Tape::Node;

  static Tape& same_tape(std::initializer_list<Var> vars) {
    Tape* tape = vars.begin()->tape;
    if (tape == nullptr) throw Error("tape op: unbound variable");
    for (const Var& v : vars) {
      if (v.tape != tape) throw Error("tape op: operands live on different tapes");
    }
    return *tape;
  }

  static Var make(Tape::Op op, std::initializer_list<Var> parents, Matrix value,
                  Tape::Node extra = {}) {
    Tape& tape = same_tape(parents);
    Tape::Node node = std::move(extra);
    node.op = op;
    node.value = std::move(value);
    node.parent_count = 0;
    for (const Var& p : parents) {
      node.parents[node.parent_count++] = p.id;
      node.requires_grad = node.requires_grad || tape.nodes_[p.id].requires_grad;
    }
    return tape.push(std::move(node));
  }
};

namespace {

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

template <typename Fn>
Matrix map(const Matrix& a, Fn fn) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = fn(a.data()[i]);
  return out;
}

template <typename Fn>
Matrix zip(const Matrix& a, const Matrix& b, Fn fn) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = fn(a.data()[i], b.data()[i]);
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  return TapeOps::make(Tape::Op::kMatMul, {a, b}, dgzsl::matmul(a.value(), b.value()));
}

Var transpose(Var a) {
  return TapeOps::make(Tape::Op::kTranspose, {a}, dgzsl::transpose(a.value()));
}

Var add_row(Var a, Var row) {
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw ShapeError("add_row: cannot broadcast " + rv.shape_string() + " over " +
                     av.shape_string());
  }
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += rv(0, j);
  return TapeOps::make(Tape::Op::kAddRow, {a, row}, std::move(out));
}

Var add_col(Var a, Var col) {
  const Matrix& av = a.value();
  const Matrix& cv = col.value();
  if (cv.cols() != 1 || cv.rows() != av.rows()) {
    throw ShapeError("add_col: cannot broadcast " + cv.shape_string() + " over " +
                     av.shape_string());
  }
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += cv(i, 0);
  return TapeOps::make(Tape::Op::kAddCol, {a, col}, std::move(out));
}

Var operator+(Var a, Var b) {
  require_same_shape("add", a.value(), b.value());
  return TapeOps::make(Tape::Op::kAdd, {a, b},
                       zip(a.value(), b.value(), [](double x, double y) { return x + y; }));
}

Var operator-(Var a, Var b) {
  require_same_shape("sub", a.value(), b.value());
  return TapeOps::make(Tape::Op::kSub, {a, b},
                       zip(a.value(), b.value(), [](double x, double y) { return x - y; }));
}

Var operator*(Var a, Var b) {
  require_same_shape("mul", a.value(), b.value());
  return TapeOps::make(Tape::Op::kMul, {a, b},
                       zip(a.value(), b.value(), [](double x, double y) { return x * y; }));
}

Var scale(Var a, double factor) {
  TapeOps::Node extra;
  extra.a = factor;
  return TapeOps::make(Tape::Op::kScale, {a},
                       map(a.value(), [factor](double x) { return factor * x; }),
                       std::move(extra));
}

Var add_scalar(Var a, double value) {
  return TapeOps::make(Tape::Op::kAddScalar, {a},
                       map(a.value(), [value](double x) { return x + value; }));
}

Var relu(Var a) {
  return TapeOps::make(Tape::Op::kRelu, {a},
                       map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }));
}

Var exp(Var a) {
  return TapeOps::make(Tape::Op::kExp, {a}, map(a.value(), [](double x) { return std::exp(x); }));
}

Var square(Var a) {
  return TapeOps::make(Tape::Op::kSquare, {a}, map(a.value(), [](double x) { return x * x; }));
}

Var clamp(Var a, double lo, double hi) {
  TapeOps::Node extra;
  extra.a = lo;
  extra.b = hi;
  return TapeOps::make(Tape::Op::kClamp, {a},
                       map(a.value(), [lo, hi](double x) { return std::clamp(x, lo, hi); }),
                       std::move(extra));
}

Var row_sum(Var a) {
  const Matrix& av = a.value();
  Matrix out(av.rows(), 1);
  for (std::size_t i = 0; i < av.rows(); ++i) {
    double acc = 0.0;
    for (double v : av.row(i)) acc += v;
    out(i, 0) = acc;
  }
  return TapeOps::make(Tape::Op::kRowSum, {a}, std::move(out));
}

Var sum(Var a) {
  double acc = 0.0;
  for (double v : a.value().data()) acc += v;
  return TapeOps::make(Tape::Op::kSum, {a}, Matrix(1, 1, acc));
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean: empty operand");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var row_logsumexp(Var a, std::vector<std::size_t> excluded) {
  const Matrix& av = a.value();
  if (!excluded.empty() && excluded.size() != av.rows()) {
    throw ShapeError("row_logsumexp: " + std::to_string(excluded.size()) +
                     " exclusions for " + av.shape_string());
  }
  TapeOps::Node extra;
  extra.aux = Matrix(av.rows(), av.cols());
  Matrix out(av.rows(), 1);
  for (std::size_t i = 0; i < av.rows(); ++i) {
    const std::size_t skip = excluded.empty() ? kNoColumn : excluded[i];
    double top = -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    for (std::size_t j = 0; j < av.cols(); ++j) {
      if (j == skip) continue;
      top = std::max(top, av(i, j));
      ++used;
    }
    if (used == 0) throw Error("row_logsumexp: row " + std::to_string(i) + " has no terms");
    double acc = 0.0;
    for (std::size_t j = 0; j < av.cols(); ++j) {
      if (j == skip) continue;
      const double e = std::exp(av(i, j) - top);
      extra.aux(i, j) = e;
      acc += e;
    }
    for (std::size_t j = 0; j < av.cols(); ++j) extra.aux(i, j) /= acc;
    out(i, 0) = top + std::log(acc);
  }
  extra.index = std::move(excluded);
  return TapeOps::make(Tape::Op::kRowLogSumExp, {a}, std::move(out), std::move(extra));
}

Var pick(Var a, std::vector<std::size_t> columns) {
  const Matrix& av = a.value();
  if (columns.size() != av.rows()) {
    throw ShapeError("pick: " + std::to_string(columns.size()) + " indices for " +
                     av.shape_string());
  }
  Matrix out(av.rows(), 1);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] >= av.cols()) {
      throw ShapeError("pick: column " + std::to_string(columns[i]) + " out of range for " +
                       av.shape_string());
    }
    out(i, 0) = av(i, columns[i]);
  }
  TapeOps::Node extra;
  extra.index = std::move(columns);
  return TapeOps::make(Tape::Op::kPick, {a}, std::move(out), std::move(extra));
}

Var kl_pairwise(Var q_mean, Var q_logvar, Var p_mean, Var p_logvar) {
  const Matrix& mq = q_mean.value();
  const Matrix& lq = q_logvar.value();
  const Matrix& mp = p_mean.value();
  const Matrix& lp = p_logvar.value();
  require_same_shape("kl_pairwise(q)", mq, lq);
  require_same_shape("kl_pairwise(p)", mp, lp);
  if (mq.cols() != mp.cols()) {
    throw ShapeError("kl_pairwise: latent dimension mismatch " + mq.shape_string() + " vs " +
                     mp.shape_string());
  }
  Matrix out(mq.rows(), mp.rows());
  for (std::size_t i = 0; i < mq.rows(); ++i) {
    for (std::size_t k = 0; k < mp.rows(); ++k) {
      double acc = 0.0;
      for (std::size_t l = 0; l < mq.cols(); ++l) {
        const double diff = mp(k, l) - mq(i, l);
        acc += std::exp(lq(i, l) - lp(k, l)) + diff * diff * std::exp(-lp(k, l)) - 1.0 +
               (lp(k, l) - lq(i, l));
      }
      out(i, k) = 0.5 * acc;
    }
  }
  return TapeOps::make(Tape::Op::kKlPairwise, {q_mean, q_logvar, p_mean, p_logvar},
                       std::move(out));
}

}  // namespace dgzsl
