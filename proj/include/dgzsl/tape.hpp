#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "dgzsl/matrix.hpp"

namespace dgzsl {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape is.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;
};

/// Marks "no excluded column" in row_logsumexp.
inline constexpr std::size_t kNoColumn = std::numeric_limits<std::size_t>::max();

/// Define-by-run reverse-mode autodiff tape over dense matrices.
///
/// Nodes are appended in evaluation order, so every parent id is smaller
/// than its child's id and the reverse sweep in backward() is a valid
/// topological order. Rebuild a fresh tape for every objective evaluation.
class Tape {
 public:
  enum class Op {
    kLeaf,
    kMatMul,
    kTranspose,
    kAddRow,  // a (n x m) + row vector b (1 x m)
    kAddCol,  // a (n x m) + column vector b (n x 1)
    kAdd,
    kSub,
    kMul,
    kScale,
    kAddScalar,
    kRelu,
    kExp,
    kSquare,
    kClamp,
    kRowSum,
    kSum,
    kRowLogSumExp,
    kPick,
    kKlPairwise,
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that does not receive a gradient.
  Var constant(Matrix value);
  /// Leaf whose gradient is accumulated by backward().
  Var parameter(Matrix value);

  std::size_t size() const { return nodes_.size(); }
  const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  /// Reverse sweep from a 1x1 node. Throws ShapeError otherwise. Gradients
  /// from a previous call are discarded.
  void backward(Var output);

  /// d(output)/d(node) after backward(); zeros if the node was not reached.
  Matrix grad(Var v) const;

 private:
  friend struct TapeOps;

  struct Node {
    Op op = Op::kLeaf;
    std::size_t parents[4] = {0, 0, 0, 0};
    std::size_t parent_count = 0;
    bool requires_grad = false;
    Matrix value;
    double a = 0.0;  // scale / clamp lower bound
    double b = 0.0;  // clamp upper bound
    std::vector<std::size_t> index;
    Matrix aux;  // softmax weights for row_logsumexp
  };

  Var push(Node node);
  void propagate(std::size_t id);
  Matrix& grad_slot(std::size_t id);

  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
};

// Differentiable operations. All operands must live on the same tape.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add_row(Var a, Var row);
Var add_col(Var a, Var col);
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
/// Element-wise product.
Var operator*(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double value);
Var relu(Var a);
Var exp(Var a);
Var square(Var a);
Var clamp(Var a, double lo, double hi);
/// n x m -> n x 1.
Var row_sum(Var a);
/// Sum of all entries, 1x1.
Var sum(Var a);
Var mean(Var a);
/// n x m -> n x 1 of log(sum_j exp(a_ij)), skipping column excluded[i]
/// when `excluded` is non-empty and excluded[i] != kNoColumn.
Var row_logsumexp(Var a, std::vector<std::size_t> excluded = {});
/// n x m -> n x 1 of a(i, columns[i]).
Var pick(Var a, std::vector<std::size_t> columns);
/// KL(q_i || p_c) between diagonal Gaussians for every row pair:
/// q given by (q_mean, q_logvar) n x L, p by (p_mean, p_logvar) c x L.
/// Returns n x c.
Var kl_pairwise(Var q_mean, Var q_logvar, Var p_mean, Var p_logvar);

}  // namespace dgzsl
