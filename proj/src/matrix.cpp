#include "dgzsl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dgzsl/error.hpp"
#include "dgzsl/parallel.hpp"

namespace dgzsl {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + a.shape_string() + " * " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  const std::size_t work_per_row = std::max<std::size_t>(1, inner * n);
  const std::size_t min_rows = std::max<std::size_t>(1, (1u << 18) / work_per_row);
  parallel_for(a.rows(), min_rows, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      double* out_row = out.row(i).data();
      const double* a_row = a.row(i).data();
      for (std::size_t k = 0; k < inner; ++k) {
        const double aik = a_row[k];
        if (aik == 0.0) continue;
        const double* b_row = b.row(k).data();
        for (std::size_t j = 0; j < n; ++j) out_row[j] += aik * b_row[j];
      }
    }
  });
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), m.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= m.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(indices[i]) +
                       " out of range for " + m.shape_string());
    }
    std::copy_n(m.row(indices[i]).begin(), m.cols(), out.row(i).begin());
  }
  return out;
}

double logsumexp(std::span<const double> values) {
  if (values.empty()) throw Error("logsumexp: empty input");
  const double top = *std::max_element(values.begin(), values.end());
  if (std::isinf(top)) return top;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - top);
  return top + std::log(acc);
}

}  // namespace dgzsl
