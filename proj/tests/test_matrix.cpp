#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dgzsl/error.hpp"
#include "dgzsl/matrix.hpp"
#include "dgzsl/parallel.hpp"

using namespace dgzsl;

namespace {

Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (double& v : m.data()) v = g(rng);
  return m;
}

}  // namespace

TEST(Matrix, ConstructionAndShape) {
  Matrix m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(m.shape_string(), "2x3");
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  EXPECT_THROW((Matrix{{1, 2}, {3}}), ShapeError);
}

TEST(Matrix, AffineIdentityAndBias) {
  const Matrix x{{1, 2}};
  EXPECT_EQ(matmul(x, Matrix::identity(2)), x);
  Matrix y = matmul(Matrix{{1, 1}}, Matrix{{1, 0}, {0, 1}});
  y(0, 0) += 3;
  y(0, 1) += 4;
  EXPECT_EQ(y, (Matrix{{4, 5}}));
}

TEST(Matrix, MatmulMatchesTripleLoop) {
  std::mt19937_64 rng(3);
  const Matrix a = random_matrix(2, 3, rng);
  const Matrix b = random_matrix(3, 2, rng);
  const Matrix got = matmul(a, b);
  const Matrix want = naive_product(a, b);
  ASSERT_EQ(got.rows(), 2u);
  ASSERT_EQ(got.cols(), 2u);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-12);
}

TEST(Matrix, MatmulRandomShapesProperty) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 40);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = dim(rng), k = dim(rng), m = dim(rng);
    const Matrix a = random_matrix(n, k, rng);
    const Matrix b = random_matrix(k, m, rng);
    const Matrix got = matmul(a, b);
    const Matrix want = naive_product(a, b);
    for (std::size_t i = 0; i < got.size(); ++i)
      ASSERT_NEAR(got.data()[i], want.data()[i], 1e-12);
  }
}

TEST(Matrix, LargeMatmulMatchesTripleLoopExactly) {
  // Large enough to be split across workers; summation order is fixed so
  // the result is bit-identical to the sequential loop.
  std::mt19937_64 rng(5);
  const Matrix a = random_matrix(300, 200, rng);
  const Matrix b = random_matrix(200, 150, rng);
  EXPECT_EQ(matmul(a, b), naive_product(a, b));
}

TEST(Matrix, MatmulShapeErrorNamesBothShapes) {
  try {
    matmul(Matrix(2, 3), Matrix(2, 2));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos);
    EXPECT_NE(msg.find("2x2"), std::string::npos);
  }
}

TEST(Matrix, TransposeAndGather) {
  const Matrix m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(transpose(m), (Matrix{{1, 4}, {2, 5}, {3, 6}}));
  const std::vector<std::size_t> idx{1, 0, 1};
  EXPECT_EQ(gather_rows(m, idx), (Matrix{{4, 5, 6}, {1, 2, 3}, {4, 5, 6}}));
  const std::vector<std::size_t> bad{2};
  EXPECT_THROW(gather_rows(m, bad), ShapeError);
}

TEST(Matrix, AllFinite) {
  Matrix m{{1, 2}};
  EXPECT_TRUE(m.all_finite());
  m(0, 1) = std::nan("");
  EXPECT_FALSE(m.all_finite());
}

TEST(LogSumExp, Examples) {
  const std::vector<double> zeros{0, 0};
  EXPECT_NEAR(logsumexp(zeros), 0.693147, 1e-6);
  const std::vector<double> single{5};
  EXPECT_DOUBLE_EQ(logsumexp(single), 5.0);
  const std::vector<double> big{1000, 1000};
  EXPECT_NEAR(logsumexp(big), 1000.0 + std::log(2.0), 1e-9);
  EXPECT_THROW(logsumexp(std::vector<double>{}), Error);
}

TEST(LogSumExp, ShiftInvarianceProperty) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(1 + trial % 9);
    for (double& x : v) x = g(rng);
    const double shift = g(rng) * 100;
    std::vector<double> shifted = v;
    for (double& x : shifted) x += shift;
    EXPECT_NEAR(logsumexp(shifted), logsumexp(v) + shift, 1e-9 * (1 + std::abs(shift)));
    // Bounded by max and max + ln n.
    const double mx = *std::max_element(v.begin(), v.end());
    EXPECT_GE(logsumexp(v), mx - 1e-12);
    EXPECT_LE(logsumexp(v), mx + std::log(static_cast<double>(v.size())) + 1e-12);
  }
}

TEST(Parallel, CoversRangeOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 7, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) ++hits[i];
  });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_GE(worker_count(), 1u);
}
