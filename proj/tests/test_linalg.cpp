#include <cmath>

#include "catch_amalgamated.hpp"
#include "helpers.hpp"

using namespace fuzzeval;
using Catch::Approx;

namespace {

// Solves (X'X) b = X'y by Gauss-Jordan with partial pivoting.
std::vector<double> normal_equations(const Matrix& x, const std::vector<double>& y) {
  const std::size_t p = x.cols();
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t r = 0; r < x.rows(); ++r) a[i][j] += x(r, i) * x(r, j);
    for (std::size_t r = 0; r < x.rows(); ++r) a[i][p] += x(r, i) * y[r];
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> b(p);
  for (std::size_t i = 0; i < p; ++i) b[i] = a[i][p] / a[i][i];
  return b;
}

}  // namespace

TEST_CASE("qr matches normal equations on random systems") {
  Rng rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix x(50, 5);
    std::vector<double> y(50);
    for (std::size_t r = 0; r < 50; ++r) {
      x(r, 0) = 1.0;
      for (std::size_t c = 1; c < 5; ++c) x(r, c) = rng.normal(0, 3);
      y[r] = rng.normal(0, 10);
    }
    auto got = QrLeastSquares(x).solve(y);
    auto want = normal_equations(x, y);
    for (std::size_t c = 0; c < 5; ++c) CHECK(got[c] == Approx(want[c]).epsilon(1e-6).margin(1e-9));
  }
}

TEST_CASE("exact line is recovered") {
  Matrix x(10, 2, 1.0);
  std::vector<double> y(10);
  for (std::size_t i = 0; i < 10; ++i) {
    x(i, 1) = static_cast<double>(i);
    y[i] = 1.0 + 2.0 * static_cast<double>(i);
  }
  auto b = QrLeastSquares(x).solve(y);
  CHECK(std::abs(b[0] - 1.0) < 1e-10);
  CHECK(std::abs(b[1] - 2.0) < 1e-10);
}

TEST_CASE("residuals are orthogonal to the columns") {
  Rng rng(3);
  Matrix x(40, 3, 1.0);
  std::vector<double> y(40);
  for (std::size_t r = 0; r < 40; ++r) {
    x(r, 1) = rng.uniform(0, 5);
    x(r, 2) = rng.uniform(-2, 2);
    y[r] = x(r, 1) - x(r, 2) + rng.normal();
  }
  auto b = QrLeastSquares(x).solve(y);
  auto fitted = x.multiply(b);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0;
    for (std::size_t r = 0; r < 40; ++r) s += x(r, c) * (y[r] - fitted[r]);
    CHECK(std::abs(s) < 1e-9);
  }
}

TEST_CASE("duplicated column is rank deficient and named") {
  Matrix x(6, 3, 1.0);
  for (std::size_t r = 0; r < 6; ++r) {
    x(r, 1) = static_cast<double>(r);
    x(r, 2) = 2.0 * static_cast<double>(r);
  }
  try {
    QrLeastSquares qr(x, {"a", "b", "c"});
    FAIL("expected RankDeficientError");
  } catch (const RankDeficientError& e) {
    CHECK(std::string(e.what()).find('c') != std::string::npos);
  }
}

TEST_CASE("underdetermined and empty designs are rejected") {
  CHECK_THROWS_AS(QrLeastSquares(Matrix(2, 3, 1.0)), ComputeError);
  CHECK_THROWS_AS(QrLeastSquares(Matrix(4, 0)), ComputeError);
  QrLeastSquares qr(Matrix(4, 1, 1.0));
  CHECK_THROWS_AS(qr.solve(std::vector<double>{1, 2}), ComputeError);
}
