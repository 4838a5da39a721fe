#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace retel {

// Row-major dense matrix. Dimensions here are tiny (moment dimension p is 1
// or 2 in every study), so plain loops are all we need.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

// Cholesky factor L (lower) of a symmetric positive definite matrix.
// Returns false if a pivot is not strictly positive.
bool cholesky(const Matrix& s, Matrix& l);

// Solves S x = b with S symmetric positive definite via Cholesky.
// Returns false on failure (x left unspecified).
bool chol_solve(const Matrix& s, std::span<const double> b, std::span<double> x);

// Inverse of a symmetric positive definite matrix. Returns false on failure.
bool chol_inverse(const Matrix& s, Matrix& inv);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);

// y = M x
void matvec(const Matrix& m, std::span<const double> x, std::span<double> y);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

}  // namespace retel
