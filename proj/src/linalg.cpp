#include "retel/linalg.hpp"

#include <cmath>

namespace retel {

bool cholesky(const Matrix& s, Matrix& l) {
  const int n = s.rows;
  if (n != s.cols) return false;
  l = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    double d = s(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double v = s(i, j);
      for (int k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / l(j, j);
    }
  }
  return true;
}

bool chol_solve(const Matrix& s, std::span<const double> b, std::span<double> x) {
  Matrix l;
  if (!cholesky(s, l)) return false;
  const int n = s.rows;
  // forward: L y = b
  for (int i = 0; i < n; ++i) {
    double v = b[i];
    for (int k = 0; k < i; ++k) v -= l(i, k) * x[k];
    x[i] = v / l(i, i);
  }
  // backward: L^T x = y
  for (int i = n - 1; i >= 0; --i) {
    double v = x[i];
    for (int k = i + 1; k < n; ++k) v -= l(k, i) * x[k];
    x[i] = v / l(i, i);
  }
  return true;
}

bool chol_inverse(const Matrix& s, Matrix& inv) {
  const int n = s.rows;
  inv = Matrix(n, n);
  std::vector<double> e(n), col(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) e[i] = (i == j) ? 1.0 : 0.0;
    if (!chol_solve(s, e, col)) return false;
    for (int i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return true;
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) {
  return std::sqrt(dot(x, x));
}

void matvec(const Matrix& m, std::span<const double> x, std::span<double> y) {
  for (int i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
    y[i] = s;
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k) {
      const double v = a(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) c(i, j) += v * b(k, j);
    }
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

}  // namespace retel
