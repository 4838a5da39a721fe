#include "retel/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "retel/errors.hpp"
#include "retel/solver.hpp"

namespace retel {

namespace {
void check_finite(const Matrix& m, const char* what) {
  for (double v : m.a)
    if (!std::isfinite(v)) throw EvalError(std::string(what) + ": non-finite entry");
}
}  // namespace

Dataset::Dataset(Matrix m) : rows(std::move(m)) {
  if (rows.rows < 1 || rows.cols < 1) throw EvalError("Dataset: empty");
  check_finite(rows, "Dataset");
}

Dataset Dataset::univariate(std::vector<double> x) {
  Matrix m(static_cast<int>(x.size()), 1);
  m.a = std::move(x);
  return Dataset(std::move(m));
}

EstimatingFunction mean_function(int d) {
  EstimatingFunction ef;
  ef.p = d;
  ef.x_dim = d;
  ef.theta_dim = d;
  ef.name = "mean";
  ef.eval = [](std::span<const double> x, std::span<const double> theta,
               std::span<double> out) {
    for (size_t j = 0; j < out.size(); ++j) out[j] = x[j] - theta[j];
  };
  return ef;
}

EstimatingFunction mean_var_function() {
  EstimatingFunction ef;
  ef.p = 2;
  ef.x_dim = 1;
  ef.theta_dim = 2;  // (theta, V)
  ef.name = "mean_var";
  ef.eval = [](std::span<const double> x, std::span<const double> theta,
               std::span<double> out) {
    const double r = x[0] - theta[0];
    out[0] = r;
    out[1] = r * r / theta[1] - 1.0;
  };
  return ef;
}

std::vector<double> MomentMatrix::col_mean() const {
  std::vector<double> h(p(), 0.0);
  for (int i = 0; i < n(); ++i)
    for (int j = 0; j < p(); ++j) h[j] += g(i, j);
  for (double& v : h) v /= static_cast<double>(n());
  return h;
}

MomentMatrix evaluate_moments(const EstimatingFunction& ef, const Dataset& data,
                              std::span<const double> theta) {
  if (static_cast<int>(theta.size()) != ef.theta_dim)
    throw EvalError("evaluate_moments: theta length does not match the estimating function");
  if (data.dim() != ef.x_dim)
    throw EvalError("evaluate_moments: observation width does not match the estimating function");
  MomentMatrix m;
  m.g = Matrix(data.n(), ef.p);
  m.theta.assign(theta.begin(), theta.end());
  std::vector<double> out(ef.p);
  for (int i = 0; i < data.n(); ++i) {
    ef.eval(data.row(i), theta, out);
    for (int j = 0; j < ef.p; ++j) {
      if (!std::isfinite(out[j]))
        throw EvalError("evaluate_moments: non-finite value at row " + std::to_string(i));
      m.g(i, j) = out[j];
    }
  }
  return m;
}

namespace {
bool hull_1d(const MomentMatrix& m) {
  double lo = m.g(0, 0), hi = m.g(0, 0);
  for (int i = 1; i < m.n(); ++i) {
    lo = std::min(lo, m.g(i, 0));
    hi = std::max(hi, m.g(i, 0));
  }
  return lo < 0.0 && 0.0 < hi;
}

// 0 is strictly inside the planar hull iff the largest cyclic gap between the
// direction angles of the nonzero points is < pi.
bool hull_2d(const MomentMatrix& m) {
  std::vector<double> angles;
  angles.reserve(m.n());
  for (int i = 0; i < m.n(); ++i) {
    const double x = m.g(i, 0), y = m.g(i, 1);
    if (x != 0.0 || y != 0.0) angles.push_back(std::atan2(y, x));
  }
  if (angles.size() < 3) return false;
  std::sort(angles.begin(), angles.end());
  double max_gap = angles.front() + 2.0 * std::numbers::pi - angles.back();
  for (size_t k = 1; k < angles.size(); ++k)
    max_gap = std::max(max_gap, angles[k] - angles[k - 1]);
  // a gap of exactly pi puts 0 on the hull boundary, which is not interior
  return max_gap < std::numbers::pi - 1e-9;
}
}  // namespace

bool hull_contains_zero(const MomentMatrix& m) {
  if (m.n() < 1) return false;
  if (m.p() == 1) return hull_1d(m);
  if (m.p() == 2) return hull_2d(m);
  // Advisory for p >= 3: the unpenalized dual diverges exactly when the hull
  // constraint fails.
  SolverSettings s;
  s.max_iter = 200;
  const DualSolution sol = solve_etel(m, s);
  return sol.status != SolveStatus::Diverged;
}

MomentMatrix aetel_augment(const MomentMatrix& m, double a_n) {
  if (!(a_n > 0.0)) throw EvalError("aetel_augment: a_n must be positive");
  MomentMatrix out;
  out.theta = m.theta;
  out.g = Matrix(m.n() + 1, m.p());
  std::copy(m.g.a.begin(), m.g.a.end(), out.g.a.begin());
  const std::vector<double> h = m.col_mean();
  for (int j = 0; j < m.p(); ++j) out.g(m.n(), j) = -a_n * h[j];
  return out;
}

double default_adjustment(int n) {
  return std::max(1.0, 0.5 * std::log(static_cast<double>(n)));
}

PseudoData::PseudoData(Matrix m) : rows(std::move(m)) {
  if (rows.rows < 1) throw EvalError("PseudoData: empty");
  check_finite(rows, "PseudoData");
}

PseudoData PseudoData::univariate(std::vector<double> values) {
  Matrix m(static_cast<int>(values.size()), 1);
  m.a = std::move(values);
  return PseudoData(std::move(m));
}

Regularization reg_centered(int p, double tau) {
  Regularization r;
  r.tau = tau;
  r.mu_fn = [p](const Dataset&, std::span<const double>) {
    return std::vector<double>(p, 0.0);
  };
  r.sigma_fn = [p](const Dataset&, std::span<const double>) {
    return Matrix::identity(p);
  };
  return r;
}

Regularization reg_invariant_mean(double tau) {
  Regularization r;
  r.tau = tau;
  r.mu_fn = [](const Dataset& d, std::span<const double> theta) {
    double xbar = 0.0;
    for (int i = 0; i < d.n(); ++i) xbar += d.rows(i, 0);
    xbar /= d.n();
    return std::vector<double>{xbar - theta[0]};
  };
  r.sigma_fn = [](const Dataset&, std::span<const double>) {
    return Matrix::identity(1);
  };
  return r;
}

Regularization reg_figure2(double tau) {
  Regularization r;
  r.tau = tau;
  r.mu_fn = [](const Dataset&, std::span<const double> theta) {
    return std::vector<double>{-theta[0]};
  };
  r.sigma_fn = [](const Dataset&, std::span<const double>) {
    return Matrix::identity(1);
  };
  return r;
}

Regularization reg_sample_moments(const EstimatingFunction& ef, double tau) {
  Regularization r;
  r.tau = tau;
  r.mu_fn = [ef](const Dataset& d, std::span<const double> theta) {
    const MomentMatrix m = evaluate_moments(ef, d, theta);
    return m.col_mean();
  };
  r.sigma_fn = [ef](const Dataset& d, std::span<const double> theta) {
    const MomentMatrix m = evaluate_moments(ef, d, theta);
    Matrix s(m.p(), m.p());
    for (int i = 0; i < m.n(); ++i)
      for (int a = 0; a < m.p(); ++a)
        for (int b = 0; b < m.p(); ++b) s(a, b) += m.g(i, a) * m.g(i, b);
    for (double& v : s.a) v /= static_cast<double>(m.n() - 1);
    return s;
  };
  return r;
}

Penalty resolve_penalty(const Regularization& reg, const Dataset& data,
                        std::span<const double> theta, int p) {
  if (!(reg.tau > 0.0)) throw EvalError("Regularization: tau must be positive");
  Penalty pen;
  pen.tau = reg.tau;
  pen.mu = reg.mu_fn(data, theta);
  pen.sigma = reg.sigma_fn(data, theta);
  if (static_cast<int>(pen.mu.size()) != p || pen.sigma.rows != p || pen.sigma.cols != p)
    throw EvalError("Regularization: dimension mismatch");
  Matrix l;
  if (!cholesky(pen.sigma, l))
    throw EvalError("Regularization: Sigma is not positive definite");
  return pen;
}

Penalty penalty_from_moments(const MomentMatrix& m, double tau) {
  if (!(tau > 0.0)) throw EvalError("penalty_from_moments: tau must be positive");
  Penalty pen;
  pen.tau = tau;
  pen.mu = m.col_mean();
  pen.sigma = Matrix(m.p(), m.p());
  for (int i = 0; i < m.n(); ++i)
    for (int a = 0; a < m.p(); ++a)
      for (int b = 0; b < m.p(); ++b) pen.sigma(a, b) += m.g(i, a) * m.g(i, b);
  for (double& v : pen.sigma.a) v /= static_cast<double>(m.n() - 1);
  Matrix l;
  if (!cholesky(pen.sigma, l))
    throw EvalError("penalty_from_moments: sample second moment not positive definite");
  return pen;
}

Penalty centered_penalty(int p, double tau) {
  Penalty pen;
  pen.tau = tau;
  pen.mu.assign(p, 0.0);
  pen.sigma = Matrix::identity(p);
  return pen;
}

}  // namespace retel
