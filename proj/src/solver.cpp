#include "retel/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "retel/errors.hpp"

namespace retel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijo = 1e-4;

void check_input(const MomentMatrix& m, int min_rows) {
  if (m.n() < min_rows) throw std::invalid_argument("solver: empty moment matrix");
  if (m.p() < 1) throw std::invalid_argument("solver: moment dimension must be positive");
  for (double v : m.g.a)
    if (!std::isfinite(v)) throw std::invalid_argument("solver: non-finite moments");
}

double lambda_cap(const SolverSettings& s, int p) {
  return s.divergence_lambda_norm > 0.0
             ? s.divergence_lambda_norm
             : 200.0 * std::sqrt(static_cast<double>(p));
}

// Shared dual objective: F(lambda) = log( sum_k exp(s_k(lambda)) ) over
//   data atoms    s_i = lambda' g_i
//   pseudo atoms  s_j = lambda' q_j - log m
//   penalty atom  s_q = log tau + lambda' mu + lambda' Sigma lambda / 2.
// All exponentials go through a shared max shift, so trial evaluations never
// overflow. The softmax weights of the atoms are exactly the tilted
// probabilities, which keeps gradient, Hessian and weights consistent.
struct ExpDual {
  const Matrix* data = nullptr;
  const Matrix* pseudo = nullptr;
  const Penalty* pen = nullptr;
  int p = 0;
  double pseudo_offset = 0.0;  // -log m
  double scale_n = 1.0;        // residual scaling

  std::vector<double> s_data, s_pseudo;
  double s_pen = -kInf;

  // Fills the exponent pools and returns F.
  double value(std::span<const double> lambda) {
    double mx = -kInf;
    const int n = data->rows;
    s_data.resize(n);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < p; ++j) s += lambda[j] * (*data)(i, j);
      s_data[i] = s;
      mx = std::max(mx, s);
    }
    if (pseudo != nullptr) {
      const int m = pseudo->rows;
      s_pseudo.resize(m);
      for (int i = 0; i < m; ++i) {
        double s = pseudo_offset;
        for (int j = 0; j < p; ++j) s += lambda[j] * (*pseudo)(i, j);
        s_pseudo[i] = s;
        mx = std::max(mx, s);
      }
    }
    if (pen != nullptr) {
      double s = std::log(pen->tau);
      for (int j = 0; j < p; ++j) {
        double sl = 0.0;
        for (int k = 0; k < p; ++k) sl += pen->sigma(j, k) * lambda[k];
        s += lambda[j] * (pen->mu[j] + 0.5 * sl);
      }
      s_pen = s;
      mx = std::max(mx, s);
    }
    double sum = 0.0;
    for (double s : s_data) sum += std::exp(s - mx);
    for (double s : s_pseudo) sum += std::exp(s - mx);
    if (pen != nullptr) sum += std::exp(s_pen - mx);
    return mx + std::log(sum);
  }

  // Gradient and Hessian of F at the exponents left by value(); grad is the
  // softmax-weighted mean of the atom gradients.
  void derivatives(std::span<const double> lambda, double f,
                   std::vector<double>& grad, Matrix& hess) {
    grad.assign(p, 0.0);
    hess = Matrix(p, p);
    const int n = data->rows;
    for (int i = 0; i < n; ++i) {
      const double w = std::exp(s_data[i] - f);
      for (int a = 0; a < p; ++a) {
        const double ga = (*data)(i, a);
        grad[a] += w * ga;
        for (int b = a; b < p; ++b) hess(a, b) += w * ga * (*data)(i, b);
      }
    }
    if (pseudo != nullptr) {
      for (int i = 0; i < pseudo->rows; ++i) {
        const double w = std::exp(s_pseudo[i] - f);
        for (int a = 0; a < p; ++a) {
          const double ga = (*pseudo)(i, a);
          grad[a] += w * ga;
          for (int b = a; b < p; ++b) hess(a, b) += w * ga * (*pseudo)(i, b);
        }
      }
    }
    if (pen != nullptr) {
      const double w = std::exp(s_pen - f);
      std::vector<double> t(p);  // mu + Sigma lambda
      for (int a = 0; a < p; ++a) {
        double sl = 0.0;
        for (int k = 0; k < p; ++k) sl += pen->sigma(a, k) * lambda[k];
        t[a] = pen->mu[a] + sl;
      }
      for (int a = 0; a < p; ++a) {
        grad[a] += w * t[a];
        for (int b = a; b < p; ++b)
          hess(a, b) += w * (t[a] * t[b] + pen->sigma(a, b));
      }
    }
    for (int a = 0; a < p; ++a)
      for (int b = a; b < p; ++b) {
        hess(a, b) -= grad[a] * grad[b];
        hess(b, a) = hess(a, b);
      }
  }
};

// Damped Newton with backtracking on F = log(objective). Descent on F is
// descent on the objective; grad_norm reports the raw stationarity residual
// divided by scale_n, which equals |grad F| * exp(F) / scale_n.
DualSolution minimize(ExpDual& dual, const SolverSettings& s, bool penalized) {
  const int p = dual.p;
  DualSolution sol;
  sol.lambda.assign(p, 0.0);

  // With 0 in the closed hull of the atoms, F >= min atom offset everywhere;
  // falling below it certifies strict hull violation.
  const double floor =
      (dual.pseudo != nullptr ? std::min(0.0, dual.pseudo_offset) : 0.0) +
      std::log(0.99);
  const double cap = lambda_cap(s, p);

  double f = dual.value(sol.lambda);
  std::vector<double> grad(p);
  Matrix hess;
  dual.derivatives(sol.lambda, f, grad, hess);
  if (s.record_trace) sol.trace.push_back(f);

  std::vector<double> delta(p), trial(p);
  for (int iter = 0; iter <= s.max_iter; ++iter) {
    sol.iterations = iter;
    sol.grad_norm = norm2(grad) * std::exp(f - std::log(dual.scale_n));
    sol.log_normalizer = f;
    // Divergence is decided before convergence: under hull violation the raw
    // residual also vanishes as the objective collapses toward its infimum.
    if (!penalized) {
      if (f < floor || (norm2(sol.lambda) > cap)) {
        sol.status = SolveStatus::Diverged;
        return sol;
      }
    }
    if (sol.grad_norm <= s.grad_tol) {
      sol.status = SolveStatus::Converged;
      return sol;
    }
    if (iter == s.max_iter) break;

    // Newton direction, with a ridge fallback if the Hessian loses rank.
    double ridge = 0.0;
    std::vector<double> rhs(p);
    for (int a = 0; a < p; ++a) rhs[a] = -grad[a];
    bool ok = chol_solve(hess, rhs, delta);
    while (!ok && ridge < 1e10) {
      double tr = 0.0;
      for (int a = 0; a < p; ++a) tr += hess(a, a);
      ridge = (ridge == 0.0) ? std::max(1e-12 * tr / p, 1e-100) : ridge * 1e4;
      Matrix h2 = hess;
      for (int a = 0; a < p; ++a) h2(a, a) += ridge;
      ok = chol_solve(h2, rhs, delta);
    }
    if (!ok) {
      for (int a = 0; a < p; ++a) delta[a] = -grad[a];  // gradient step
    }

    const double slope = dot(grad, delta);
    double t = 1.0;
    bool accepted = false;
    // Once the Newton decrement falls below the representable decrease of f,
    // an Armijo test can no longer see progress; take the full step, which
    // still contracts the gradient quadratically.
    const double f_eps = 1e-12 * std::max(1.0, std::fabs(f));
    if (-slope < 10.0 * f_eps) {
      for (int a = 0; a < p; ++a) trial[a] = sol.lambda[a] + delta[a];
      const double ft = dual.value(trial);
      if (std::isfinite(ft) && ft <= f + f_eps) {
        sol.lambda = trial;
        f = ft;
        accepted = true;
      }
    }
    if (!accepted) {
      for (int ls = 0; ls < 120; ++ls) {
        for (int a = 0; a < p; ++a) trial[a] = sol.lambda[a] + t * delta[a];
        const double ft = dual.value(trial);
        if (std::isfinite(ft) && ft <= f + kArmijo * t * slope) {
          sol.lambda = trial;
          f = ft;
          accepted = true;
          break;
        }
        t *= s.line_search_shrink;
      }
    }
    if (!accepted) break;  // cannot make progress at this scale
    dual.derivatives(sol.lambda, f, grad, hess);
    if (s.record_trace) sol.trace.push_back(f);
  }
  sol.status = SolveStatus::MaxIterations;
  return sol;
}

}  // namespace

DualSolution solve_etel(const MomentMatrix& m, const SolverSettings& s) {
  check_input(m, 1);
  ExpDual dual;
  dual.data = &m.g;
  dual.p = m.p();
  dual.scale_n = m.n();
  return minimize(dual, s, /*penalized=*/false);
}

DualSolution solve_wetel(const MomentMatrix& m, const PseudoData& pseudo,
                         const SolverSettings& s) {
  check_input(m, 1);
  if (pseudo.rows.cols != m.p())
    throw std::invalid_argument("solve_wetel: pseudo-data dimension mismatch");
  ExpDual dual;
  dual.data = &m.g;
  dual.pseudo = &pseudo.rows;
  dual.pseudo_offset = -std::log(static_cast<double>(pseudo.m()));
  dual.p = m.p();
  dual.scale_n = m.n() + 1;
  return minimize(dual, s, /*penalized=*/false);
}

DualSolution solve_retel(const MomentMatrix& m, const Penalty& pen,
                         const SolverSettings& s) {
  if (m.n() > 0) check_input(m, 1);
  const int p = m.n() > 0 ? m.p() : pen.p();
  if (pen.p() != p) throw std::invalid_argument("solve_retel: penalty dimension mismatch");
  Matrix l;
  if (!cholesky(pen.sigma, l))
    throw std::invalid_argument("solve_retel: Sigma is not positive definite");
  ExpDual dual;
  dual.data = &m.g;
  dual.pen = &pen;
  dual.p = p;
  dual.scale_n = std::max(m.n(), 1);
  DualSolution sol = minimize(dual, s, /*penalized=*/true);
  if (sol.status != SolveStatus::Converged)
    throw SolverDiagnosticError("solve_retel: max iterations reached", std::move(sol));
  return sol;
}

DualSolution solve_retel(const MomentMatrix& m, const Regularization& reg,
                         const Dataset& data, const SolverSettings& s) {
  const Penalty pen = resolve_penalty(reg, data, m.theta, m.p());
  return solve_retel(m, pen, s);
}

namespace {
// Owen's quadratic extension of log below 1/n keeps the EL objective defined
// on all of R^p during the search.
struct ElStar {
  double cut;  // 1/n
  double nn;   // n
  double log_cut;

  double val(double z) const {
    if (z >= cut) return std::log(z);
    return log_cut - 1.5 + 2.0 * nn * z - 0.5 * nn * nn * z * z;
  }
  double d1(double z) const { return z >= cut ? 1.0 / z : 2.0 * nn - nn * nn * z; }
  double d2(double z) const { return z >= cut ? -1.0 / (z * z) : -nn * nn; }
};
}  // namespace

DualSolution solve_el(const MomentMatrix& m, const SolverSettings& s) {
  check_input(m, 1);
  const int n = m.n();
  const int p = m.p();
  const double cap = lambda_cap(s, p);
  ElStar star{1.0 / n, static_cast<double>(n), -std::log(static_cast<double>(n))};

  DualSolution sol;
  sol.lambda.assign(p, 0.0);
  std::vector<double> z(n), grad(p), delta(p), trial(p), zt(n);

  auto objective = [&](std::span<const double> lambda, std::vector<double>& zz) {
    double f = 0.0;
    for (int i = 0; i < n; ++i) {
      double v = 1.0;
      for (int j = 0; j < p; ++j) v += lambda[j] * m.g(i, j);
      zz[i] = v;
      f -= star.val(v);
    }
    return f;
  };

  double f = objective(sol.lambda, z);
  if (s.record_trace) sol.trace.push_back(f);
  Matrix hess(p, p);
  for (int iter = 0; iter <= s.max_iter; ++iter) {
    sol.iterations = iter;
    grad.assign(p, 0.0);
    hess = Matrix(p, p);
    for (int i = 0; i < n; ++i) {
      const double d1 = star.d1(z[i]);
      const double d2 = -star.d2(z[i]);
      for (int a = 0; a < p; ++a) {
        grad[a] -= m.g(i, a) * d1;
        for (int b = a; b < p; ++b) hess(a, b) += m.g(i, a) * m.g(i, b) * d2;
      }
    }
    for (int a = 0; a < p; ++a)
      for (int b = a; b < p; ++b) hess(b, a) = hess(a, b);

    sol.grad_norm = norm2(grad) / n;
    sol.log_normalizer = -f;  // maximized sum log(1 + lambda'g) when interior
    if (norm2(sol.lambda) > cap) {
      sol.status = SolveStatus::Diverged;
      return sol;
    }
    if (sol.grad_norm <= s.grad_tol) {
      // A valid EL solution needs every 1 + lambda'g_i above the 1/n cut.
      bool interior = true;
      for (int i = 0; i < n; ++i)
        if (z[i] <= star.cut) interior = false;
      sol.status = interior ? SolveStatus::Converged : SolveStatus::Diverged;
      return sol;
    }
    if (iter == s.max_iter) break;

    double ridge = 0.0;
    std::vector<double> rhs(p);
    for (int a = 0; a < p; ++a) rhs[a] = -grad[a];
    bool ok = chol_solve(hess, rhs, delta);
    while (!ok && ridge < 1e10) {
      double tr = 0.0;
      for (int a = 0; a < p; ++a) tr += hess(a, a);
      ridge = (ridge == 0.0) ? std::max(1e-12 * tr / p, 1e-100) : ridge * 1e4;
      Matrix h2 = hess;
      for (int a = 0; a < p; ++a) h2(a, a) += ridge;
      ok = chol_solve(h2, rhs, delta);
    }
    if (!ok)
      for (int a = 0; a < p; ++a) delta[a] = -grad[a];

    const double slope = dot(grad, delta);
    double t = 1.0;
    bool accepted = false;
    const double f_eps = 1e-12 * std::max(1.0, std::fabs(f));
    if (-slope < 10.0 * f_eps) {
      for (int a = 0; a < p; ++a) trial[a] = sol.lambda[a] + delta[a];
      const double ft = objective(trial, zt);
      if (std::isfinite(ft) && ft <= f + f_eps) {
        sol.lambda = trial;
        z = zt;
        f = ft;
        accepted = true;
      }
    }
    if (!accepted) {
      for (int ls = 0; ls < 120; ++ls) {
        for (int a = 0; a < p; ++a) trial[a] = sol.lambda[a] + t * delta[a];
        const double ft = objective(trial, zt);
        if (std::isfinite(ft) && ft <= f + kArmijo * t * slope) {
          sol.lambda = trial;
          z = zt;
          f = ft;
          accepted = true;
          break;
        }
        t *= s.line_search_shrink;
      }
    }
    if (!accepted) break;
    if (s.record_trace) sol.trace.push_back(f);
  }
  sol.status = SolveStatus::MaxIterations;
  return sol;
}

}  // namespace retel
