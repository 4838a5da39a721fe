#pragma once

#include <functional>
#include <span>
#include <vector>

#include "retel/linalg.hpp"

namespace retel::stats {

// ---- distribution kit -------------------------------------------------

double normal_cdf(double x);
double normal_logpdf(double x);
// inverse standard normal CDF (Wichura's algorithm), p in (0, 1)
double normal_quantile(double p);
// Phi^{-1}(k / (m + 1)) for k = 1..m
std::vector<double> normal_quantile_grid(int m);

double logistic_logpdf(double x, double location, double scale);
double cauchy_logpdf(double x, double location, double scale);

// regularized lower incomplete gamma P(a, x)
double gamma_p(double a, double x);
double chisq_cdf(double x, double df);
double chisq_quantile(double p, double df);

// ---- Kolmogorov–Smirnov -----------------------------------------------

struct KSResult {
  double statistic;
  double p_value;
  int n;
};

// One-sample KS test against U(0,1); samples must lie in [0,1].
KSResult ks_uniform(std::vector<double> samples);

// ---- density estimation and integration --------------------------------

struct DensityEstimate {
  std::vector<double> grid;    // strictly increasing
  std::vector<double> values;  // trapezoid-normalized over grid
  double bandwidth = 0.0;

  double lo() const { return grid.front(); }
  double hi() const { return grid.back(); }
  // linear interpolation on the grid, 0 outside
  double operator()(double t) const;
};

// Gaussian kernel with Silverman bandwidth 0.9 * min(sd, IQR/1.34) * n^{-1/5}.
DensityEstimate kde(std::span<const double> samples, std::vector<double> grid);

// Adaptive Simpson; absolute error <= tol for smooth integrands. Throws
// QuadratureError (with the partial value) if the recursion depth cap of 60
// is exceeded.
double adaptive_quad(const std::function<double(double)>& f, double a, double b,
                     double tol);

// \int post(t) (log post(t) - prior_logpdf(t)) dt over the support of `post`,
// with the 0 log 0 = 0 convention; clamped to be >= 0.
double kl_between(const DensityEstimate& post,
                  const std::function<double(double)>& prior_logpdf);

// ---- moment-based asymptotic covariance --------------------------------

// Omega = (G^T V^{-1} G)^{-1} with V = n^{-1} sum g_i g_i^T and G the mean
// Jacobian estimate (p x dim_theta). Throws EvalError if V or the product is
// singular.
Matrix sandwich_omega(const Matrix& moments, const Matrix& jacobian);

// ---- small helpers ------------------------------------------------------

double mean(std::span<const double> x);
double variance(std::span<const double> x);  // ddof = 1
double quantile(std::span<const double> sorted, double q);  // (k-1)/(n-1) positions
double trapezoid(std::span<const double> x, std::span<const double> y);

}  // namespace retel::stats
