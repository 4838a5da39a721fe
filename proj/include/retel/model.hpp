#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "retel/linalg.hpp"

namespace retel {

// Observations X_i as rows of an n x d matrix. Immutable after construction;
// every entry must be finite.
struct Dataset {
  Matrix rows;

  Dataset() = default;
  explicit Dataset(Matrix m);
  static Dataset univariate(std::vector<double> x);

  int n() const { return rows.rows; }
  int dim() const { return rows.cols; }
  std::span<const double> row(int i) const {
    return {rows.a.data() + static_cast<size_t>(i) * rows.cols,
            static_cast<size_t>(rows.cols)};
  }
};

// Row-wise estimating function g: R^{d_x} x Theta -> R^p. Parameter vectors
// are flattened with the theta components first and nuisance components after.
struct EstimatingFunction {
  int p = 0;
  int x_dim = 0;  // expected observation width
  int theta_dim = 0;
  std::string name;
  std::function<void(std::span<const double> x, std::span<const double> theta,
                     std::span<double> out)>
      eval;
};

// g(x, theta) = x - theta, p = d
EstimatingFunction mean_function(int d);
// g(y, (theta, V)) = (y - theta, (y - theta)^2 / V - 1)
EstimatingFunction mean_var_function();

// The n x p array of g_i(theta) values at a fixed parameter.
struct MomentMatrix {
  Matrix g;
  std::vector<double> theta;

  int n() const { return g.rows; }
  int p() const { return g.cols; }
  std::span<const double> row(int i) const {
    return {g.a.data() + static_cast<size_t>(i) * g.cols,
            static_cast<size_t>(g.cols)};
  }
  // column mean h_n(theta)
  std::vector<double> col_mean() const;
};

MomentMatrix evaluate_moments(const EstimatingFunction& ef, const Dataset& data,
                              std::span<const double> theta);

// Exact for p <= 2 (sign test / angular sweep); for p >= 3 the verdict comes
// from a capped dual solve and is advisory only.
bool hull_contains_zero(const MomentMatrix& m);

// Appends the pseudo-observation -(a_n / n) sum_i g_i(theta).
MomentMatrix aetel_augment(const MomentMatrix& m, double a_n);

// Default adjustment max(1, log(n)/2), the usual AEL calibration.
double default_adjustment(int n);

// Pseudo moment rows used by the weighted likelihood.
struct PseudoData {
  Matrix rows;

  PseudoData() = default;
  explicit PseudoData(Matrix m);
  static PseudoData univariate(std::vector<double> values);
  int m() const { return rows.rows; }
};

// Penalty triple (tau, mu_{n,theta}, Sigma_{n,theta}) defining the Gaussian
// moment-generating penalty. mu_fn and sigma_fn are evaluated at (data, theta).
struct Regularization {
  double tau = 1.0;
  std::function<std::vector<double>(const Dataset&, std::span<const double>)> mu_fn;
  std::function<Matrix(const Dataset&, std::span<const double>)> sigma_fn;
};

// A Regularization evaluated at a particular (data, theta).
struct Penalty {
  double tau = 1.0;
  std::vector<double> mu;
  Matrix sigma;

  int p() const { return static_cast<int>(mu.size()); }
};

// mu = 0, Sigma = I_p
Regularization reg_centered(int p, double tau);
// mu = Xbar - theta, Sigma = 1 (univariate mean parameter)
Regularization reg_invariant_mean(double tau);
// mu = -theta, Sigma = 1 (univariate mean parameter)
Regularization reg_figure2(double tau);
// mu = n^{-1} sum g_i(theta), Sigma = (n-1)^{-1} sum g_i g_i^T
Regularization reg_sample_moments(const EstimatingFunction& ef, double tau);

Penalty resolve_penalty(const Regularization& reg, const Dataset& data,
                        std::span<const double> theta, int p);
// The sample-moments preset computed directly from an assembled MomentMatrix
// (used when rows carry different parameter components, as in the hierarchical
// models).
Penalty penalty_from_moments(const MomentMatrix& m, double tau);

Penalty centered_penalty(int p, double tau);

}  // namespace retel
