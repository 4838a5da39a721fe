#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

#include "retel/model.hpp"

namespace retel {

enum class SolveStatus { Converged, Diverged, MaxIterations };

// Tilting multiplier with convergence diagnostics. log_normalizer is the log
// of the dual objective at lambda (log d_n for the unpenalized duals, log c_n
// for the penalized one; for EL it is the maximized sum of log(1 + lambda'g),
// i.e. -log R).
struct DualSolution {
  std::vector<double> lambda;
  SolveStatus status = SolveStatus::Diverged;
  int iterations = 0;
  double grad_norm = std::numeric_limits<double>::infinity();
  double log_normalizer = -std::numeric_limits<double>::infinity();
  std::vector<double> trace;  // accepted objective values when recorded
};

struct SolverSettings {
  double grad_tol = 1e-10;             // on the 1/n-scaled stationarity residual
  int max_iter = 100;
  double divergence_lambda_norm = 0.0; // 0 -> 200 sqrt(p)
  double line_search_shrink = 0.5;
  bool record_trace = false;
};

// Penalized solver hit max_iter; carries the best iterate found.
struct SolverDiagnosticError : std::runtime_error {
  SolverDiagnosticError(const std::string& msg, DualSolution sol)
      : std::runtime_error(msg), best(std::move(sol)) {}
  DualSolution best;
};

// argmin_lambda sum_i exp(lambda' g_i); Diverged signals hull violation.
DualSolution solve_etel(const MomentMatrix& m, const SolverSettings& s = {});

// argmin_lambda { sum_{i<=n} exp(lambda' g_i) + m^{-1} sum_j exp(lambda' q_j) }
DualSolution solve_wetel(const MomentMatrix& m, const PseudoData& pseudo,
                         const SolverSettings& s = {});

// argmin_lambda { sum_i exp(lambda' g_i) + tau exp(lambda'mu + lambda'Sigma lambda/2) }.
// Always converges (unique global minimizer); throws SolverDiagnosticError on
// max_iter. n = 0 is allowed (pure penalty, lambda = -Sigma^{-1} mu).
DualSolution solve_retel(const MomentMatrix& m, const Penalty& pen,
                         const SolverSettings& s = {});
DualSolution solve_retel(const MomentMatrix& m, const Regularization& reg,
                         const Dataset& data, const SolverSettings& s = {});

// Classical EL dual (Owen): lambda satisfies sum_i g_i / (1 + lambda' g_i) = 0
// with 1 + lambda' g_i > 1/n for all i.
DualSolution solve_el(const MomentMatrix& m, const SolverSettings& s = {});

}  // namespace retel
