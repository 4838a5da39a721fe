#pragma once

#include <optional>
#include <string_view>

#include "retel/model.hpp"
#include "retel/solver.hpp"

namespace retel {

enum class Method { EL, ETEL, AETEL, WETEL, RETEL_f, RETEL_r };

const char* method_name(Method m);
std::optional<Method> method_from_string(std::string_view name);

// Tilted probabilities p_1..p_n (or p_1..p_{n+m} for the weighted likelihood)
// plus the continuous-component mass p_c for the regularized one. Sums to 1.
struct TiltedWeights {
  std::vector<double> p;
  std::optional<double> p_c;
};

struct LogLik {
  double log_l;
  double log_r;
  Method method;
  DualSolution solution;
};

// p_i proportional to exp(lambda' g_i); requires a Converged solution.
TiltedWeights weights_from_dual(const MomentMatrix& m, const DualSolution& sol);
// p_i = exp(lambda' g_i) / c_n, p_c = p_n / c_n
TiltedWeights weights_from_dual(const MomentMatrix& m, const DualSolution& sol,
                                const Penalty& pen);
// n + m entries, p_i proportional to w_i exp(lambda' g_i) with fractional base weights
TiltedWeights weights_from_dual(const MomentMatrix& m, const PseudoData& pseudo,
                                const DualSolution& sol);

// log L = sum log p_i, log R = log L + n log n; -inf under hull violation.
LogLik log_etel(const MomentMatrix& m, const SolverSettings& s = {});

// Classical EL comparator with p_i = 1 / (n (1 + lambda' g_i)).
LogLik log_el(const MomentMatrix& m, const SolverSettings& s = {});

// ETEL on the matrix augmented with the pseudo-observation of the adjusted
// likelihood; a_n <= 0 selects the default adjustment max(1, log(n)/2).
LogLik log_aetel(const MomentMatrix& m, double a_n = 0.0,
                 const SolverSettings& s = {});

// log L = N sum w_i log p_i, log R = N sum w_i log(p_i / w_i) <= 0.
LogLik log_wetel(const MomentMatrix& m, const PseudoData& pseudo,
                 const SolverSettings& s = {});

enum class RetelVariant { Full, Reduced };  // with the p_c factor / without

// Assembles the regularized likelihood values from an already computed dual
// solution (also usable with the best iterate carried by a diagnostic error).
LogLik retel_loglik(const MomentMatrix& m, const Penalty& pen,
                    DualSolution sol, RetelVariant variant);

LogLik log_retel(const MomentMatrix& m, const Penalty& pen, RetelVariant variant,
                 const SolverSettings& s = {});
LogLik log_retel(const MomentMatrix& m, const Regularization& reg,
                 const Dataset& data, RetelVariant variant,
                 const SolverSettings& s = {});

}  // namespace retel
