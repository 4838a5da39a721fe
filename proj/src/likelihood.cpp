#include "retel/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "retel/errors.hpp"

namespace retel {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Exponents lambda' g_i for the rows of a matrix.
std::vector<double> tilts(const Matrix& g, std::span<const double> lambda) {
  std::vector<double> s(g.rows);
  for (int i = 0; i < g.rows; ++i) {
    double v = 0.0;
    for (int j = 0; j < g.cols; ++j) v += lambda[j] * g(i, j);
    s[i] = v;
  }
  return s;
}

double lse(std::span<const double> s, double extra = -kInf) {
  double mx = extra;
  for (double v : s) mx = std::max(mx, v);
  double sum = (extra == -kInf) ? 0.0 : std::exp(extra - mx);
  for (double v : s) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

double penalty_exponent(const Penalty& pen, std::span<const double> lambda) {
  double s = std::log(pen.tau);
  const int p = pen.p();
  for (int j = 0; j < p; ++j) {
    double sl = 0.0;
    for (int k = 0; k < p; ++k) sl += pen.sigma(j, k) * lambda[k];
    s += lambda[j] * (pen.mu[j] + 0.5 * sl);
  }
  return s;
}

void require_converged(const DualSolution& sol) {
  if (sol.status != SolveStatus::Converged)
    throw std::invalid_argument("weights_from_dual: solution not converged");
}
}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::EL: return "EL";
    case Method::ETEL: return "ETEL";
    case Method::AETEL: return "AETEL";
    case Method::WETEL: return "WETEL";
    case Method::RETEL_f: return "RETEL_f";
    case Method::RETEL_r: return "RETEL_r";
  }
  return "?";
}

std::optional<Method> method_from_string(std::string_view name) {
  if (name == "EL") return Method::EL;
  if (name == "ETEL") return Method::ETEL;
  if (name == "AETEL") return Method::AETEL;
  if (name == "WETEL") return Method::WETEL;
  if (name == "RETEL_f") return Method::RETEL_f;
  if (name == "RETEL_r") return Method::RETEL_r;
  return std::nullopt;
}

TiltedWeights weights_from_dual(const MomentMatrix& m, const DualSolution& sol) {
  require_converged(sol);
  const std::vector<double> s = tilts(m.g, sol.lambda);
  const double f = lse(s);
  TiltedWeights w;
  w.p.resize(m.n());
  for (int i = 0; i < m.n(); ++i) w.p[i] = std::exp(s[i] - f);
  return w;
}

TiltedWeights weights_from_dual(const MomentMatrix& m, const DualSolution& sol,
                                const Penalty& pen) {
  require_converged(sol);
  const std::vector<double> s = tilts(m.g, sol.lambda);
  const double sq = penalty_exponent(pen, sol.lambda);
  const double f = lse(s, sq);  // log c_n
  TiltedWeights w;
  w.p.resize(m.n());
  for (int i = 0; i < m.n(); ++i) w.p[i] = std::exp(s[i] - f);
  w.p_c = std::exp(sq - f);
  return w;
}

TiltedWeights weights_from_dual(const MomentMatrix& m, const PseudoData& pseudo,
                                const DualSolution& sol) {
  require_converged(sol);
  std::vector<double> s = tilts(m.g, sol.lambda);
  const std::vector<double> sp = tilts(pseudo.rows, sol.lambda);
  const double log_m = std::log(static_cast<double>(pseudo.m()));
  s.reserve(s.size() + sp.size());
  for (double v : sp) s.push_back(v - log_m);
  const double f = lse(s);
  TiltedWeights w;
  w.p.resize(s.size());
  for (size_t i = 0; i < s.size(); ++i) w.p[i] = std::exp(s[i] - f);
  return w;
}

LogLik log_etel(const MomentMatrix& m, const SolverSettings& s) {
  DualSolution sol = solve_etel(m, s);
  LogLik ll{-kInf, -kInf, Method::ETEL, std::move(sol)};
  if (ll.solution.status != SolveStatus::Converged) return ll;
  const std::vector<double> sv = tilts(m.g, ll.solution.lambda);
  const double f = lse(sv);
  double log_l = 0.0;
  for (double v : sv) log_l += v - f;
  ll.log_l = log_l;
  ll.log_r = log_l + m.n() * std::log(static_cast<double>(m.n()));
  return ll;
}

LogLik log_el(const MomentMatrix& m, const SolverSettings& s) {
  DualSolution sol = solve_el(m, s);
  LogLik ll{-kInf, -kInf, Method::EL, std::move(sol)};
  if (ll.solution.status != SolveStatus::Converged) return ll;
  const int n = m.n();
  double sum_log_z = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = 1.0;
    for (int j = 0; j < m.p(); ++j) z += ll.solution.lambda[j] * m.g(i, j);
    sum_log_z += std::log(z);
  }
  ll.log_r = -sum_log_z;
  ll.log_l = ll.log_r - n * std::log(static_cast<double>(n));
  return ll;
}

LogLik log_aetel(const MomentMatrix& m, double a_n, const SolverSettings& s) {
  if (a_n <= 0.0) a_n = default_adjustment(m.n());
  const MomentMatrix aug = aetel_augment(m, a_n);
  LogLik ll = log_etel(aug, s);
  ll.method = Method::AETEL;
  if (ll.solution.status == SolveStatus::Converged) {
    const int n1 = aug.n();
    ll.log_r = ll.log_l + n1 * std::log(static_cast<double>(n1));
  }
  return ll;
}

LogLik log_wetel(const MomentMatrix& m, const PseudoData& pseudo,
                 const SolverSettings& s) {
  DualSolution sol = solve_wetel(m, pseudo, s);
  LogLik ll{-kInf, -kInf, Method::WETEL, std::move(sol)};
  if (ll.solution.status != SolveStatus::Converged) return ll;
  const int n = m.n();
  const int mm = pseudo.m();
  const double nn = n + mm;  // N
  const double log_m = std::log(static_cast<double>(mm));
  std::vector<double> sv = tilts(m.g, ll.solution.lambda);
  const std::vector<double> sp = tilts(pseudo.rows, ll.solution.lambda);
  sv.reserve(sv.size() + sp.size());
  for (double v : sp) sv.push_back(v - log_m);
  const double f = lse(sv);
  // base weights: 1/(n+1) for data, 1/(m(n+1)) for pseudo
  const double log_wd = -std::log(static_cast<double>(n + 1));
  const double log_wp = log_wd - log_m;
  double log_l = 0.0, log_r = 0.0;
  for (int i = 0; i < n + mm; ++i) {
    const double w = (i < n) ? 1.0 / (n + 1.0) : 1.0 / (mm * (n + 1.0));
    const double log_p = sv[i] - f;
    log_l += nn * w * log_p;
    log_r += nn * w * (log_p - (i < n ? log_wd : log_wp));
  }
  ll.log_l = log_l;
  ll.log_r = log_r;
  return ll;
}

LogLik retel_loglik(const MomentMatrix& m, const Penalty& pen,
                    DualSolution sol, RetelVariant variant) {
  const std::vector<double> sv = tilts(m.g, sol.lambda);
  const double sq = penalty_exponent(pen, sol.lambda);
  const double f = lse(sv, sq);  // log c_n
  const int n = m.n();
  const double log_npt = std::log(n + pen.tau);
  double sum_log_p = 0.0;
  for (double v : sv) sum_log_p += v - f;
  LogLik ll{0.0, 0.0, variant == RetelVariant::Full ? Method::RETEL_f : Method::RETEL_r,
            std::move(sol)};
  if (variant == RetelVariant::Full) {
    const double log_pc = sq - f;
    ll.log_l = log_pc + sum_log_p;
    ll.log_r = ll.log_l + (n + 1) * log_npt - std::log(pen.tau);
  } else {
    ll.log_l = sum_log_p;
    ll.log_r = sum_log_p + n * log_npt;
  }
  return ll;
}

LogLik log_retel(const MomentMatrix& m, const Penalty& pen, RetelVariant variant,
                 const SolverSettings& s) {
  return retel_loglik(m, pen, solve_retel(m, pen, s), variant);
}

LogLik log_retel(const MomentMatrix& m, const Regularization& reg,
                 const Dataset& data, RetelVariant variant,
                 const SolverSettings& s) {
  const Penalty pen = resolve_penalty(reg, data, m.theta, m.p());
  return log_retel(m, pen, variant, s);
}

}  // namespace retel
