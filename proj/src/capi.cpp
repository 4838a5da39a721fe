#include "retel.h"

#include <cmath>
#include <cstring>
#include <string>

#include "retel/errors.hpp"
#include "retel/harness.hpp"
#include "retel/likelihood.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
retel_status guarded(Fn&& fn) {
  try {
    fn();
    return RETEL_OK;
  } catch (const retel::ConfigError& e) {
    set_error(e.what());
    return RETEL_ERR_CONFIG;
  } catch (const retel::IngestError& e) {
    set_error(e.what());
    return RETEL_ERR_INGEST;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return RETEL_ERR_INVALID;
  } catch (const std::domain_error& e) {
    set_error(e.what());
    return RETEL_ERR_INVALID;
  } catch (const retel::EvalError& e) {
    set_error(e.what());
    return RETEL_ERR_INVALID;
  } catch (const std::exception& e) {
    set_error(e.what());
    return RETEL_ERR_RUNTIME;
  }
}

retel::MomentMatrix make_moments(const double* g, int n, int p) {
  if (g == nullptr && n > 0) throw std::invalid_argument("moment matrix is null");
  if (n < 0 || p < 1) throw std::invalid_argument("bad moment matrix dimensions");
  retel::MomentMatrix m;
  m.g = retel::Matrix(n, p);
  if (n > 0) std::memcpy(m.g.a.data(), g, sizeof(double) * static_cast<size_t>(n) * p);
  return m;
}

retel::PseudoData make_pseudo(const double* q, int m, int p) {
  if (q == nullptr) throw std::invalid_argument("pseudo-data is null");
  if (m < 1) throw std::invalid_argument("pseudo-data must be nonempty");
  retel::Matrix mat(m, p);
  std::memcpy(mat.a.data(), q, sizeof(double) * static_cast<size_t>(m) * p);
  return retel::PseudoData(std::move(mat));
}

retel::Penalty make_penalty(double tau, const double* mu, const double* sigma, int p) {
  if (mu == nullptr || sigma == nullptr)
    throw std::invalid_argument("penalty mu/sigma is null");
  retel::Penalty pen;
  pen.tau = tau;
  pen.mu.assign(mu, mu + p);
  pen.sigma = retel::Matrix(p, p);
  std::memcpy(pen.sigma.a.data(), sigma, sizeof(double) * static_cast<size_t>(p) * p);
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  return pen;
}

void store_solution(const retel::DualSolution& sol, int p, double* lambda,
                    retel_outcome* outcome, double* log_normalizer,
                    double* grad_norm) {
  if (lambda != nullptr)
    for (int j = 0; j < p; ++j) lambda[j] = sol.lambda[j];
  if (outcome != nullptr) {
    switch (sol.status) {
      case retel::SolveStatus::Converged: *outcome = RETEL_CONVERGED; break;
      case retel::SolveStatus::Diverged: *outcome = RETEL_DIVERGED; break;
      case retel::SolveStatus::MaxIterations: *outcome = RETEL_MAX_ITERATIONS; break;
    }
  }
  if (log_normalizer != nullptr) *log_normalizer = sol.log_normalizer;
  if (grad_norm != nullptr) *grad_norm = sol.grad_norm;
}

void store_loglik(const retel::LogLik& ll, double* log_l, double* log_r) {
  if (log_l != nullptr) *log_l = ll.log_l;
  if (log_r != nullptr) *log_r = ll.log_r;
}

}  // namespace

struct retel_config {
  retel::harness::ExperimentConfig cfg;
};

extern "C" {

const char* retel_version(void) { return "0.1.0"; }

const char* retel_last_error(void) { return g_last_error.c_str(); }

retel_status retel_solve_etel(const double* g, int n, int p, double* lambda,
                              retel_outcome* outcome, double* log_normalizer,
                              double* grad_norm) {
  return guarded([&] {
    const retel::DualSolution sol = retel::solve_etel(make_moments(g, n, p));
    store_solution(sol, p, lambda, outcome, log_normalizer, grad_norm);
  });
}

retel_status retel_solve_el(const double* g, int n, int p, double* lambda,
                            retel_outcome* outcome, double* log_normalizer,
                            double* grad_norm) {
  return guarded([&] {
    const retel::DualSolution sol = retel::solve_el(make_moments(g, n, p));
    store_solution(sol, p, lambda, outcome, log_normalizer, grad_norm);
  });
}

retel_status retel_solve_wetel(const double* g, int n, int p, const double* pseudo,
                               int m, double* lambda, retel_outcome* outcome,
                               double* log_normalizer, double* grad_norm) {
  return guarded([&] {
    const retel::DualSolution sol =
        retel::solve_wetel(make_moments(g, n, p), make_pseudo(pseudo, m, p));
    store_solution(sol, p, lambda, outcome, log_normalizer, grad_norm);
  });
}

retel_status retel_solve_retel(const double* g, int n, int p, double tau,
                               const double* mu, const double* sigma,
                               double* lambda, retel_outcome* outcome,
                               double* log_normalizer, double* grad_norm) {
  try {
    const retel::DualSolution sol =
        retel::solve_retel(make_moments(g, n, p), make_penalty(tau, mu, sigma, p));
    store_solution(sol, p, lambda, outcome, log_normalizer, grad_norm);
    return RETEL_OK;
  } catch (const retel::SolverDiagnosticError& e) {
    store_solution(e.best, p, lambda, outcome, log_normalizer, grad_norm);
    set_error(e.what());
    return RETEL_ERR_RUNTIME;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return RETEL_ERR_INVALID;
  } catch (const std::exception& e) {
    set_error(e.what());
    return RETEL_ERR_RUNTIME;
  }
}

retel_status retel_log_etel(const double* g, int n, int p, double* log_l,
                            double* log_r) {
  return guarded([&] { store_loglik(retel::log_etel(make_moments(g, n, p)), log_l, log_r); });
}

retel_status retel_log_el(const double* g, int n, int p, double* log_l,
                          double* log_r) {
  return guarded([&] { store_loglik(retel::log_el(make_moments(g, n, p)), log_l, log_r); });
}

retel_status retel_log_aetel(const double* g, int n, int p, double a_n,
                             double* log_l, double* log_r) {
  return guarded([&] {
    store_loglik(retel::log_aetel(make_moments(g, n, p), a_n), log_l, log_r);
  });
}

retel_status retel_log_wetel(const double* g, int n, int p, const double* pseudo,
                             int m, double* log_l, double* log_r) {
  return guarded([&] {
    store_loglik(retel::log_wetel(make_moments(g, n, p), make_pseudo(pseudo, m, p)),
                 log_l, log_r);
  });
}

retel_status retel_log_retel(const double* g, int n, int p, double tau,
                             const double* mu, const double* sigma, int reduced,
                             double* log_l, double* log_r) {
  return guarded([&] {
    const retel::RetelVariant variant =
        reduced != 0 ? retel::RetelVariant::Reduced : retel::RetelVariant::Full;
    store_loglik(retel::log_retel(make_moments(g, n, p),
                                  make_penalty(tau, mu, sigma, p), variant),
                 log_l, log_r);
  });
}

retel_status retel_hull_contains_zero(const double* g, int n, int p, int* result) {
  return guarded([&] {
    if (result == nullptr) throw std::invalid_argument("result is null");
    *result = retel::hull_contains_zero(make_moments(g, n, p)) ? 1 : 0;
  });
}

retel_config* retel_config_create(const char* experiment) {
  if (experiment == nullptr) {
    set_error("experiment name is null");
    return nullptr;
  }
  try {
    auto* handle = new retel_config{retel::harness::default_config(experiment)};
    return handle;
  } catch (const std::exception& e) {
    set_error(e.what());
    return nullptr;
  }
}

retel_status retel_config_load_file(retel_config* cfg, const char* path) {
  return guarded([&] {
    if (cfg == nullptr || path == nullptr)
      throw std::invalid_argument("null config or path");
    retel::harness::apply_config_text(cfg->cfg, retel::harness::read_file(path));
  });
}

retel_status retel_config_load_string(retel_config* cfg, const char* text) {
  return guarded([&] {
    if (cfg == nullptr || text == nullptr)
      throw std::invalid_argument("null config or text");
    retel::harness::apply_config_text(cfg->cfg, text);
  });
}

retel_status retel_config_set(retel_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    if (cfg == nullptr || key == nullptr || value == nullptr)
      throw std::invalid_argument("null config, key or value");
    retel::harness::apply_key(cfg->cfg, key, value);
  });
}

retel_status retel_run(retel_config* cfg) {
  return guarded([&] {
    if (cfg == nullptr) throw std::invalid_argument("null config");
    retel::harness::validate(cfg->cfg);
    const retel::harness::ResultTable table = retel::harness::run_experiment(cfg->cfg);
    retel::harness::write_file(cfg->cfg.out_path, table.to_csv());
  });
}

void retel_config_destroy(retel_config* cfg) { delete cfg; }

retel_status retel_synth_small_area(int areas, uint64_t seed, const char* out_path) {
  return guarded([&] {
    if (out_path == nullptr) throw std::invalid_argument("null output path");
    if (areas < 3) throw std::invalid_argument("need at least 3 areas");
    retel::harness::write_file(out_path,
                               retel::harness::synth_small_area_csv(areas, seed));
  });
}

}  // extern "C"
