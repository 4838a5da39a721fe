#ifndef RETEL_H
#define RETEL_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum retel_status {
  RETEL_OK = 0,
  RETEL_ERR_INVALID = 1, /* bad arguments or numeric input */
  RETEL_ERR_CONFIG = 2,  /* config parse/validation failure */
  RETEL_ERR_INGEST = 3,  /* data file ingestion failure */
  RETEL_ERR_RUNTIME = 4  /* solver or runtime failure */
} retel_status;

typedef enum retel_outcome {
  RETEL_CONVERGED = 0,
  RETEL_DIVERGED = 1,
  RETEL_MAX_ITERATIONS = 2
} retel_outcome;

const char* retel_version(void);

/* Thread-local message describing the last failing call on this thread. */
const char* retel_last_error(void);

/*
 * Dual solvers over a row-major n x p moment matrix. Any output pointer may
 * be NULL. lambda must have room for p doubles. grad_norm is the stationarity
 * residual scaled by 1/n.
 */
retel_status retel_solve_etel(const double* g, int n, int p, double* lambda,
                              retel_outcome* outcome, double* log_normalizer,
                              double* grad_norm);
retel_status retel_solve_el(const double* g, int n, int p, double* lambda,
                            retel_outcome* outcome, double* log_normalizer,
                            double* grad_norm);
/* pseudo is row-major m x p. */
retel_status retel_solve_wetel(const double* g, int n, int p, const double* pseudo,
                               int m, double* lambda, retel_outcome* outcome,
                               double* log_normalizer, double* grad_norm);
/*
 * Penalized dual: mu has length p, sigma is row-major p x p positive definite,
 * tau > 0. Never diverges; if the iteration cap is hit the best iterate is
 * written and RETEL_ERR_RUNTIME is returned with outcome RETEL_MAX_ITERATIONS.
 */
retel_status retel_solve_retel(const double* g, int n, int p, double tau,
                               const double* mu, const double* sigma,
                               double* lambda, retel_outcome* outcome,
                               double* log_normalizer, double* grad_norm);

/* Log-likelihood and log-likelihood-ratio; zero likelihood comes back as -inf. */
retel_status retel_log_etel(const double* g, int n, int p, double* log_l,
                            double* log_r);
retel_status retel_log_el(const double* g, int n, int p, double* log_l,
                          double* log_r);
/* a_n <= 0 selects the default adjustment max(1, log(n)/2). */
retel_status retel_log_aetel(const double* g, int n, int p, double a_n,
                             double* log_l, double* log_r);
retel_status retel_log_wetel(const double* g, int n, int p, const double* pseudo,
                             int m, double* log_l, double* log_r);
/* reduced = 0 keeps the continuous-component mass in the likelihood. */
retel_status retel_log_retel(const double* g, int n, int p, double tau,
                             const double* mu, const double* sigma, int reduced,
                             double* log_l, double* log_r);

/* result = 1 iff 0 lies strictly inside the convex hull of the rows
 * (exact for p <= 2, advisory for p >= 3). */
retel_status retel_hull_contains_zero(const double* g, int n, int p, int* result);

/*
 * Batch experiment runner. A config starts from the named experiment's
 * defaults (uniformity, coverage, kl, lambda_convergence, logratio_curve,
 * wilks, small_area); key = value text or individual sets refine it, and
 * retel_run writes the result CSV to the configured out path.
 */
typedef struct retel_config retel_config;

retel_config* retel_config_create(const char* experiment);
retel_status retel_config_load_file(retel_config* cfg, const char* path);
retel_status retel_config_load_string(retel_config* cfg, const char* text);
retel_status retel_config_set(retel_config* cfg, const char* key, const char* value);
retel_status retel_run(retel_config* cfg);
void retel_config_destroy(retel_config* cfg);

/* Writes a synthetic area-level dataset (header y,x1,x2) for the small_area
 * pipeline. */
retel_status retel_synth_small_area(int areas, uint64_t seed, const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* RETEL_H */
