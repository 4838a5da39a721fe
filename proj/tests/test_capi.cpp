// Exercises the shared library strictly through the C header.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "retel.h"

TEST_CASE("version and error strings exist") {
  CHECK(retel_version() != nullptr);
  CHECK(retel_last_error() != nullptr);
}

TEST_CASE("solvers through the c api") {
  const double g[2] = {-1.5, 0.5};
  double lambda = 0.0, lognorm = 0.0, grad = 1.0;
  retel_outcome outcome;
  CHECK(retel_solve_etel(g, 2, 1, &lambda, &outcome, &lognorm, &grad) == RETEL_OK);
  CHECK(outcome == RETEL_CONVERGED);
  CHECK(std::fabs(lambda - 0.5 * std::log(3.0)) < 1e-8);
  CHECK(grad <= 1e-10);

  const double bad[2] = {-3.0, -1.0};
  CHECK(retel_solve_etel(bad, 2, 1, &lambda, &outcome, nullptr, nullptr) == RETEL_OK);
  CHECK(outcome == RETEL_DIVERGED);

  CHECK(retel_solve_el(g, 2, 1, &lambda, &outcome, nullptr, nullptr) == RETEL_OK);
  CHECK(std::fabs(lambda + 2.0 / 3.0) < 1e-8);

  const double mu[1] = {-2.0};
  const double sigma[1] = {1.0};
  CHECK(retel_solve_retel(bad, 2, 1, 1.0, mu, sigma, &lambda, &outcome, nullptr,
                          nullptr) == RETEL_OK);
  CHECK(outcome == RETEL_CONVERGED);
  CHECK(std::fabs(lambda - 2.525) < 1e-3);

  const double pseudo[2] = {-0.5, 0.5};
  const double symm[2] = {-1.0, 1.0};
  CHECK(retel_solve_wetel(symm, 2, 1, pseudo, 2, &lambda, &outcome, nullptr,
                          nullptr) == RETEL_OK);
  CHECK(std::fabs(lambda) < 1e-12);
}

TEST_CASE("log-likelihoods through the c api") {
  const double g[2] = {-1.0, 1.0};
  double log_l = 0.0, log_r = 1.0;
  CHECK(retel_log_etel(g, 2, 1, &log_l, &log_r) == RETEL_OK);
  CHECK(std::fabs(log_l - 2.0 * std::log(0.5)) < 1e-12);
  CHECK(std::fabs(log_r) < 1e-12);

  const double dead[2] = {2.0, 5.0};
  CHECK(retel_log_el(dead, 2, 1, &log_l, &log_r) == RETEL_OK);
  CHECK(std::isinf(log_l));

  const double mu[1] = {0.0};
  const double sigma[1] = {1.0};
  CHECK(retel_log_retel(g, 2, 1, 1.5, mu, sigma, 1, &log_l, &log_r) == RETEL_OK);
  CHECK(std::fabs(log_r) < 1e-10);  // M-estimator preserved

  CHECK(retel_log_aetel(dead, 2, 1, -1.0, &log_l, &log_r) == RETEL_OK);
  CHECK(std::isfinite(log_l));  // augmentation restores the hull
}

TEST_CASE("input validation surfaces as error codes") {
  double lambda;
  CHECK(retel_solve_etel(nullptr, 2, 1, &lambda, nullptr, nullptr, nullptr) ==
        RETEL_ERR_INVALID);
  CHECK(std::string(retel_last_error()).size() > 0);

  const double g[2] = {-1.0, 1.0};
  const double bad_sigma[1] = {-1.0};
  const double mu[1] = {0.0};
  CHECK(retel_solve_retel(g, 2, 1, 1.0, mu, bad_sigma, &lambda, nullptr, nullptr,
                          nullptr) == RETEL_ERR_INVALID);

  int inside = 0;
  CHECK(retel_hull_contains_zero(g, 2, 1, &inside) == RETEL_OK);
  CHECK(inside == 1);
}

TEST_CASE("experiment runner through the c api") {
  retel_config* cfg = retel_config_create("logratio_curve");
  REQUIRE(cfg != nullptr);
  CHECK(retel_config_set(cfg, "grid_points", "61") == RETEL_OK);
  CHECK(retel_config_set(cfg, "out", "/tmp/retel_capi_curve.csv") == RETEL_OK);
  CHECK(retel_config_set(cfg, "bogus", "1") == RETEL_ERR_CONFIG);
  CHECK(retel_run(cfg) == RETEL_OK);
  retel_config_destroy(cfg);

  std::ifstream in("/tmp/retel_capi_curve.csv");
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "experiment,n,s,l,tau,method,metric,value,se");

  CHECK(retel_config_create("not_an_experiment") == nullptr);
}

TEST_CASE("ingestion failures map to the ingest status") {
  CHECK(retel_synth_small_area(10, 5, "/tmp/retel_capi_sa.csv") == RETEL_OK);
  retel_config* cfg = retel_config_create("small_area");
  REQUIRE(cfg != nullptr);
  CHECK(retel_config_set(cfg, "csv", "/tmp/retel_no_such_file.csv") == RETEL_OK);
  CHECK(retel_config_set(cfg, "chains", "2") == RETEL_OK);
  CHECK(retel_config_set(cfg, "chain_steps", "200") == RETEL_OK);
  CHECK(retel_config_set(cfg, "out", "/tmp/retel_capi_sa_out.csv") == RETEL_OK);
  CHECK(retel_run(cfg) == RETEL_ERR_INGEST);
  retel_config_destroy(cfg);
}
