#include <cmath>
#include <limits>

#include "doctest.h"
#include "retel/inference.hpp"
#include "retel/stats.hpp"

using namespace retel;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MomentMatrix scalar_moments(std::vector<double> v) {
  MomentMatrix m;
  m.g = Matrix(static_cast<int>(v.size()), 1);
  m.g.a = std::move(v);
  m.theta = {0.0};
  return m;
}

std::vector<double> linspace(double a, double b, int k) {
  std::vector<double> g(k);
  for (int j = 0; j < k; ++j) g[j] = a + (b - a) * j / (k - 1.0);
  return g;
}

}  // namespace

TEST_CASE("log posterior assembly") {
  const Dataset data = Dataset::univariate({-1.0, 1.0});
  auto etel_at = [&](double th) {
    std::vector<double> g = {-1.0 - th, 1.0 - th};
    return log_etel(scalar_moments(g));
  };
  // flat prior at the M-estimator reproduces the log-likelihood
  const Prior flat = flat_prior();
  CHECK(log_posterior(flat, etel_at, 0.0) ==
        doctest::Approx(etel_at(0.0).log_l).epsilon(1e-12));

  // hull violation zeroes the posterior
  CHECK(log_posterior(flat, etel_at, 2.0) == -kInf);

  // logistic(0,1) prior at the mode contributes log(1/4)
  const Prior lg = logistic_prior(0.0, 1.0);
  CHECK(log_posterior(lg, etel_at, 0.0) ==
        doctest::Approx(std::log(0.25) - 1.386294).epsilon(1e-6));
}

TEST_CASE("random-walk sampler recovers a standard normal") {
  auto target = [](std::span<const double> q) { return stats::normal_logpdf(q[0]); };
  CounterRng rng(100, 1);
  const double init[] = {0.3};
  const double scale[] = {2.4};
  const Chain chain = rwmh(target, init, 50000, scale, rng);
  std::vector<double> draws(chain.steps);
  for (int t = 0; t < chain.steps; ++t) draws[t] = chain.at(t, 0);
  CHECK(stats::mean(draws) == doctest::Approx(0.0).epsilon(0.05));
  CHECK(stats::variance(draws) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(chain.acceptance_rate > 0.2);
  CHECK(chain.acceptance_rate < 0.6);
}

TEST_CASE("random-walk sampler respects a bounded support") {
  auto target = [](std::span<const double> q) {
    return (q[0] >= 0.0 && q[0] <= 1.0) ? 0.0 : -kInf;
  };
  CounterRng rng(100, 2);
  const double init[] = {0.5};
  const double scale[] = {0.8};
  const Chain chain = rwmh(target, init, 4000, scale, rng);
  for (int t = 0; t < chain.steps; ++t) {
    CHECK(chain.at(t, 0) >= 0.0);
    CHECK(chain.at(t, 0) <= 1.0);
  }
  const double bad_init[] = {2.0};
  CHECK_THROWS_AS(rwmh(target, bad_init, 10, scale, rng), std::invalid_argument);
}

TEST_CASE("sampler passes a three-state detailed-balance smoke test") {
  // piecewise-constant density on [0,3) with cell weights 0.2, 0.3, 0.5
  const double w[3] = {0.2, 0.3, 0.5};
  auto target = [&](std::span<const double> q) {
    if (q[0] < 0.0 || q[0] >= 3.0) return -kInf;
    return std::log(w[static_cast<int>(q[0])]);
  };
  CounterRng rng(100, 3);
  const double init[] = {1.5};
  const double scale[] = {1.1};
  const int steps = 200000;
  const Chain chain = rwmh(target, init, steps, scale, rng);
  double freq[3] = {0, 0, 0};
  for (int t = 0; t < steps; ++t) freq[static_cast<int>(chain.at(t, 0))] += 1.0 / steps;
  // conservative effective sample size for the error bars
  const double ess = steps / 20.0;
  for (int k = 0; k < 3; ++k) {
    const double se = std::sqrt(w[k] * (1.0 - w[k]) / ess);
    CHECK(std::fabs(freq[k] - w[k]) < 3.0 * se);
  }
}

TEST_CASE("multi-chain run keeps the scale reduction factor near one") {
  auto target = [](std::span<const double> q) { return stats::normal_logpdf(q[0]); };
  const std::vector<std::vector<double>> inits = {{-2.0}, {2.0}};
  const std::vector<double> sd = {1.0};
  const PosteriorSamples ps = run_chains(target, inits, 10000, sd, 7, 1);
  REQUIRE(ps.psrf.size() == 1);
  CHECK(ps.psrf[0] < 1.1);
  CHECK(ps.burn_in == 5000);
  CHECK(ps.pooled(0).size() == 2 * 5000);
}

TEST_CASE("chains run identically with and without worker threads") {
  auto target = [](std::span<const double> q) {
    return stats::normal_logpdf(q[0]) + stats::normal_logpdf(q[1] - 1.0);
  };
  const std::vector<std::vector<double>> inits = {{0.0, 1.0}, {0.5, 0.5}, {-0.5, 1.5}};
  const std::vector<double> sd = {1.0, 1.0};
  const PosteriorSamples a = run_chains(target, inits, 2000, sd, 11, 9, 1);
  const PosteriorSamples b = run_chains(target, inits, 2000, sd, 11, 9, 4);
  for (size_t c = 0; c < a.chains.size(); ++c)
    CHECK(a.chains[c].draws == b.chains[c].draws);
}

TEST_CASE("split psrf flags an under-mixed bimodal run and honors label symmetry") {
  // two chains stuck in different modes
  auto target = [](std::span<const double> q) {
    const double a = stats::normal_logpdf((q[0] + 10.0) / 0.5);
    const double b = stats::normal_logpdf((q[0] - 10.0) / 0.5);
    return std::max(a, b);
  };
  const std::vector<std::vector<double>> inits = {{-10.0}, {10.0}};
  const std::vector<double> sd = {0.5};
  const PosteriorSamples ps = run_chains(target, inits, 2000, sd, 5, 2);
  CHECK(ps.psrf[0] > 1.1);

  std::vector<Chain> swapped = {ps.chains[1], ps.chains[0]};
  const std::vector<double> again = split_psrf(swapped, ps.burn_in);
  CHECK(again[0] == doctest::Approx(ps.psrf[0]).epsilon(1e-12));
}

TEST_CASE("identical stationary draws keep the estimator at its floor") {
  // every split sequence identical: between-sequence variance is exactly 0
  CounterRng rng(55, 1);
  std::vector<double> block(1000);
  for (double& v : block) v = rng.next_gaussian();
  Chain base;
  base.steps = 4000;
  base.dim = 1;
  base.draws = block;
  base.draws.insert(base.draws.end(), block.begin(), block.end());
  base.draws.insert(base.draws.end(), block.begin(), block.end());
  base.draws.insert(base.draws.end(), block.begin(), block.end());
  const std::vector<Chain> chains = {base, base, base};
  const std::vector<double> r = split_psrf(chains, 2000);
  CHECK(r[0] <= 1.0);
}

TEST_CASE("credible intervals from order statistics") {
  std::vector<double> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i + 1.0;
  const auto [lo, hi] = credible_interval(v, 0.95);
  CHECK(lo == doctest::Approx(3.475).epsilon(1e-12));
  CHECK(hi == doctest::Approx(97.525).epsilon(1e-12));

  const std::vector<double> c(9, 4.2);
  const auto [clo, chi_] = credible_interval(c, 0.95);
  CHECK(clo == doctest::Approx(4.2));
  CHECK(chi_ == doctest::Approx(4.2));

  std::vector<double> sym;
  for (int i = 1; i <= 40; ++i) {
    sym.push_back(i * 0.1);
    sym.push_back(-i * 0.1);
  }
  const auto [slo, shi] = credible_interval(sym, 0.9);
  CHECK(slo == doctest::Approx(-shi).epsilon(1e-12));
}

TEST_CASE("grid posterior reproduces a gaussian under a flat prior") {
  const auto grid = linspace(-6.0, 6.0, 2401);
  const GridPosterior gp = grid_posterior(
      flat_prior(), [](double th) { return stats::normal_logpdf(th); }, grid);
  double worst = 0.0;
  for (size_t j = 0; j < gp.grid.size(); ++j)
    worst = std::max(worst, std::fabs(gp.density[j] -
                                      std::exp(stats::normal_logpdf(gp.grid[j]))));
  CHECK(worst < 1e-6);
  CHECK(stats::trapezoid(gp.grid, gp.density) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("grid posterior under hull-constrained and regularized likelihoods") {
  const Dataset data = Dataset::univariate({-1.0, 1.0});
  auto etel_ll = [&](double th) {
    return log_etel(scalar_moments({-1.0 - th, 1.0 - th})).log_l;
  };
  auto retel_ll = [&](double th) {
    Penalty pen;
    pen.tau = 1.0;
    pen.mu = {0.0};
    pen.sigma = Matrix::identity(1);
    return log_retel(scalar_moments({-1.0 - th, 1.0 - th}), pen,
                     RetelVariant::Reduced)
        .log_l;
  };
  const auto grid = linspace(-3.0, 3.0, 601);
  const GridPosterior ge = grid_posterior(flat_prior(), etel_ll, grid);
  const GridPosterior gr = grid_posterior(flat_prior(), retel_ll, grid);
  for (size_t j = 0; j < ge.grid.size(); ++j) {
    if (ge.grid[j] < -1.0 - 1e-9 || ge.grid[j] > 1.0 + 1e-9)
      CHECK(ge.density[j] == 0.0);
  }
  const size_t at2 = 500;  // theta = 2
  REQUIRE(gr.grid[at2] == doctest::Approx(2.0));
  CHECK(gr.density[at2] > 0.0);

  // an all-zero posterior is an error
  auto dead = [](double) { return -kInf; };
  CHECK_THROWS(grid_posterior(flat_prior(), dead, grid));
}

TEST_CASE("posterior cdf at the generating value") {
  const auto grid = linspace(-5.0, 5.0, 2001);
  const GridPosterior gp = grid_posterior(
      flat_prior(), [](double th) { return stats::normal_logpdf(th); }, grid);
  CHECK(monahan_boos_H(gp, 0.0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(monahan_boos_H(gp, -7.0) == 0.0);
  CHECK(monahan_boos_H(gp, 7.0) == 1.0);
  // quantile consistency: H at the central interval endpoints
  const auto [lo, hi] = grid_central_interval(gp, 0.9);
  CHECK(monahan_boos_H(gp, lo) == doctest::Approx(0.05).epsilon(1e-4));
  CHECK(monahan_boos_H(gp, hi) == doctest::Approx(0.95).epsilon(1e-4));

  double prev = -1.0;
  for (double t : linspace(-6.0, 6.0, 97)) {
    const double h = monahan_boos_H(gp, t);
    CHECK(h >= prev);
    prev = h;
  }
}

TEST_CASE("grid moments") {
  const auto grid = linspace(-8.0, 12.0, 4001);
  const GridPosterior gp = grid_posterior(
      flat_prior(), [](double th) { return stats::normal_logpdf((th - 2.0) / 1.5); },
      grid);
  CHECK(grid_mean(gp) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(grid_sd(gp) == doctest::Approx(1.5).epsilon(1e-4));
}

TEST_CASE("gprior density matches the explicit bivariate normal") {
  Matrix xtx(2, 2);
  xtx(0, 0) = 4.0;
  xtx(0, 1) = 1.0;
  xtx(1, 0) = 1.0;
  xtx(1, 1) = 3.0;
  const std::vector<double> beta0 = {0.5, -0.25};
  const double g = 0.1, sigma2 = 2.0;
  // direct evaluation: cov = g sigma2 (X'X)^{-1}
  Matrix cov_inv = xtx;
  for (double& v : cov_inv.a) v /= g * sigma2;
  const std::vector<double> beta = {0.8, 0.1};
  std::vector<double> d = {beta[0] - beta0[0], beta[1] - beta0[1]};
  double quad = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) quad += d[a] * cov_inv(a, b) * d[b];
  const double det_cov = (g * sigma2) * (g * sigma2) /
                         (xtx(0, 0) * xtx(1, 1) - xtx(0, 1) * xtx(1, 0));
  const double expect =
      -std::log(2.0 * 3.14159265358979323846) - 0.5 * std::log(det_cov) - 0.5 * quad;
  CHECK(gprior_logdensity(beta, beta0, g, xtx, sigma2) ==
        doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("improper variance prior") {
  const Prior p = improper_inv_var_prior();
  CHECK(p(2.0) == doctest::Approx(-std::log(2.0)));
  CHECK(p(-1.0) == -kInf);
}

TEST_CASE("multivariate normal prior matches the product of independents") {
  Matrix cov(2, 2);
  cov(0, 0) = 4.0;
  cov(1, 1) = 0.25;
  const Prior joint = normal_prior({1.0, -2.0}, cov);
  const std::vector<double> at = {1.7, -2.3};
  const double expect = stats::normal_logpdf((at[0] - 1.0) / 2.0) - std::log(2.0) +
                        stats::normal_logpdf((at[1] + 2.0) / 0.5) - std::log(0.5);
  CHECK(joint.log_density(at) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("invalid chain inits are reported by index") {
  auto target = [](std::span<const double> q) {
    return q[0] > 0.0 ? 0.0 : -kInf;
  };
  const std::vector<std::vector<double>> inits = {{1.0}, {-1.0}};
  const std::vector<double> sd = {1.0};
  CHECK_THROWS_WITH_AS(run_chains(target, inits, 100, sd, 1, 2),
                       doctest::Contains("chain 1"), std::invalid_argument);
}
