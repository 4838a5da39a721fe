#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "retel/likelihood.hpp"
#include "retel/rng.hpp"

namespace retel {

struct Prior {
  std::string name;
  std::function<double(std::span<const double>)> log_density;

  double operator()(double theta) const { return log_density({&theta, 1}); }
};

Prior logistic_prior(double location, double scale);
Prior normal_prior(double mean, double variance);
Prior normal_prior(std::vector<double> mean, Matrix covariance);
Prior flat_prior();
// pi(sigma^2) proportional to 1/sigma^2 on sigma^2 > 0, -inf otherwise
Prior improper_inv_var_prior();

// Zellner g-prior density log N(beta; beta0, g sigma2 (X'X)^{-1}), including
// the sigma2-dependent normalization (sigma2 is a sampled parameter).
double gprior_logdensity(std::span<const double> beta, std::span<const double> beta0,
                         double g, const Matrix& xtx, double sigma2);

// log pi(theta) + log L(theta); -inf if either factor is -inf.
double log_posterior(const Prior& prior,
                     const std::function<LogLik(double)>& loglik, double theta);

using LogTarget = std::function<double(std::span<const double>)>;

struct Chain {
  std::vector<double> draws;  // steps x dim, row-major
  int steps = 0;
  int dim = 0;
  double acceptance_rate = 0.0;

  double at(int t, int j) const { return draws[static_cast<size_t>(t) * dim + j]; }
};

// Random-walk Metropolis–Hastings with independent Gaussian increments and
// per-coordinate scales; reproducible given the rng stream.
Chain rwmh(const LogTarget& target, std::span<const double> init, int steps,
           std::span<const double> scales, CounterRng& rng);

// Short discarded warm phase: targets a sensible acceptance rate by a global
// factor and re-estimates per-coordinate spread. Returns (scales, end state).
struct PilotResult {
  std::vector<double> scales;
  std::vector<double> state;
};
PilotResult tune_scales(const LogTarget& target, std::span<const double> init,
                        std::span<const double> sd_guess, int pilot_steps,
                        CounterRng& rng);

struct PosteriorSamples {
  std::vector<Chain> chains;
  std::vector<double> psrf;  // per coordinate, split-chain estimator
  int burn_in = 0;           // discarded before diagnostics and summaries

  int dim() const { return chains.empty() ? 0 : chains.front().dim; }
  // post-burn-in draws of one coordinate pooled over chains
  std::vector<double> pooled(int coord) const;
  double max_psrf() const;
};

// k >= 2 chains with sub-streams derived from (rng key, chain index); pilot
// phase discarded, burn_in = steps/2. Chains run concurrently when threads > 1
// with identical results either way.
PosteriorSamples run_chains(const LogTarget& target,
                            const std::vector<std::vector<double>>& inits,
                            int steps, std::span<const double> sd_guess,
                            std::uint64_t seed, std::uint64_t stream,
                            int threads = 1);

// Split-chain potential scale reduction factor for one coordinate given the
// retained (post-burn-in) sequences.
std::vector<double> split_psrf(const std::vector<Chain>& chains, int burn_in);

// Central (equal-tailed) interval from empirical quantiles with plotting
// position (k-1)/(n-1).
std::pair<double, double> credible_interval(std::span<const double> samples,
                                            double level);

struct GridPosterior {
  std::vector<double> grid;     // strictly increasing
  std::vector<double> density;  // trapezoid-integrates to 1
};

GridPosterior grid_posterior(const Prior& prior,
                             const std::function<double(double)>& loglik,
                             std::span<const double> grid);

// Trapezoid CDF at theta_true, linearly interpolated inside a grid cell;
// clamps to 0/1 outside the grid.
double monahan_boos_H(const GridPosterior& gp, double theta_true);

double grid_mean(const GridPosterior& gp);
double grid_sd(const GridPosterior& gp);
std::pair<double, double> grid_central_interval(const GridPosterior& gp, double level);

}  // namespace retel
