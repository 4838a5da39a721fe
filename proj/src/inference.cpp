#include "retel/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "retel/errors.hpp"
#include "retel/stats.hpp"

namespace retel {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Prior logistic_prior(double location, double scale) {
  return Prior{"logistic", [location, scale](std::span<const double> t) {
                 return stats::logistic_logpdf(t[0], location, scale);
               }};
}

Prior normal_prior(double mean, double variance) {
  const double sd = std::sqrt(variance);
  return Prior{"normal", [mean, sd](std::span<const double> t) {
                 return stats::normal_logpdf((t[0] - mean) / sd) - std::log(sd);
               }};
}

Prior normal_prior(std::vector<double> mean, Matrix covariance) {
  Matrix l;
  if (!cholesky(covariance, l))
    throw EvalError("normal_prior: covariance is not positive definite");
  const int d = covariance.rows;
  double log_det = 0.0;
  for (int j = 0; j < d; ++j) log_det += 2.0 * std::log(l(j, j));
  const double norm =
      -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det);
  return Prior{"normal",
               [mean = std::move(mean), cov = std::move(covariance), norm,
                d](std::span<const double> t) {
                 std::vector<double> diff(d), z(d);
                 for (int j = 0; j < d; ++j) diff[j] = t[j] - mean[j];
                 chol_solve(cov, diff, z);
                 double quad = 0.0;
                 for (int j = 0; j < d; ++j) quad += diff[j] * z[j];
                 return norm - 0.5 * quad;
               }};
}

Prior flat_prior() {
  return Prior{"flat", [](std::span<const double>) { return 0.0; }};
}

Prior improper_inv_var_prior() {
  return Prior{"inv_var", [](std::span<const double> t) {
                 return t[0] > 0.0 ? -std::log(t[0]) : -kInf;
               }};
}

double gprior_logdensity(std::span<const double> beta, std::span<const double> beta0,
                         double g, const Matrix& xtx, double sigma2) {
  const int p = static_cast<int>(beta.size());
  std::vector<double> d(p);
  for (int j = 0; j < p; ++j) d[j] = beta[j] - beta0[j];
  // quadratic form d' (X'X) d
  double quad = 0.0;
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) quad += d[a] * xtx(a, b) * d[b];
  Matrix l;
  if (!cholesky(xtx, l)) throw EvalError("gprior: X'X not positive definite");
  double log_det_xtx = 0.0;
  for (int j = 0; j < p; ++j) log_det_xtx += 2.0 * std::log(l(j, j));
  // covariance g sigma2 (X'X)^{-1}
  const double log_det_cov = p * std::log(g * sigma2) - log_det_xtx;
  return -0.5 * (p * std::log(2.0 * std::numbers::pi) + log_det_cov +
                 quad / (g * sigma2));
}

double log_posterior(const Prior& prior,
                     const std::function<LogLik(double)>& loglik, double theta) {
  const double lp = prior(theta);
  if (lp == -kInf) return -kInf;
  const LogLik ll = loglik(theta);
  if (ll.log_l == -kInf) return -kInf;
  return lp + ll.log_l;
}

Chain rwmh(const LogTarget& target, std::span<const double> init, int steps,
           std::span<const double> scales, CounterRng& rng) {
  const int dim = static_cast<int>(init.size());
  std::vector<double> cur(init.begin(), init.end());
  double cur_lp = target(cur);
  if (cur_lp == -kInf)
    throw std::invalid_argument("rwmh: initial point has zero posterior density");

  Chain chain;
  chain.steps = steps;
  chain.dim = dim;
  chain.draws.resize(static_cast<size_t>(steps) * dim);
  std::vector<double> prop(dim);
  int accepted = 0;
  for (int t = 0; t < steps; ++t) {
    for (int j = 0; j < dim; ++j)
      prop[j] = cur[j] + scales[j] * rng.next_gaussian();
    const double lp = target(prop);
    const double log_u = std::log(rng.next_open());
    if (lp > -kInf && log_u < lp - cur_lp) {
      cur = prop;
      cur_lp = lp;
      ++accepted;
    }
    std::copy(cur.begin(), cur.end(),
              chain.draws.begin() + static_cast<size_t>(t) * dim);
  }
  chain.acceptance_rate = static_cast<double>(accepted) / steps;
  return chain;
}

PilotResult tune_scales(const LogTarget& target, std::span<const double> init,
                        std::span<const double> sd_guess, int pilot_steps,
                        CounterRng& rng) {
  const int dim = static_cast<int>(init.size());
  const double base = 2.4 / std::sqrt(static_cast<double>(dim));
  double factor = 1.0;
  std::vector<double> sd(sd_guess.begin(), sd_guess.end());
  std::vector<double> state(init.begin(), init.end());

  const int window = 200;
  const int windows = std::max(1, pilot_steps / window);
  // pooled draws (after a transient) give a far steadier spread estimate than
  // any single window
  std::vector<std::vector<double>> pool(dim);
  for (int w = 0; w < windows; ++w) {
    std::vector<double> scales(dim);
    for (int j = 0; j < dim; ++j) scales[j] = factor * base * sd[j];
    const Chain c = rwmh(target, state, window, scales, rng);
    for (int j = 0; j < dim; ++j) state[j] = c.at(window - 1, j);
    // nudge the global factor toward a workable acceptance rate
    factor *= std::exp(1.2 * (c.acceptance_rate - 0.3));
    factor = std::clamp(factor, 1e-3, 1e3);
    std::vector<double> col(window);
    for (int j = 0; j < dim; ++j) {
      for (int t = 0; t < window; ++t) col[t] = c.at(t, j);
      const double v = stats::variance(col);
      if (v > 0.0) sd[j] = 0.5 * sd[j] + 0.5 * std::sqrt(v);
      if (w >= windows / 3)
        pool[j].insert(pool[j].end(), col.begin(), col.end());
    }
  }
  for (int j = 0; j < dim; ++j) {
    if (pool[j].size() > 100) {
      const double v = stats::variance(pool[j]);
      if (v > 0.0) sd[j] = std::sqrt(v);
    }
  }
  PilotResult res;
  res.scales.resize(dim);
  for (int j = 0; j < dim; ++j) res.scales[j] = factor * base * sd[j];
  res.state = std::move(state);
  return res;
}

std::vector<double> PosteriorSamples::pooled(int coord) const {
  std::vector<double> out;
  for (const Chain& c : chains)
    for (int t = burn_in; t < c.steps; ++t) out.push_back(c.at(t, coord));
  return out;
}

double PosteriorSamples::max_psrf() const {
  double m = 0.0;
  for (double v : psrf) m = std::max(m, v);
  return m;
}

std::vector<double> split_psrf(const std::vector<Chain>& chains, int burn_in) {
  const int dim = chains.front().dim;
  const int retained = chains.front().steps - burn_in;
  const int half = retained / 2;
  std::vector<double> out(dim);
  std::vector<double> seq(half);
  for (int j = 0; j < dim; ++j) {
    std::vector<double> means, vars;
    for (const Chain& c : chains) {
      for (int s = 0; s < 2; ++s) {
        const int start = burn_in + s * half;
        for (int t = 0; t < half; ++t) seq[t] = c.at(start + t, j);
        means.push_back(stats::mean(seq));
        vars.push_back(stats::variance(seq));
      }
    }
    const double w = stats::mean(vars);
    const double b = half * stats::variance(means);
    if (w <= 0.0) {
      out[j] = 1.0;  // all sequences constant
      continue;
    }
    const double var_plus = (half - 1.0) / half * w + b / half;
    out[j] = std::sqrt(var_plus / w);
  }
  return out;
}

PosteriorSamples run_chains(const LogTarget& target,
                            const std::vector<std::vector<double>>& inits,
                            int steps, std::span<const double> sd_guess,
                            std::uint64_t seed, std::uint64_t stream,
                            int threads) {
  const int k = static_cast<int>(inits.size());
  if (k < 2)
    throw std::invalid_argument("run_chains: need at least two chains for the PSRF");
  for (int c = 0; c < k; ++c)
    if (target(inits[c]) == -kInf)
      throw std::invalid_argument("run_chains: invalid init for chain " +
                                  std::to_string(c));
  PosteriorSamples ps;
  ps.burn_in = steps / 2;
  ps.chains.resize(k);
  const int dim = static_cast<int>(inits.front().size());
  const int pilot_steps = std::max(1000, 100 * dim);
  auto run_one = [&](int c) {
    CounterRng rng(seed, stream, 0x9E3779B9ULL + static_cast<std::uint64_t>(c));
    const PilotResult pilot =
        tune_scales(target, inits[c], sd_guess, pilot_steps, rng);
    ps.chains[c] = rwmh(target, pilot.state, steps, pilot.scales, rng);
  };
  if (threads <= 1) {
    for (int c = 0; c < k; ++c) run_one(c);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    const int workers = std::min(threads, k);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const int c = next.fetch_add(1);
          if (c >= k) return;
          run_one(c);
        }
      });
    for (std::thread& t : pool) t.join();
  }
  ps.psrf = split_psrf(ps.chains, ps.burn_in);
  return ps;
}

std::pair<double, double> credible_interval(std::span<const double> samples,
                                            double level) {
  if (samples.empty()) throw std::invalid_argument("credible_interval: empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double alpha = (1.0 - level) / 2.0;
  return {stats::quantile(sorted, alpha), stats::quantile(sorted, 1.0 - alpha)};
}

GridPosterior grid_posterior(const Prior& prior,
                             const std::function<double(double)>& loglik,
                             std::span<const double> grid) {
  if (grid.size() < 3) throw std::invalid_argument("grid_posterior: need >= 3 grid points");
  for (size_t j = 1; j < grid.size(); ++j)
    if (!(grid[j] > grid[j - 1]))
      throw std::invalid_argument("grid_posterior: grid must be strictly increasing");

  GridPosterior gp;
  gp.grid.assign(grid.begin(), grid.end());
  std::vector<double> lp(grid.size());
  double mx = -kInf;
  for (size_t j = 0; j < grid.size(); ++j) {
    const double pr = prior(grid[j]);
    lp[j] = (pr == -kInf) ? -kInf : pr + loglik(grid[j]);
    mx = std::max(mx, lp[j]);
  }
  if (mx == -kInf)
    throw EvalError("grid_posterior: posterior vanishes on the entire grid");
  gp.density.resize(grid.size());
  for (size_t j = 0; j < grid.size(); ++j)
    gp.density[j] = (lp[j] == -kInf) ? 0.0 : std::exp(lp[j] - mx);
  const double mass = stats::trapezoid(gp.grid, gp.density);
  for (double& v : gp.density) v /= mass;
  return gp;
}

double monahan_boos_H(const GridPosterior& gp, double theta_true) {
  if (theta_true <= gp.grid.front()) return 0.0;
  if (theta_true >= gp.grid.back()) return 1.0;
  double cum = 0.0;
  for (size_t j = 1; j < gp.grid.size(); ++j) {
    const double cell =
        0.5 * (gp.grid[j] - gp.grid[j - 1]) * (gp.density[j] + gp.density[j - 1]);
    if (theta_true <= gp.grid[j]) {
      const double w = (theta_true - gp.grid[j - 1]) / (gp.grid[j] - gp.grid[j - 1]);
      return std::clamp(cum + w * cell, 0.0, 1.0);
    }
    cum += cell;
  }
  return 1.0;
}

double grid_mean(const GridPosterior& gp) {
  std::vector<double> ty(gp.grid.size());
  for (size_t j = 0; j < gp.grid.size(); ++j) ty[j] = gp.grid[j] * gp.density[j];
  return stats::trapezoid(gp.grid, ty);
}

double grid_sd(const GridPosterior& gp) {
  const double m = grid_mean(gp);
  std::vector<double> ty(gp.grid.size());
  for (size_t j = 0; j < gp.grid.size(); ++j)
    ty[j] = (gp.grid[j] - m) * (gp.grid[j] - m) * gp.density[j];
  return std::sqrt(stats::trapezoid(gp.grid, ty));
}

std::pair<double, double> grid_central_interval(const GridPosterior& gp, double level) {
  const double alpha = (1.0 - level) / 2.0;
  // invert the trapezoid CDF at alpha and 1 - alpha
  auto invert = [&](double q) {
    double cum = 0.0;
    for (size_t j = 1; j < gp.grid.size(); ++j) {
      const double cell =
          0.5 * (gp.grid[j] - gp.grid[j - 1]) * (gp.density[j] + gp.density[j - 1]);
      if (cum + cell >= q) {
        const double w = cell > 0.0 ? (q - cum) / cell : 0.0;
        return gp.grid[j - 1] + w * (gp.grid[j] - gp.grid[j - 1]);
      }
      cum += cell;
    }
    return gp.grid.back();
  };
  return {invert(alpha), invert(1.0 - alpha)};
}

}  // namespace retel
