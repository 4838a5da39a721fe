#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "retel/errors.hpp"
#include "retel/harness.hpp"
#include "retel/stats.hpp"

namespace retel::harness {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MomentMatrix mean_moments(const Dataset& d, double theta) {
  MomentMatrix m;
  m.g = Matrix(d.n(), 1);
  for (int i = 0; i < d.n(); ++i) m.g(i, 0) = d.rows(i, 0) - theta;
  m.theta = {theta};
  return m;
}

Penalty invariant_mean_penalty(double xbar, double theta, double tau) {
  Penalty pen;
  pen.tau = tau;
  pen.mu = {xbar - theta};
  pen.sigma = Matrix::identity(1);
  return pen;
}

// log-likelihood of one method for the univariate mean model
double mean_model_loglik(Method method, const Dataset& data, double xbar,
                         double tau, double theta) {
  const MomentMatrix m = mean_moments(data, theta);
  switch (method) {
    case Method::ETEL:
      return log_etel(m).log_l;
    case Method::EL:
      return log_el(m).log_l;
    case Method::AETEL:
      return log_aetel(m).log_l;
    case Method::RETEL_f:
    case Method::RETEL_r: {
      const Penalty pen = invariant_mean_penalty(xbar, theta, tau);
      const RetelVariant v =
          method == Method::RETEL_f ? RetelVariant::Full : RetelVariant::Reduced;
      try {
        return log_retel(m, pen, v).log_l;
      } catch (const SolverDiagnosticError& e) {
        return retel_loglik(m, pen, e.best, v).log_l;
      }
    }
    case Method::WETEL:
      break;
  }
  throw ConfigError("method not supported in this study");
}

double mean_model_logratio(Method method, const Dataset& data, double xbar,
                           double tau, double theta) {
  const MomentMatrix m = mean_moments(data, theta);
  switch (method) {
    case Method::ETEL:
      return log_etel(m).log_r;
    case Method::EL:
      return log_el(m).log_r;
    case Method::AETEL:
      return log_aetel(m).log_r;
    case Method::RETEL_f:
    case Method::RETEL_r: {
      const Penalty pen = invariant_mean_penalty(xbar, theta, tau);
      const RetelVariant v =
          method == Method::RETEL_f ? RetelVariant::Full : RetelVariant::Reduced;
      try {
        return log_retel(m, pen, v).log_r;
      } catch (const SolverDiagnosticError& e) {
        return retel_loglik(m, pen, e.best, v).log_r;
      }
    }
    case Method::WETEL:
      break;
  }
  throw ConfigError("method not supported in this study");
}

double sample_logistic(double l, double s, CounterRng& rng) {
  const double u = rng.next_open();
  return l + s * std::log(u / (1.0 - u));
}

Dataset normal_data(double mean, int n, CounterRng& rng) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = mean + rng.next_gaussian();
  return Dataset::univariate(std::move(x));
}

double se_of_mean(std::span<const double> x) {
  if (x.size() < 2) return std::nan("");
  return std::sqrt(stats::variance(x) / static_cast<double>(x.size()));
}

}  // namespace

ResultTable run_uniformity(const ExperimentConfig& cfg) {
  struct Cell {
    int n;
    double s;
    TauRule tau;
  };
  std::vector<Cell> cells;
  for (int n : cfg.n_values)
    for (double s : cfg.s_values)
      for (const TauRule& t : cfg.tau_rules) cells.push_back({n, s, t});

  const int nm = static_cast<int>(cfg.methods.size());
  const int reps = cfg.reps;
  std::vector<std::vector<std::vector<double>>> H(
      cells.size(), std::vector<std::vector<double>>(nm, std::vector<double>(reps)));

  parallel_for(static_cast<int>(cells.size()) * reps, cfg.threads, [&](int job) {
    const int ci = job / reps;
    const int rep = job % reps;
    const Cell& cell = cells[ci];
    CounterRng rng(cfg.seed, stream_key(ci, rep, 0));
    const double theta0 = sample_logistic(0.0, cell.s, rng);
    const Dataset data = normal_data(theta0, cell.n, rng);
    double xbar = 0.0;
    for (int i = 0; i < cell.n; ++i) xbar += data.rows(i, 0);
    xbar /= cell.n;
    const double tau = cell.tau.value(cell.n);
    const double half = 6.0 * std::max(1.0, cell.s) / std::sqrt(cell.n);
    const Prior prior = logistic_prior(0.0, cell.s);
    for (int mi = 0; mi < nm; ++mi) {
      const Method method = cfg.methods[mi];
      const GridPosterior gp = adaptive_grid_posterior(
          prior,
          [&](double th) { return mean_model_loglik(method, data, xbar, tau, th); },
          xbar, half, cfg.grid_points);
      H[ci][mi][rep] = monahan_boos_H(gp, theta0);
    }
  });

  ResultTable table;
  const double nan = std::nan("");
  for (size_t ci = 0; ci < cells.size(); ++ci) {
    const Cell& cell = cells[ci];
    for (int mi = 0; mi < nm; ++mi) {
      const std::string method = method_name(cfg.methods[mi]);
      const stats::KSResult ks = stats::ks_uniform(H[ci][mi]);
      table.rows.push_back({cfg.experiment, static_cast<double>(cell.n), cell.s, nan,
                            cell.tau.label(), method, "ks_stat", ks.statistic, nan});
      table.rows.push_back({cfg.experiment, static_cast<double>(cell.n), cell.s, nan,
                            cell.tau.label(), method, "ks_pvalue", ks.p_value, nan});
      std::vector<double> sorted = H[ci][mi];
      std::sort(sorted.begin(), sorted.end());
      for (double h : sorted)
        table.rows.push_back({cfg.experiment, static_cast<double>(cell.n), cell.s, nan,
                              cell.tau.label(), method, "H_sorted", h, nan});
    }
  }
  return table;
}

ResultTable run_coverage(const ExperimentConfig& cfg) {
  struct Cell {
    int n;
    double s;
    double l;
    TauRule tau;
  };
  std::vector<Cell> cells;
  for (int n : cfg.n_values)
    for (double s : cfg.s_values)
      for (double l : cfg.l_values)
        for (const TauRule& t : cfg.tau_rules) cells.push_back({n, s, l, t});

  const int nm = static_cast<int>(cfg.methods.size());
  const int reps = cfg.reps;
  struct Rep {
    double covered;
    double length;
  };
  std::vector<std::vector<std::vector<Rep>>> out(
      cells.size(), std::vector<std::vector<Rep>>(nm, std::vector<Rep>(reps)));

  parallel_for(static_cast<int>(cells.size()) * reps, cfg.threads, [&](int job) {
    const int ci = job / reps;
    const int rep = job % reps;
    const Cell& cell = cells[ci];
    CounterRng rng(cfg.seed, stream_key(ci, rep, 1));
    const Dataset data = normal_data(0.0, cell.n, rng);  // theta_0 = 0
    double xbar = 0.0;
    for (int i = 0; i < cell.n; ++i) xbar += data.rows(i, 0);
    xbar /= cell.n;
    const double tau = cell.tau.value(cell.n);
    const double half = 6.0 * std::max(1.0, cell.s) / std::sqrt(cell.n);
    const Prior prior = logistic_prior(cell.l, cell.s);
    for (int mi = 0; mi < nm; ++mi) {
      const Method method = cfg.methods[mi];
      const GridPosterior gp = adaptive_grid_posterior(
          prior,
          [&](double th) { return mean_model_loglik(method, data, xbar, tau, th); },
          xbar, half, cfg.grid_points);
      const auto [lo, hi] = grid_central_interval(gp, 0.95);
      out[ci][mi][rep] = {lo <= 0.0 && 0.0 <= hi ? 1.0 : 0.0, hi - lo};
    }
  });

  ResultTable table;
  std::vector<double> cov(reps), len(reps);
  for (size_t ci = 0; ci < cells.size(); ++ci) {
    const Cell& cell = cells[ci];
    for (int mi = 0; mi < nm; ++mi) {
      for (int r = 0; r < reps; ++r) {
        cov[r] = out[ci][mi][r].covered;
        len[r] = out[ci][mi][r].length;
      }
      const std::string method = method_name(cfg.methods[mi]);
      table.rows.push_back({cfg.experiment, static_cast<double>(cell.n), cell.s, cell.l,
                            cell.tau.label(), method, "coverage",
                            100.0 * stats::mean(cov), 100.0 * se_of_mean(cov)});
      table.rows.push_back({cfg.experiment, static_cast<double>(cell.n), cell.s, cell.l,
                            cell.tau.label(), method, "length", stats::mean(len),
                            se_of_mean(len)});
    }
  }
  return table;
}

ResultTable run_wilks(const ExperimentConfig& cfg) {
  struct Cell {
    int n;
    TauRule tau;
  };
  std::vector<Cell> cells;
  for (int n : cfg.n_values)
    for (const TauRule& t : cfg.tau_rules) cells.push_back({n, t});

  const int nm = static_cast<int>(cfg.methods.size());
  const int reps = cfg.reps;
  std::vector<std::vector<std::vector<double>>> stat(
      cells.size(), std::vector<std::vector<double>>(nm, std::vector<double>(reps)));

  parallel_for(static_cast<int>(cells.size()) * reps, cfg.threads, [&](int job) {
    const int ci = job / reps;
    const int rep = job % reps;
    const Cell& cell = cells[ci];
    CounterRng rng(cfg.seed, stream_key(ci, rep, 2));
    const Dataset data = normal_data(0.0, cell.n, rng);
    double xbar = 0.0;
    for (int i = 0; i < cell.n; ++i) xbar += data.rows(i, 0);
    xbar /= cell.n;
    const double tau = cell.tau.value(cell.n);
    for (int mi = 0; mi < nm; ++mi)
      stat[ci][mi][rep] =
          -2.0 * mean_model_logratio(cfg.methods[mi], data, xbar, tau, 0.0);
  });

  ResultTable table;
  const double nan = std::nan("");
  for (size_t ci = 0; ci < cells.size(); ++ci) {
    const Cell& cell = cells[ci];
    for (int mi = 0; mi < nm; ++mi) {
      std::vector<double> u;
      u.reserve(reps);
      for (double v : stat[ci][mi])
        if (std::isfinite(v)) u.push_back(stats::chisq_cdf(v, 1.0));
      const std::string method = method_name(cfg.methods[mi]);
      const double finite_frac = static_cast<double>(u.size()) / reps;
      if (!u.empty()) {
        const stats::KSResult ks = stats::ks_uniform(u);
        table.rows.push_back({cfg.experiment, static_cast<double>(cell.n), nan, nan,
                              cell.tau.label(), method, "ks_stat", ks.statistic, nan});
        table.rows.push_back({cfg.experiment, static_cast<double>(cell.n), nan, nan,
                              cell.tau.label(), method, "ks_pvalue", ks.p_value, nan});
      }
      table.rows.push_back({cfg.experiment, static_cast<double>(cell.n), nan, nan,
                            cell.tau.label(), method, "finite_frac", finite_frac, nan});
    }
  }
  return table;
}

namespace {

// Hierarchical two-experiment model of the expected-information study.
struct KlSetup {
  Method method;
  const Dataset* d1;
  const Dataset* d2;
  double xbar1, xbar2;
  double tau;

  double loglik(const Dataset& d, double xbar, double theta) const {
    return mean_model_loglik(method, d, xbar, tau, theta);
  }

  double operator()(std::span<const double> q) const {
    const double th1 = q[0], th2 = q[1], mu = q[2];
    const double l1 = loglik(*d1, xbar1, th1);
    if (l1 == -kInf) return -kInf;
    const double l2 = loglik(*d2, xbar2, th2);
    if (l2 == -kInf) return -kInf;
    return l1 + l2 + stats::cauchy_logpdf(th1, mu, 1.0) +
           stats::cauchy_logpdf(th2, mu, 1.0) +
           stats::normal_logpdf(mu / 10.0) - std::log(10.0);
  }
};

}  // namespace

ResultTable run_kl(const ExperimentConfig& cfg) {
  const int nm = static_cast<int>(cfg.methods.size());
  const int reps = cfg.reps;
  const int cellcount = static_cast<int>(cfg.n_values.size());
  std::vector<std::vector<std::vector<double>>> ekl(
      cellcount, std::vector<std::vector<double>>(nm, std::vector<double>(reps)));
  std::vector<std::vector<std::vector<double>>> psrf_max(
      cellcount, std::vector<std::vector<double>>(nm, std::vector<double>(reps)));
  std::vector<std::vector<std::pair<std::vector<double>, std::vector<double>>>> marginal(
      cellcount, std::vector<std::pair<std::vector<double>, std::vector<double>>>(nm));

  const Prior mu_prior = normal_prior(0.0, 100.0);

  parallel_for(cellcount * reps, cfg.threads, [&](int job) {
    const int ci = job / reps;
    const int rep = job % reps;
    const int n = cfg.n_values[ci];
    CounterRng rng(cfg.seed, stream_key(ci, rep, 3));
    const Dataset d1 = normal_data(-3.0, n, rng);
    const Dataset d2 = normal_data(3.0, n, rng);
    auto colmean = [](const Dataset& d) {
      double s = 0.0;
      for (int i = 0; i < d.n(); ++i) s += d.rows(i, 0);
      return s / d.n();
    };
    const double xbar1 = colmean(d1), xbar2 = colmean(d2);
    auto range = [](const Dataset& d) {
      double lo = d.rows(0, 0), hi = d.rows(0, 0);
      for (int i = 1; i < d.n(); ++i) {
        lo = std::min(lo, d.rows(i, 0));
        hi = std::max(hi, d.rows(i, 0));
      }
      return std::max(hi - lo, 1e-3);
    };
    const double r1 = range(d1), r2 = range(d2);
    // tau_n = 1 at n = 2, log n otherwise
    const double tau = (n == 2) ? 1.0 : std::log(static_cast<double>(n));

    for (int mi = 0; mi < nm; ++mi) {
      KlSetup target{cfg.methods[mi], &d1, &d2, xbar1, xbar2, tau};
      std::vector<std::vector<double>> inits;
      CounterRng init_rng(cfg.seed, stream_key(ci, rep, 100 + mi));
      for (int c = 0; c < cfg.chains; ++c) {
        std::vector<double> q(3);
        double shrink = 0.3;
        for (int attempt = 0; attempt < 60; ++attempt) {
          q[0] = xbar1 + shrink * r1 * (init_rng.next_open() - 0.5);
          q[1] = xbar2 + shrink * r2 * (init_rng.next_open() - 0.5);
          const double mid = 0.5 * (q[0] + q[1]);
          const double spread = 1.5 + 2.0 * init_rng.next_open();
          q[2] = mid + ((c % 2 == 0) ? spread : -spread);
          if (target(q) > -kInf) break;
          shrink *= 0.8;
        }
        inits.push_back(q);
      }
      const std::vector<double> sd_guess = {r1 / 4.0, r2 / 4.0, 2.0};
      const PosteriorSamples ps =
          run_chains(target, inits, cfg.chain_steps, sd_guess, cfg.seed,
                     stream_key(ci, rep, 200 + mi));
      const std::vector<double> mu = ps.pooled(2);
      auto [lo_it, hi_it] = std::minmax_element(mu.begin(), mu.end());
      const double pad = 0.1 * std::max(*hi_it - *lo_it, 1e-3) + 1e-6;
      std::vector<double> grid(801);
      const double lo = *lo_it - pad, hi = *hi_it + pad;
      for (int j = 0; j < 801; ++j) grid[j] = lo + (hi - lo) * j / 800.0;
      const stats::DensityEstimate post = stats::kde(mu, std::move(grid));
      ekl[ci][mi][rep] = stats::kl_between(
          post, [&](double t) { return mu_prior.log_density({&t, 1}); });
      psrf_max[ci][mi][rep] = ps.max_psrf();
      if (cfg.emit_marginal && ci == 0 && rep == 0)
        marginal[ci][mi] = {post.grid, post.values};
    }
  });

  ResultTable table;
  const double nan = std::nan("");
  for (int ci = 0; ci < cellcount; ++ci) {
    const double n = cfg.n_values[ci];
    const std::string tau_label = (cfg.n_values[ci] == 2) ? "1" : "log_n";
    for (int mi = 0; mi < nm; ++mi) {
      const std::string method = method_name(cfg.methods[mi]);
      table.rows.push_back({cfg.experiment, n, nan, nan, tau_label, method, "ekl",
                            stats::mean(ekl[ci][mi]), se_of_mean(ekl[ci][mi])});
      const double mean_psrf = stats::mean(psrf_max[ci][mi]);
      table.rows.push_back({cfg.experiment, n, nan, nan, tau_label, method,
                            "psrf_mean", mean_psrf, se_of_mean(psrf_max[ci][mi])});
      table.rows.push_back({cfg.experiment, n, nan, nan, tau_label, method,
                            "psrf_warn", mean_psrf > 1.1 ? 1.0 : 0.0, nan});
      if (cfg.emit_marginal && ci == 0) {
        for (double g : marginal[ci][mi].first)
          table.rows.push_back(
              {cfg.experiment, n, nan, nan, tau_label, method, "marginal_mu", g, nan});
        for (double v : marginal[ci][mi].second)
          table.rows.push_back({cfg.experiment, n, nan, nan, tau_label, method,
                                "marginal_density", v, nan});
      }
    }
  }
  return table;
}

ResultTable run_lambda_convergence(const ExperimentConfig& cfg) {
  const Dataset data = Dataset::univariate({-2.0, 2.0});
  const std::vector<double> thetas = {1.0, 3.0};
  ResultTable table;
  const double nan = std::nan("");
  for (double theta : thetas) {
    const MomentMatrix m = mean_moments(data, theta);
    const DualSolution ret = solve_retel(m, centered_penalty(1, 1.0));
    table.rows.push_back(
        {cfg.experiment, nan, theta, nan, "1", "RETEL", "lambda", ret.lambda[0], nan});
    for (int k = 1; k <= 12; ++k) {
      const int mm = 1 << k;
      const PseudoData pseudo =
          PseudoData::univariate(stats::normal_quantile_grid(mm));
      const DualSolution wet = solve_wetel(m, pseudo);
      table.rows.push_back({cfg.experiment, static_cast<double>(mm), theta, nan, "1",
                            "WETEL", "lambda", wet.lambda[0], nan});
      table.rows.push_back({cfg.experiment, static_cast<double>(mm), theta, nan, "1",
                            "WETEL", "gap", std::fabs(wet.lambda[0] - ret.lambda[0]),
                            nan});
      table.rows.push_back({cfg.experiment, static_cast<double>(mm), theta, nan, "1",
                            "WETEL", "converged",
                            wet.status == SolveStatus::Converged ? 1.0 : 0.0, nan});
    }
  }
  return table;
}

ResultTable run_logratio_curve(const ExperimentConfig& cfg) {
  const Dataset data = Dataset::univariate({0.0});
  ResultTable table;
  const double nan = std::nan("");
  for (const TauRule& rule : cfg.tau_rules) {
    if (rule.log_n) throw ConfigError("logratio_curve needs constant tau values");
    const double tau = rule.c;
    for (int j = 0; j < cfg.grid_points; ++j) {
      const double theta = -3.0 + 6.0 * j / (cfg.grid_points - 1.0);
      const MomentMatrix m = mean_moments(data, theta);
      Penalty pen;
      pen.tau = tau;
      pen.mu = {-theta};
      pen.sigma = Matrix::identity(1);
      const DualSolution sol = solve_retel(m, pen);
      const LogLik full = retel_loglik(m, pen, sol, RetelVariant::Full);
      const LogLik reduced = retel_loglik(m, pen, sol, RetelVariant::Reduced);
      table.rows.push_back({cfg.experiment, nan, theta, nan, rule.label(), "RETEL_f",
                            "log_ratio", full.log_r, nan});
      table.rows.push_back({cfg.experiment, nan, theta, nan, rule.label(), "RETEL_r",
                            "log_ratio", reduced.log_r, nan});
    }
  }
  return table;
}

namespace {

struct AreaModel {
  Method method;
  const SmallAreaData* data;
  Matrix x;      // n x 2 standardized covariates
  Matrix xtx;    // X'X
  std::vector<double> beta0;
  double g = 0.1;
  double tau;    // log n
  int n;

  double operator()(std::span<const double> q) const {
    const double v = q[n + 2];
    if (std::fabs(v) > 50.0) return -kInf;
    const double sigma2 = std::exp(v);
    const double sigma = std::sqrt(sigma2);

    MomentMatrix m;
    m.g = Matrix(n, 2);
    for (int i = 0; i < n; ++i) {
      const double r = data->y[i] - q[i];
      m.g(i, 0) = r;
      m.g(i, 1) = r * r - 1.0;  // V_i = 1
    }
    double ll;
    switch (method) {
      case Method::ETEL:
        ll = log_etel(m).log_l;
        break;
      case Method::EL:
        ll = log_el(m).log_l;
        break;
      case Method::RETEL_f:
      case Method::RETEL_r: {
        const RetelVariant var =
            method == Method::RETEL_f ? RetelVariant::Full : RetelVariant::Reduced;
        try {
          const Penalty pen = penalty_from_moments(m, tau);
          ll = log_retel(m, pen, var).log_l;
        } catch (const SolverDiagnosticError& e) {
          ll = retel_loglik(m, penalty_from_moments(m, tau), e.best, var).log_l;
        } catch (const EvalError&) {
          return -kInf;  // degenerate sample second moment
        }
        break;
      }
      default:
        return -kInf;
    }
    if (ll == -kInf) return -kInf;

    // theta_i | beta, sigma2 ~ N(X_i' beta, sigma2)
    double lp = 0.0;
    const std::span<const double> beta = q.subspan(n, 2);
    for (int i = 0; i < n; ++i) {
      const double mean_i = x(i, 0) * beta[0] + x(i, 1) * beta[1];
      lp += stats::normal_logpdf((q[i] - mean_i) / sigma) - std::log(sigma);
    }
    lp += gprior_logdensity(beta, beta0, g, xtx, sigma2);
    // pi(sigma2) ~ 1/sigma2 is flat in v = log sigma2
    return ll + lp;
  }
};

}  // namespace

AreaMetrics area_metrics(std::span<const double> theta_hat,
                         std::span<const double> y) {
  const int n = static_cast<int>(y.size());
  AreaMetrics m{0.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < n; ++i) {
    const double dev = theta_hat[i] - y[i];
    const double rel = dev / y[i];
    m.aad += std::fabs(dev) / n;
    m.aard += std::fabs(rel) / n;
    m.asd += dev * dev / n;
    m.asrd += rel * rel / n;
  }
  return m;
}

ResultTable run_small_area(const std::string& csv_path, const ExperimentConfig& cfg) {
  SmallAreaData data = load_small_area_csv(csv_path);
  standardize(data.y);
  standardize(data.x1);
  standardize(data.x2);
  const int n = data.n;

  Matrix x(n, 2);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = data.x1[i];
    x(i, 1) = data.x2[i];
  }
  Matrix xtx(2, 2);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) xtx(a, b) += x(i, a) * x(i, b);
  std::vector<double> xty(2, 0.0), beta0(2);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < 2; ++a) xty[a] += x(i, a) * data.y[i];
  if (!chol_solve(xtx, xty, beta0))
    throw IngestError("small_area: X'X is singular", 0, 0);

  std::vector<double> resid(n);
  for (int i = 0; i < n; ++i)
    resid[i] = data.y[i] - x(i, 0) * beta0[0] - x(i, 1) * beta0[1];
  const double resid_var = stats::variance(resid);
  const double sigma2_hat = std::max(0.05, resid_var - 1.0);

  const double tau = cfg.tau_rules.empty() ? std::log(static_cast<double>(n))
                                           : cfg.tau_rules[0].value(n);
  const int dim = n + 3;
  const int threads = cfg.threads > 0
                          ? cfg.threads
                          : static_cast<int>(std::thread::hardware_concurrency());

  ResultTable table;
  const double nan = std::nan("");
  for (size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const Method method = cfg.methods[mi];
    AreaModel target{method, &data, x, xtx, beta0, 0.1, tau, n};

    std::vector<std::vector<double>> inits;
    for (int c = 0; c < cfg.chains; ++c) {
      CounterRng ir(cfg.seed, stream_key(9000 + mi, c, 4));
      std::vector<double> q(dim);
      bool ok = false;
      for (int attempt = 0; attempt < 60 && !ok; ++attempt) {
        for (int i = 0; i < n; ++i)
          q[i] = x(i, 0) * beta0[0] + x(i, 1) * beta0[1] +
                 std::sqrt(sigma2_hat) * ir.next_gaussian();
        q[n] = beta0[0] + 0.2 * ir.next_gaussian();
        q[n + 1] = beta0[1] + 0.2 * ir.next_gaussian();
        q[n + 2] = std::log(sigma2_hat) + 0.3 * ir.next_gaussian();
        ok = target(q) > -kInf;
      }
      if (!ok)
        throw ConfigError("small_area: could not find a valid init for chain " +
                          std::to_string(c));
      inits.push_back(q);
    }

    std::vector<double> sd_guess(dim, 0.5);
    sd_guess[n] = 0.3;
    sd_guess[n + 1] = 0.3;
    sd_guess[n + 2] = 0.3;
    const PosteriorSamples ps =
        run_chains(target, inits, cfg.chain_steps, sd_guess, cfg.seed,
                   stream_key(9100, mi, 5), threads);

    const std::string mname = method_name(method);
    std::vector<double> theta_hat(n);
    double mean_len = 0.0;
    for (int i = 0; i < n; ++i) {
      std::vector<double> draws = ps.pooled(i);
      std::sort(draws.begin(), draws.end());
      const double med = stats::quantile(draws, 0.5);
      const auto [lo, hi] = credible_interval(draws, 0.95);
      theta_hat[i] = med;
      mean_len += (hi - lo) / n;
      table.rows.push_back({cfg.experiment, static_cast<double>(i + 1), nan, nan,
                            "log_n", mname, "theta_med", med, nan});
      table.rows.push_back({cfg.experiment, static_cast<double>(i + 1), nan, nan,
                            "log_n", mname, "theta_lo", lo, nan});
      table.rows.push_back({cfg.experiment, static_cast<double>(i + 1), nan, nan,
                            "log_n", mname, "theta_hi", hi, nan});
    }
    const AreaMetrics metrics = area_metrics(theta_hat, data.y);
    table.rows.push_back({cfg.experiment, static_cast<double>(n), nan, nan, "log_n",
                          mname, "aad", metrics.aad, nan});
    table.rows.push_back({cfg.experiment, static_cast<double>(n), nan, nan, "log_n",
                          mname, "aard", metrics.aard, nan});
    table.rows.push_back({cfg.experiment, static_cast<double>(n), nan, nan, "log_n",
                          mname, "asd", metrics.asd, nan});
    table.rows.push_back({cfg.experiment, static_cast<double>(n), nan, nan, "log_n",
                          mname, "asrd", metrics.asrd, nan});
    table.rows.push_back({cfg.experiment, static_cast<double>(n), nan, nan, "log_n",
                          mname, "length", mean_len, nan});
    table.rows.push_back({cfg.experiment, static_cast<double>(n), nan, nan, "log_n",
                          mname, "psrf_max", ps.max_psrf(), nan});
  }
  return table;
}

}  // namespace retel::harness
