#include "retel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "retel/errors.hpp"
#include "retel/rng.hpp"

namespace retel::stats {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_logpdf(double x) {
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

// Wichura (1988), algorithm AS 241, PPND16.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p outside (0,1)");
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -val : val;
}

std::vector<double> normal_quantile_grid(int m) {
  if (m < 1) throw std::domain_error("normal_quantile_grid: m must be positive");
  std::vector<double> q(m);
  for (int k = 1; k <= m; ++k)
    q[k - 1] = normal_quantile(static_cast<double>(k) / (m + 1));
  return q;
}

double logistic_logpdf(double x, double location, double scale) {
  const double z = std::fabs((x - location) / scale);
  return -z - 2.0 * std::log1p(std::exp(-z)) - std::log(scale);
}

double cauchy_logpdf(double x, double location, double scale) {
  const double z = (x - location) / scale;
  return -std::log(std::numbers::pi) - std::log(scale) - std::log1p(z * z);
}

// Series expansion for x < a + 1, continued fraction otherwise.
double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_p: invalid arguments");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // Lentz's continued fraction for Q(a, x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

double chisq_cdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  return gamma_p(df / 2.0, x / 2.0);
}

double chisq_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("chisq_quantile: p outside (0,1)");
  // Wilson–Hilferty start, then bisection refined by the CDF itself.
  double z = normal_quantile(p);
  double guess = df * std::pow(1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df)), 3.0);
  if (!(guess > 0.0)) guess = df;
  double lo = guess, hi = guess;
  while (chisq_cdf(lo, df) > p && lo > 1e-300) lo *= 0.5;
  while (chisq_cdf(hi, df) < p && hi < 1e300) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chisq_cdf(mid, df) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-13 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

namespace {
// Asymptotic Kolmogorov distribution Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 l^2}.
double kolmogorov_q(double lambda) {
  if (lambda < 0.04) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 1000; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-12 && k >= 8) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}
}  // namespace

KSResult ks_uniform(std::vector<double> samples) {
  if (samples.empty()) throw std::domain_error("ks_uniform: empty sample");
  for (double u : samples)
    if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("ks_uniform: sample outside [0,1]");
  std::sort(samples.begin(), samples.end());
  const int n = static_cast<int>(samples.size());
  double d = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double u = samples[i - 1];
    d = std::max(d, std::max(static_cast<double>(i) / n - u,
                             u - static_cast<double>(i - 1) / n));
  }
  return KSResult{d, kolmogorov_q(std::sqrt(static_cast<double>(n)) * d), n};
}

double DensityEstimate::operator()(double t) const {
  if (t < grid.front() || t > grid.back()) return 0.0;
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  if (it == grid.begin()) return values.front();
  if (it == grid.end()) return values.back();
  const size_t j = static_cast<size_t>(it - grid.begin());
  const double x0 = grid[j - 1], x1 = grid[j];
  const double w = (t - x0) / (x1 - x0);
  return (1.0 - w) * values[j - 1] + w * values[j];
}

DensityEstimate kde(std::span<const double> samples, std::vector<double> grid) {
  const int n = static_cast<int>(samples.size());
  if (n < 10) throw std::domain_error("kde: need at least 10 samples");
  if (grid.size() < 3) throw std::domain_error("kde: grid too small");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double sd = std::sqrt(variance(sorted));
  const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  if (!(spread > 0.0)) throw std::domain_error("kde: degenerate (zero-variance) sample");
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);

  DensityEstimate est;
  est.bandwidth = h;
  est.values.assign(grid.size(), 0.0);
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  for (size_t j = 0; j < grid.size(); ++j) {
    double s = 0.0;
    for (double x : sorted) {
      const double z = (grid[j] - x) / h;
      if (std::fabs(z) < 38.0) s += std::exp(-0.5 * z * z);
    }
    est.values[j] = norm * s;
  }
  est.grid = std::move(grid);
  const double mass = trapezoid(est.grid, est.values);
  if (!(mass > 0.0)) throw std::domain_error("kde: zero mass on grid");
  for (double& v : est.values) v /= mass;
  return est;
}

namespace {
double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double quad_rec(const std::function<double(double)>& f, double a, double fa,
                double b, double fb, double m, double fm, double whole,
                double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth >= 60)
    throw QuadratureError("adaptive_quad: recursion depth cap exceeded",
                          left + right + delta / 15.0);
  return quad_rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth + 1) +
         quad_rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth + 1);
}
}  // namespace

double adaptive_quad(const std::function<double(double)>& f, double a, double b,
                     double tol) {
  if (!(a < b)) throw std::domain_error("adaptive_quad: need a < b");
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = simpson(a, fa, b, fb, fm);
  return quad_rec(f, a, fa, b, fb, m, fm, whole, tol, 0);
}

double kl_between(const DensityEstimate& post,
                  const std::function<double(double)>& prior_logpdf) {
  // Support check: the prior must not vanish where the posterior has mass.
  for (size_t j = 0; j < post.grid.size(); ++j) {
    if (post.values[j] > 1e-12 && prior_logpdf(post.grid[j]) == -kInf)
      throw std::domain_error("kl_between: prior has no support under the posterior");
  }
  auto integrand = [&](double t) {
    const double p = post(t);
    if (p <= 1e-300) return 0.0;
    return p * (std::log(p) - prior_logpdf(t));
  };
  const double v = adaptive_quad(integrand, post.lo(), post.hi(), 1e-8);
  return std::max(0.0, v);
}

Matrix sandwich_omega(const Matrix& moments, const Matrix& jacobian) {
  const int n = moments.rows;
  const int p = moments.cols;
  if (jacobian.rows != p) throw EvalError("sandwich_omega: Jacobian rows must equal p");
  Matrix v(p, p);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) v(a, b) += moments(i, a) * moments(i, b) / n;
  Matrix vinv;
  if (!chol_inverse(v, vinv)) throw EvalError("sandwich_omega: singular V");
  const Matrix gt = transpose(jacobian);
  const Matrix a = matmul(matmul(gt, vinv), jacobian);
  Matrix omega;
  if (!chol_inverse(a, omega)) throw EvalError("sandwich_omega: G^T V^{-1} G singular");
  return omega;
}

double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double quantile(std::span<const double> sorted, double q) {
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = q * static_cast<double>(n - 1);
  const size_t k = static_cast<size_t>(std::floor(pos));
  if (k + 1 >= n) return sorted[n - 1];
  const double frac = pos - static_cast<double>(k);
  return sorted[k] + frac * (sorted[k + 1] - sorted[k]);
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (size_t j = 1; j < x.size(); ++j)
    s += 0.5 * (x[j] - x[j - 1]) * (y[j] + y[j - 1]);
  return s;
}

}  // namespace retel::stats

namespace retel {
double CounterRng::next_gaussian() {
  return stats::normal_quantile(next_open());
}
}  // namespace retel
