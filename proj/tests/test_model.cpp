#include <cmath>
#include <numbers>

#include "doctest.h"
#include "retel/errors.hpp"
#include "retel/model.hpp"
#include "retel/rng.hpp"

using namespace retel;

namespace {

MomentMatrix from_values(std::vector<double> v) {
  MomentMatrix m;
  m.g = Matrix(static_cast<int>(v.size()), 1);
  m.g.a = std::move(v);
  m.theta = {0.0};
  return m;
}

MomentMatrix from_rows2(std::vector<std::pair<double, double>> rows) {
  MomentMatrix m;
  m.g = Matrix(static_cast<int>(rows.size()), 2);
  for (size_t i = 0; i < rows.size(); ++i) {
    m.g(static_cast<int>(i), 0) = rows[i].first;
    m.g(static_cast<int>(i), 1) = rows[i].second;
  }
  m.theta = {0.0, 0.0};
  return m;
}

// oracle for the planar case: 0 is interior iff the support function
// min over directions of max_i d'g_i stays positive on a dense angle grid
double hull_support_min_2d(const MomentMatrix& m) {
  double smin = 1e300;
  for (int k = 0; k < 1440; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 1440.0;
    const double dx = std::cos(a), dy = std::sin(a);
    double best = -1e300;
    for (int i = 0; i < m.n(); ++i)
      best = std::max(best, dx * m.g(i, 0) + dy * m.g(i, 1));
    smin = std::min(smin, best);
  }
  return smin;
}

bool hull_oracle_2d(const MomentMatrix& m) { return hull_support_min_2d(m) > 1e-12; }

}  // namespace

TEST_CASE("evaluate_moments for the mean function") {
  const auto ef = mean_function(1);
  const Dataset data = Dataset::univariate({-1.0, 1.0});
  const double theta_half[] = {0.5};
  const MomentMatrix m = evaluate_moments(ef, data, theta_half);
  CHECK(m.g(0, 0) == doctest::Approx(-1.5));
  CHECK(m.g(1, 0) == doctest::Approx(0.5));
  CHECK(m.theta[0] == 0.5);

  const double theta_zero[] = {0.0};
  const MomentMatrix m0 = evaluate_moments(ef, data, theta_zero);
  CHECK(m0.col_mean()[0] == doctest::Approx(0.0));
}

TEST_CASE("evaluate_moments for the mean_var function") {
  const auto ef = mean_var_function();
  const Dataset data = Dataset::univariate({2.0});
  const double theta[] = {1.0, 1.0};  // (theta, V)
  const MomentMatrix m = evaluate_moments(ef, data, theta);
  CHECK(m.g(0, 0) == doctest::Approx(1.0));
  CHECK(m.g(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("evaluate_moments is row-local under permutation") {
  const auto ef = mean_function(1);
  CounterRng rng(3, 14);
  std::vector<double> x(9);
  for (double& v : x) v = rng.next_gaussian();
  auto perm = x;
  std::swap(perm[0], perm[5]);
  std::swap(perm[2], perm[8]);
  const double theta[] = {0.3};
  const MomentMatrix a = evaluate_moments(ef, Dataset::univariate(x), theta);
  const MomentMatrix b = evaluate_moments(ef, Dataset::univariate(perm), theta);
  CHECK(a.g(0, 0) == b.g(5, 0));
  CHECK(a.g(2, 0) == b.g(8, 0));
  CHECK(a.g(1, 0) == b.g(1, 0));
}

TEST_CASE("evaluate_moments rejects a mismatched observation width") {
  const auto ef = mean_function(2);
  const Dataset data = Dataset::univariate({1.0, 2.0});  // width 1, needs 2
  const double theta[] = {0.0, 0.0};
  CHECK_THROWS_AS(evaluate_moments(ef, data, theta), EvalError);
}

TEST_CASE("evaluate_moments flags non-finite rows") {
  EstimatingFunction bad;
  bad.p = 1;
  bad.x_dim = 1;
  bad.theta_dim = 1;
  bad.name = "bad";
  bad.eval = [](std::span<const double> x, std::span<const double>,
                std::span<double> out) { out[0] = std::log(x[0]); };
  const Dataset data = Dataset::univariate({1.0, -1.0});
  const double theta[] = {0.0};
  CHECK_THROWS_WITH_AS(evaluate_moments(bad, data, theta),
                       doctest::Contains("row 1"), EvalError);
}

TEST_CASE("hull test in one dimension") {
  CHECK(hull_contains_zero(from_values({-1.5, 0.5})));
  CHECK_FALSE(hull_contains_zero(from_values({-3.0, -1.0})));
  CHECK_FALSE(hull_contains_zero(from_values({0.0})));
  CHECK_FALSE(hull_contains_zero(from_values({2.0, 5.0})));
  CHECK(hull_contains_zero(from_values({-1.0, 0.0, 1.0})));
}

TEST_CASE("hull test in two dimensions") {
  // 0 interior to the triangle; oracle: exact half-plane check on all edges
  const auto tri = from_rows2({{1, 0}, {-1, 1}, {-1, -1}});
  CHECK(hull_oracle_2d(tri));
  CHECK(hull_contains_zero(tri));

  CHECK_FALSE(hull_contains_zero(from_rows2({{1, 0}, {0, 1}, {1, 1}})));
  // two opposite points span a segment with empty interior
  CHECK_FALSE(hull_contains_zero(from_rows2({{1, 1}, {-1, -1}})));
}

TEST_CASE("hull test agrees with a brute-force sweep on random planar sets") {
  CounterRng rng(21, 9);
  int compared = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 3 + static_cast<int>(rng.next_u64() % 6);
    std::vector<std::pair<double, double>> rows(n);
    const double shift_x = (trial % 3 == 0) ? 1.5 : 0.0;  // push some off-center
    for (auto& r : rows)
      r = {rng.next_gaussian() + shift_x, rng.next_gaussian()};
    const auto m = from_rows2(rows);
    const double smin = hull_support_min_2d(m);
    if (std::fabs(smin) < 0.05) continue;  // too close to call for the coarse sweep
    CHECK(hull_contains_zero(m) == (smin > 0.0));
    ++compared;
  }
  CHECK(compared > 300);
}

TEST_CASE("hull test above two dimensions is solver-backed") {
  // tetrahedron with the origin strictly inside
  MomentMatrix good;
  good.g = Matrix(4, 3);
  const double verts[4][3] = {
      {1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) good.g(i, j) = verts[i][j];
  CHECK(hull_contains_zero(good));

  // every point in the open half-space x > 0
  MomentMatrix bad;
  bad.g = Matrix(4, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) bad.g(i, j) = verts[i][j];
  for (int i = 0; i < 4; ++i) bad.g(i, 0) = 0.5 + 0.25 * i;
  CHECK_FALSE(hull_contains_zero(bad));
}

TEST_CASE("aetel augmentation") {
  const auto m = aetel_augment(from_values({-3.0, -1.0}), 0.3466);
  REQUIRE(m.n() == 3);
  // -(a_n / n) sum g_i = -(0.3466 / 2)(-4)
  CHECK(m.g(2, 0) == doctest::Approx(0.6932).epsilon(1e-12));
  CHECK(hull_contains_zero(m));

  const auto z = aetel_augment(from_values({-1.0, 1.0}), 7.0);
  CHECK(z.g(2, 0) == doctest::Approx(0.0));

  MomentMatrix two = from_rows2({{1, 1}, {3, 1}});
  const auto a2 = aetel_augment(two, 1.0);
  CHECK(a2.g(2, 0) == doctest::Approx(-2.0));
  CHECK(a2.g(2, 1) == doctest::Approx(-1.0));

  CHECK_THROWS_AS(aetel_augment(two, 0.0), EvalError);
}

TEST_CASE("augmentation restores the hull whenever the mean is nonzero") {
  CounterRng rng(77, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 7);
    std::vector<double> v(n);
    const double shift = 3.0 * (rng.next_double() - 0.5);
    for (double& x : v) x = rng.next_gaussian() + shift;
    const auto m = from_values(v);
    if (std::fabs(m.col_mean()[0]) < 1e-12) continue;
    const double a_n = 0.05 + 2.0 * rng.next_double();
    CHECK(hull_contains_zero(aetel_augment(m, a_n)));
  }
}

TEST_CASE("default adjustment") {
  CHECK(default_adjustment(2) == doctest::Approx(1.0));
  CHECK(default_adjustment(100) == doctest::Approx(0.5 * std::log(100.0)));
}

TEST_CASE("regularization presets resolve to the documented penalties") {
  const Dataset data = Dataset::univariate({1.0, 3.0});
  const double theta[] = {0.5};

  const Penalty inv = resolve_penalty(reg_invariant_mean(2.0), data, theta, 1);
  CHECK(inv.tau == 2.0);
  CHECK(inv.mu[0] == doctest::Approx(2.0 - 0.5));  // xbar - theta
  CHECK(inv.sigma(0, 0) == doctest::Approx(1.0));

  const Penalty fig = resolve_penalty(reg_figure2(1.0), data, theta, 1);
  CHECK(fig.mu[0] == doctest::Approx(-0.5));

  const Penalty cen = resolve_penalty(reg_centered(1, 3.0), data, theta, 1);
  CHECK(cen.mu[0] == doctest::Approx(0.0));

  const Penalty sam =
      resolve_penalty(reg_sample_moments(mean_function(1), 1.0), data, theta, 1);
  // mu = mean of (x - 0.5), sigma = (n-1)^{-1} sum g^2
  CHECK(sam.mu[0] == doctest::Approx(1.5));
  CHECK(sam.sigma(0, 0) == doctest::Approx(0.25 + 6.25));

  // a non-positive-definite sigma_fn is rejected
  Regularization bad = reg_centered(1, 1.0);
  bad.sigma_fn = [](const Dataset&, std::span<const double>) {
    Matrix s(1, 1);
    s(0, 0) = -1.0;
    return s;
  };
  CHECK_THROWS_AS(resolve_penalty(bad, data, theta, 1), EvalError);
}

TEST_CASE("penalty from an assembled moment matrix") {
  const auto m = from_values({-3.0, -1.0});
  const Penalty pen = penalty_from_moments(m, 1.0);
  CHECK(pen.mu[0] == doctest::Approx(-2.0));
  CHECK(pen.sigma(0, 0) == doctest::Approx(9.0 + 1.0));
}
