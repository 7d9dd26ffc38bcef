#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rdlab/numerics.hpp"

using namespace rdlab;

TEST_CASE("sphere_area matches closed forms") {
  CHECK(sphere_area(2) == Catch::Approx(2.0 * pi).epsilon(1e-14));
  CHECK(sphere_area(3) == Catch::Approx(4.0 * pi).epsilon(1e-14));
  CHECK(sphere_area(4) == Catch::Approx(2.0 * pi * pi).epsilon(1e-14));
  CHECK_THROWS_AS(sphere_area(1), domain_error);
}

TEST_CASE("thomas_solve inverts a diagonally dominant system") {
  const std::size_t n = 64;
  TriDiag A;
  A.sub.assign(n, -1.0);
  A.diag.assign(n, 4.0);
  A.super.assign(n, -1.5);
  A.sub[0] = A.super[n - 1] = 0.0;
  std::vector<double> x_true(n);
  for (std::size_t i = 0; i < n; ++i) x_true[i] = std::sin(0.3 * i) + 2.0;
  const auto rhs = A.apply(x_true);
  const auto x = thomas_solve(A, rhs);
  for (std::size_t i = 0; i < n; ++i) CHECK(x[i] == Catch::Approx(x_true[i]).margin(1e-12));
}

TEST_CASE("adaptive_simpson integrates smooth functions to tolerance") {
  const double s = adaptive_simpson([](double x) { return std::sin(x); }, 0.0, pi, 1e-12);
  CHECK(s == Catch::Approx(2.0).epsilon(1e-10));
  const double e = adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-12);
  CHECK(e == Catch::Approx(std::exp(1.0) - 1.0).epsilon(1e-10));
  CHECK(adaptive_simpson([](double) { return 1.0; }, 2.0, 2.0) == 0.0);
}

TEST_CASE("fit_linear recovers an exact line") {
  std::vector<double> x{0, 1, 2, 3, 4}, y;
  for (double xi : x) y.push_back(3.5 * xi - 2.0);
  const auto f = fit_linear(x, y);
  CHECK(f.slope == Catch::Approx(3.5).epsilon(1e-13));
  CHECK(f.intercept == Catch::Approx(-2.0).margin(1e-12));
  CHECK_THROWS_AS(fit_linear({1.0}, {2.0}), domain_error);
}

TEST_CASE("fit_log_linear recovers an exponential rate and skips nonpositive values") {
  std::vector<double> t, y;
  for (int k = 0; k <= 10; ++k) {
    t.push_back(0.5 * k);
    y.push_back(3.0 * std::exp(-1.25 * 0.5 * k));
  }
  t.push_back(99.0);
  y.push_back(0.0);  // must be ignored
  const auto f = fit_log_linear(t, y);
  CHECK(f.slope == Catch::Approx(-1.25).epsilon(1e-12));
}

TEST_CASE("aitken_limit is exact on geometric tails") {
  // l_k = L - c q^k
  const double L = 4.0, c = 1.0, q = 0.35;
  CHECK(aitken_limit(L - c, L - c * q, L - c * q * q) == Catch::Approx(L).epsilon(1e-12));
  // degenerate input falls back to the last term
  CHECK(aitken_limit(1.0, 1.0, 1.0) == 1.0);
  // diverging differences fall back too
  CHECK(aitken_limit(1.0, 2.0, 4.0) == 4.0);
}

TEST_CASE("smoothstep_quintic clamps and fills monotonically") {
  CHECK(smoothstep_quintic(-1.0) == 0.0);
  CHECK(smoothstep_quintic(0.0) == 0.0);
  CHECK(smoothstep_quintic(1.0) == 1.0);
  CHECK(smoothstep_quintic(2.0) == 1.0);
  CHECK(smoothstep_quintic(0.5) == Catch::Approx(0.5).epsilon(1e-14));
  double prev = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double v = smoothstep_quintic(k / 100.0);
    CHECK(v >= prev);
    prev = v;
  }
  // C^2 join: first differences near the ends shrink quadratically
  CHECK(smoothstep_quintic(1e-3) < 1e-7);
  CHECK(1.0 - smoothstep_quintic(1.0 - 1e-3) < 1e-7);
}

TEST_CASE("CubicSpline interpolates and differentiates") {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 200; ++i) {
    const double x = i * 0.01;
    xs.push_back(x);
    ys.push_back(std::sin(x));
  }
  const CubicSpline sp(xs, ys);
  // interior points only: the natural end condition pollutes derivatives
  // within a few cells of the boundary
  for (double x : {0.105, 0.5, 1.234, 1.8}) {
    CHECK(sp.value(x) == Catch::Approx(std::sin(x)).margin(1e-9));
    CHECK(sp.derivative(x) == Catch::Approx(std::cos(x)).margin(1e-6));
    CHECK(sp.second_derivative(x) == Catch::Approx(-std::sin(x)).margin(1e-4));
  }
  CHECK_THROWS_AS(CubicSpline({0.0, 1.0}, {0.0, 1.0}), domain_error);
  CHECK_THROWS_AS(CubicSpline({0.0, 1.0, 0.5}, {0.0, 1.0, 2.0}), domain_error);
}

TEST_CASE("bisect_root finds sqrt(2)") {
  const double r = bisect_root([](double x) { return x * x - 2.0; }, 0.0, 2.0);
  CHECK(r == Catch::Approx(std::sqrt(2.0)).epsilon(1e-11));
  CHECK_THROWS_AS(bisect_root([](double x) { return x * x + 1.0; }, 0.0, 1.0), domain_error);
}
