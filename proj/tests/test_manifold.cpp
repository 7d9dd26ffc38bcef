#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "rdlab/manifold.hpp"
#include "support/oracles.hpp"

using namespace rdlab;

namespace {

// Warping with an e^{k r^2} tail: psi = r below the blend window, then
// c e^{k r^2} with c chosen to keep the magnitudes matched at the seam.
// Borderline for the volume-vs-distance integral, scaled so volumes stay
// inside double range.
ModelManifold quadratic_exponential_tail(double k, double r_hi, double step = 0.002) {
  const double c = 1.5 * std::exp(-k * 2.25);
  std::vector<double> rs, ps;
  for (double r = 0.0; r <= r_hi + 0.5 * step; r += step) {
    const double s = smoothstep_quintic(r - 0.5);  // ramp over [0.5, 1.5]
    rs.push_back(r);
    ps.push_back((1.0 - s) * r + s * c * std::exp(k * r * r));
  }
  return ModelManifold::tabulated(3, CubicSpline(std::move(rs), std::move(ps)));
}

// Cubic-exponential volume growth (faster than any e^{a r^2}); the scaling
// keeps psi(0)=0, psi'(0)=1 and the r_max=50 volume representable.
ModelManifold cubic_exponential_tail(double r_hi, double step = 0.002) {
  std::vector<double> rs, ps;
  for (double r = 0.0; r <= r_hi + 0.5 * step; r += step) {
    rs.push_back(r);
    ps.push_back(r * std::exp(0.002 * r * r * r));
  }
  return ModelManifold::tabulated(3, CubicSpline(std::move(rs), std::move(ps)));
}

}  // namespace

TEST_CASE("factory validation") {
  CHECK_THROWS_AS(ModelManifold::euclidean(1), config_error);
  CHECK_THROWS_AS(ModelManifold::hyperbolic(3, 0.0), config_error);
  CHECK_THROWS_AS(ModelManifold::hyperbolic(3, -1.0), config_error);
  CHECK_THROWS_AS(ModelManifold::pinched(3, -1.0, -2.0), config_error);  // a > b
  CHECK_THROWS_AS(ModelManifold::pinched(3, -2.0, 0.0), config_error);   // b not < 0
  std::vector<double> rs{0.0, 0.5, 1.0, 1.5}, bad{1.0, 1.5, 2.0, 2.5};
  CHECK_THROWS_AS(ModelManifold::tabulated(3, CubicSpline(rs, bad)), config_error);
}

TEST_CASE("analytic spectral bottoms") {
  CHECK(ModelManifold::euclidean(3).analytic_lambda1.value() == 0.0);
  CHECK(ModelManifold::hyperbolic(3).analytic_lambda1.value() == Catch::Approx(1.0));
  CHECK(ModelManifold::hyperbolic(5).analytic_lambda1.value() == Catch::Approx(4.0));
  CHECK(ModelManifold::hyperbolic(3, 2.0).analytic_lambda1.value() == Catch::Approx(2.0));
  CHECK_FALSE(ModelManifold::pinched(3, -2.0, -1.0).analytic_lambda1.has_value());
}

TEST_CASE("volume_density examples") {
  const auto e3 = ModelManifold::euclidean(3);
  const auto h3 = ModelManifold::hyperbolic(3);
  CHECK(volume_density(e3, 1.0) == Catch::Approx(4.0 * pi).epsilon(1e-13));
  CHECK(volume_density(h3, 0.0) == 0.0);
  // 4 pi sinh^2(2), also cross-checked against the quoted 165.36
  const double sh2 = std::sinh(2.0);
  CHECK(volume_density(h3, 2.0) == Catch::Approx(4.0 * pi * sh2 * sh2).epsilon(1e-13));
  CHECK(volume_density(h3, 2.0) == Catch::Approx(165.36).epsilon(1e-3));
  CHECK_THROWS_AS(volume_density(e3, -0.1), domain_error);
}

TEST_CASE("radial_ricci_lower closed forms and the e^{r^2} tail") {
  const auto h3 = ModelManifold::hyperbolic(3);
  for (double r = 0.25; r <= 50.0; r += 0.25)
    CHECK(radial_ricci_lower(h3, r) == Catch::Approx(-2.0).margin(1e-12));
  const auto e3 = ModelManifold::euclidean(3);
  CHECK(radial_ricci_lower(e3, 2.0) == 0.0);
  CHECK_THROWS_AS(radial_ricci_lower(e3, 0.0), domain_error);

  // psi = c e^{r^2} past the blend: psi''/psi = 4r^2 + 2, so the Ricci proxy
  // at r=2 is -(N-1)(4*4+2) = -36, c-independent.
  const auto tail = quadratic_exponential_tail(1.0, 3.0);
  CHECK(radial_ricci_lower(tail, 2.0) == Catch::Approx(-36.0).epsilon(2e-4));
  // independent finite-difference check on the same warping
  const double fd = oracles::central_second_derivative(
      [&](double r) { return tail.psi(r); }, 2.0, 1e-3);
  CHECK(-2.0 * fd / tail.psi(2.0) == Catch::Approx(-36.0).epsilon(1e-3));
}

TEST_CASE("pinched curvature stays in the band and grows accordingly") {
  const double a = -2.0, b = -1.0;
  const auto p3 = ModelManifold::pinched(3, a, b);
  for (double r = 0.125; r <= 50.0; r += 0.125) {
    const double ric = radial_ricci_lower(p3, r);
    CHECK(ric >= 2.0 * a - 1e-9);
    CHECK(ric <= 2.0 * b + 1e-9);
  }
  // near the pole curvature is b, far out it is a
  CHECK(radial_ricci_lower(p3, 0.01) == Catch::Approx(2.0 * b).margin(1e-6));
  CHECK(radial_ricci_lower(p3, 10.0) == Catch::Approx(2.0 * a).margin(1e-9));
  // asymptotic growth psi ~ e^{sqrt(-a) r}
  std::vector<double> rs, ps;
  for (double r = 30.0; r <= 40.0; r += 1.0) {
    rs.push_back(r);
    ps.push_back(p3.psi(r));
  }
  CHECK(fit_log_linear(rs, ps).slope == Catch::Approx(std::sqrt(2.0)).margin(1e-3));
}

TEST_CASE("ball_volume closed forms") {
  const auto e3 = ModelManifold::euclidean(3);
  const auto h3 = ModelManifold::hyperbolic(3);
  CHECK(ball_volume(e3, 1.0) == Catch::Approx(4.0 * pi / 3.0).epsilon(1e-8));
  // 4 pi int_0^1 sinh^2 = pi (sinh 2 - 2)
  CHECK(ball_volume(h3, 1.0) == Catch::Approx(pi * (std::sinh(2.0) - 2.0)).epsilon(1e-8));
  CHECK(ball_volume(h3, 1.0) == Catch::Approx(5.1105).epsilon(1e-3));
  CHECK_THROWS_AS(ball_volume(e3, 0.0), domain_error);
}

TEST_CASE("ball_volume grows like e^{2R} on H3") {
  const auto h3 = ModelManifold::hyperbolic(3);
  std::vector<double> rs, vs;
  for (double R = 10.0; R <= 20.0; R += 1.0) {
    rs.push_back(R);
    vs.push_back(ball_volume(h3, R));
  }
  CHECK(fit_log_linear(rs, vs).slope == Catch::Approx(2.0).margin(0.05));
}

TEST_CASE("ball_volume strictly increases and matches the density derivative") {
  const auto h3 = ModelManifold::hyperbolic(3);
  double prev = 0.0;
  for (double R = 0.5; R <= 8.0; R += 0.5) {
    const double v = ball_volume(h3, R);
    CHECK(v > prev);
    prev = v;
  }
  // quadrature consistency: dV/dR = volume density
  const double eps = 1e-4;
  const double dv = (ball_volume(h3, 2.0 + eps) - ball_volume(h3, 2.0 - eps)) / (2.0 * eps);
  CHECK(dv == Catch::Approx(volume_density(h3, 2.0)).epsilon(1e-6));
}

TEST_CASE("psi normalization at the pole for every built-in warping") {
  const std::vector<ModelManifold> all{
      ModelManifold::euclidean(3), ModelManifold::hyperbolic(3),
      ModelManifold::hyperbolic(4, 2.5), ModelManifold::pinched(3, -2.0, -1.0),
      quadratic_exponential_tail(0.25, 4.0)};
  for (const auto& m : all) {
    CHECK(std::abs(m.psi(0.0)) <= 1e-12);
    CHECK(m.psi(1e-4) / 1e-4 == Catch::Approx(1.0).margin(1e-6));
    CHECK(m.psi(1e-6) / 1e-6 == Catch::Approx(1.0).margin(1e-8));
    CHECK(m.psi_prime(0.0) == Catch::Approx(1.0).margin(1e-8));
    for (double r : {0.5, 1.0, 3.0}) CHECK(m.psi(r) > 0.0);
  }
}

TEST_CASE("stochastic completeness test: polynomial and exponential growth pass") {
  CHECK(check_stochastic_completeness(ModelManifold::euclidean(3), 100.0).verdict ==
        ScVerdict::Sufficient);
  CHECK(check_stochastic_completeness(ModelManifold::hyperbolic(3), 100.0).verdict ==
        ScVerdict::Sufficient);
}

TEST_CASE("stochastic completeness test: e^{k r^2} borderline still passes") {
  const auto m = quadratic_exponential_tail(0.25, 37.0);
  CHECK(check_stochastic_completeness(m, 36.0).verdict == ScVerdict::Sufficient);
}

TEST_CASE("stochastic completeness test: cubic-exponential growth is Unknown") {
  const auto m = cubic_exponential_tail(52.0);
  const auto rep = check_stochastic_completeness(m, 50.0);
  CHECK(rep.verdict == ScVerdict::Unknown);
  CHECK(rep.fitted_slope < -1.02);
}

TEST_CASE("stochastic completeness precondition") {
  CHECK_THROWS_AS(check_stochastic_completeness(ModelManifold::euclidean(3), 0.5),
                  domain_error);
}

TEST_CASE("bound condition: euclidean and hyperbolic diverge") {
  const auto e = check_bound_condition(ModelManifold::euclidean(3), 40.0);
  CHECK(e.verdict == BoundVerdict::Diverges);
  CHECK(e.doubling_ratio >= 1.5);
  const auto h = check_bound_condition(ModelManifold::hyperbolic(3), 40.0);
  CHECK(h.verdict == BoundVerdict::Diverges);
  CHECK(h.doubling_ratio == Catch::Approx(2.0).margin(0.1));
}

TEST_CASE("bound condition: e^{k r^2} tail diverges through the increment test") {
  const auto m = quadratic_exponential_tail(0.25, 37.0);
  const auto rep = check_bound_condition(m, 36.0);
  CHECK(rep.verdict == BoundVerdict::Diverges);
  CHECK(rep.doubling_ratio < 1.5);                 // the ratio test alone would miss it
  CHECK(rep.inc_last >= 0.9 * rep.inc_prev);       // log-type growth: flat increments
}

TEST_CASE("bound condition: cubic-exponential tail saturates") {
  const auto m = cubic_exponential_tail(52.0);
  CHECK(check_bound_condition(m, 50.0).verdict == BoundVerdict::Saturates);
}

TEST_CASE("bound condition: short-range fallback") {
  CHECK(check_bound_condition(ModelManifold::euclidean(3), 3.0).verdict ==
        BoundVerdict::Diverges);
  CHECK_THROWS_AS(check_bound_condition(ModelManifold::euclidean(3), 1.0), domain_error);
}

TEST_CASE("tabulated warping round-trips through a file") {
  const char* path = "warp_roundtrip.txt";
  {
    std::ofstream out(path);
    out.precision(17);
    out << "r psi\n";
    for (double r = 0.0; r <= 5.0 + 1e-9; r += 0.01)
      out << r << " " << std::sinh(r) << "\n";
  }
  const auto m = ModelManifold::tabulated_from_file(3, path);
  const auto h3 = ModelManifold::hyperbolic(3);
  for (double r : {0.5, 1.0, 2.0, 4.0})
    CHECK(m.psi(r) == Catch::Approx(h3.psi(r)).epsilon(1e-8));
  CHECK(radial_ricci_lower(m, 2.0) == Catch::Approx(-2.0).margin(2e-3));
  std::remove(path);
  CHECK_THROWS_AS(ModelManifold::tabulated_from_file(3, "no_such_file.txt"), config_error);
}
