#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rdlab/spectral.hpp"
#include "support/oracles.hpp"

using namespace rdlab;

TEST_CASE("assembly refuses degenerate grids") {
  const auto h3 = ModelManifold::hyperbolic(3);
  CHECK_THROWS_AS(assemble_radial_laplacian(h3, RadialGrid(1.0, 8), Bc::DirichletAtR),
                  config_error);
}

TEST_CASE("weighted symmetry of the assembled operator") {
  const auto h3 = ModelManifold::hyperbolic(3);
  for (Bc bc : {Bc::DirichletAtR, Bc::NeumannAtR}) {
    const auto op = assemble_radial_laplacian(h3, RadialGrid(5.0, 100), bc);
    for (std::size_t i = 0; i + 1 < op.size(); ++i) {
      const double lhs = op.w[i] * op.A.super[i];
      const double rhs = op.w[i + 1] * op.A.sub[i + 1];
      CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("constants are harmonic under Neumann truncation") {
  const auto h3 = ModelManifold::hyperbolic(3);
  const RadialGrid g(5.0, 100);
  const auto op = assemble_radial_laplacian(h3, g, Bc::NeumannAtR);
  const auto u = constant_field(h3, g, 1.0);
  for (double v : apply_operator(op, u.values)) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("radial paraboloid reproduces -Laplacian = 2N") {
  // u = R^2 - r^2 has -Delta u = 2N on Euclidean space; the flux form is
  // exact for quadratics, pole row included.
  const int N = 2;
  const auto m = ModelManifold::euclidean(N);
  const RadialGrid g(1.0, 64);
  const auto op = assemble_radial_laplacian(m, g, Bc::DirichletAtR);
  const auto u = make_field(m, g, [&](double r) { return g.R * g.R - r * r; });
  const auto Au = apply_operator(op, u.values);
  for (int i = 0; i < g.n; ++i) CHECK(Au[i] == Catch::Approx(2.0 * N).margin(1e-9));
}

TEST_CASE("discrete Rayleigh quotient matches dense quadrature") {
  const auto m = ModelManifold::euclidean(3);
  const RadialGrid g(1.0, 400);
  const auto op = assemble_radial_laplacian(m, g, Bc::DirichletAtR);
  const auto u = make_field(m, g, [&](double r) { return std::cos(0.5 * pi * r / g.R); });
  const auto Au = apply_operator(op, u.values);
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= g.n; ++i) {
    num += (*u.weights)[i] * u.values[i] * Au[i];
    den += (*u.weights)[i] * u.values[i] * u.values[i];
  }
  // independent oracle: quadrature of int u'^2 dmu / int u^2 dmu
  auto du = [&](double r) { return -0.5 * pi / g.R * std::sin(0.5 * pi * r / g.R); };
  const double qnum = adaptive_simpson(
      [&](double r) { return du(r) * du(r) * volume_density(m, r); }, 0.0, g.R, 1e-10);
  const double qden = adaptive_simpson(
      [&](double r) {
        const double v = std::cos(0.5 * pi * r / g.R);
        return v * v * volume_density(m, r);
      },
      0.0, g.R, 1e-10);
  CHECK(num / den == Catch::Approx(qnum / qden).epsilon(0.02));
}

TEST_CASE("unit ball eigenvalue is pi^2, cross-checked by Sturm bisection") {
  const auto m = ModelManifold::euclidean(3);
  const auto fine = lambda1_ball(m, 1.0, 2000);
  CHECK(fine.lambda == Catch::Approx(pi * pi).epsilon(0.005));

  const auto coarse = lambda1_ball(m, 1.0, 200);
  const auto op = assemble_radial_laplacian(m, RadialGrid(1.0, 200), Bc::DirichletAtR);
  std::vector<double> diag, off;
  oracles::symmetrize(op, diag, off);
  const double oracle = oracles::sturm_smallest_eigenvalue(diag, off);
  CHECK(coarse.lambda == Catch::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("eigenfunction is positive, peaks at 1, vanishes at R") {
  const auto m = ModelManifold::hyperbolic(3);
  const auto res = lambda1_ball(m, 10.0, 500);
  CHECK(res.eigenfunction.max_value() == Catch::Approx(1.0));
  CHECK(res.eigenfunction.min_value() >= -1e-10);
  CHECK(res.eigenfunction.values.back() == 0.0);
  CHECK(res.residual <= 1e-8);
}

TEST_CASE("H3 ball at R=40 is within 2% of 1") {
  const auto m = ModelManifold::hyperbolic(3);
  CHECK(lambda1_ball(m, 40.0, 2000).lambda == Catch::Approx(1.0).epsilon(0.02));
}

TEST_CASE("domain monotonicity: halving R raises the eigenvalue") {
  const auto m = ModelManifold::hyperbolic(3);
  const double big = lambda1_ball(m, 20.0, 1000).lambda;
  const double small = lambda1_ball(m, 10.0, 500).lambda;
  CHECK(small > big);
}

TEST_CASE("grid convergence is second order") {
  const auto m = ModelManifold::euclidean(3);
  const double exact = pi * pi;
  const double e1 = std::abs(lambda1_ball(m, 1.0, 250).lambda - exact);
  const double e2 = std::abs(lambda1_ball(m, 1.0, 500).lambda - exact);
  const double e3 = std::abs(lambda1_ball(m, 1.0, 1000).lambda - exact);
  const double p12 = std::log2(e1 / e2), p23 = std::log2(e2 / e3);
  CHECK(p12 >= 1.8);
  CHECK(p12 <= 2.2);
  CHECK(p23 >= 1.8);
  CHECK(p23 <= 2.2);
}

TEST_CASE("manifold exhaustion: Euclidean bottom extrapolates to 0") {
  const auto m = ModelManifold::euclidean(3);
  const auto est = lambda1_manifold(m, {{20.0, 500}, {40.0, 1000}, {80.0, 2000}});
  CHECK(std::abs(est.extrapolated) <= 5e-3);
  CHECK(est.monotone);
  REQUIRE(est.rel_error.has_value());
  CHECK(*est.rel_error <= 5e-3);
}

TEST_CASE("manifold exhaustion: H3 and H5 bottoms within 2%") {
  const auto h3 = ModelManifold::hyperbolic(3);
  const auto e3 = lambda1_manifold(h3, {{20.0, 1000}, {30.0, 1500}, {40.0, 2000}});
  CHECK(e3.extrapolated == Catch::Approx(1.0).epsilon(0.02));
  CHECK(e3.monotone);
  CHECK(e3.errbar > 0.0);

  const auto h5 = ModelManifold::hyperbolic(5);
  const auto e5 = lambda1_manifold(h5, {{20.0, 1000}, {30.0, 1500}, {40.0, 2000}});
  CHECK(e5.extrapolated == Catch::Approx(4.0).epsilon(0.02));
}

TEST_CASE("exhaustion schedule validation") {
  const auto m = ModelManifold::euclidean(3);
  CHECK_THROWS_AS(lambda1_manifold(m, {{10.0, 500}, {20.0, 1000}}), config_error);
  CHECK_THROWS_AS(lambda1_manifold(m, {{20.0, 1000}, {10.0, 500}, {40.0, 2000}}),
                  config_error);
  // h drifts across the schedule
  CHECK_THROWS_AS(lambda1_manifold(m, {{10.0, 500}, {20.0, 700}, {40.0, 2000}}),
                  config_error);
}

TEST_CASE("Faber-Krahn probe: Euclidean scale invariance") {
  const auto m = ModelManifold::euclidean(3);
  const double exact = pi * pi * std::pow(4.0 * pi / 3.0, 2.0 / 3.0);
  const auto probe = faber_krahn_probe(m, {0.5, 1.0, 2.0, 4.0});
  for (const auto& row : probe.rows) CHECK(row.product == Catch::Approx(exact).epsilon(0.01));
  CHECK(probe.worst == Catch::Approx(exact).epsilon(0.01));
}

TEST_CASE("Faber-Krahn probe: H3 positive, singleton passthrough") {
  const auto m = ModelManifold::hyperbolic(3);
  const auto probe = faber_krahn_probe(m, {2.0});
  REQUIRE(probe.rows.size() == 1);
  CHECK(probe.worst == probe.rows[0].product);
  CHECK(probe.worst > 0.0);
  CHECK_THROWS_AS(faber_krahn_probe(m, {}), config_error);
}
