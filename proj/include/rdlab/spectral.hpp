#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "rdlab/grid.hpp"
#include "rdlab/manifold.hpp"
#include "rdlab/numerics.hpp"

namespace rdlab {

enum class Bc { DirichletAtR, NeumannAtR };

// Discrete -Laplacian in flux form: row i is
//   [-a_{i-1/2} u_{i-1} + (a_{i-1/2}+a_{i+1/2}) u_i - a_{i+1/2} u_{i+1}] / (w_i h)
// with a the surface density at cell faces. Self-adjoint under <u,v>_w exactly:
// w_i super_i = w_{i+1} sub_{i+1} = -a_{i+1/2}/h. The pole row uses the even
// extension (no flux through r=0); Dirichlet drops node n from the unknowns.
struct RadialOperator {
  TriDiag A;
  std::vector<double> w;  // weights of the unknown nodes, length A.size()
  Bc bc = Bc::DirichletAtR;
  int grid_n = 0;

  std::size_t size() const { return A.size(); }
};

inline RadialOperator assemble_radial_laplacian(const ModelManifold& m, const RadialGrid& g,
                                                Bc bc) {
  if (g.n < 16) throw config_error("assemble_radial_laplacian: need n >= 16");
  const int n = g.n;
  const double h = g.h();
  std::vector<double> face(n);  // face[i] = omega psi^{N-1} at r_{i+1/2}
  for (int i = 0; i < n; ++i) face[i] = volume_density(m, (i + 0.5) * h);

  const auto w_full = make_weights(m, g);
  const std::size_t sz = (bc == Bc::DirichletAtR) ? n : n + 1;

  RadialOperator op;
  op.bc = bc;
  op.grid_n = n;
  op.w.assign(w_full->begin(), w_full->begin() + sz);
  op.A.sub.assign(sz, 0.0);
  op.A.diag.assign(sz, 0.0);
  op.A.super.assign(sz, 0.0);

  op.A.diag[0] = face[0] / (op.w[0] * h);
  op.A.super[0] = -face[0] / (op.w[0] * h);
  for (std::size_t i = 1; i < sz; ++i) {
    const double al = face[i - 1];
    const double ar = (i < static_cast<std::size_t>(n)) ? face[i] : 0.0;  // Neumann end: no outer flux
    op.A.sub[i] = -al / (op.w[i] * h);
    op.A.diag[i] = (al + ar) / (op.w[i] * h);
    if (i + 1 < sz) op.A.super[i] = -ar / (op.w[i] * h);
  }
  return op;
}

// Applies the operator to a full-grid value vector (length n+1). Dirichlet
// treats node n as 0 and returns 0 there.
inline std::vector<double> apply_operator(const RadialOperator& op,
                                          const std::vector<double>& full) {
  if (full.size() != static_cast<std::size_t>(op.grid_n) + 1)
    throw domain_error("apply_operator: field/grid mismatch");
  std::vector<double> x(full.begin(), full.begin() + op.size());
  std::vector<double> y = op.A.apply(x);
  if (op.bc == Bc::DirichletAtR) y.push_back(0.0);
  return y;
}

struct EigenResult {
  double lambda = 0.0;
  RadialField eigenfunction;
  double residual = 0.0;
  int iterations = 0;
};

namespace detail {

inline double weighted_rayleigh(const RadialOperator& op, const std::vector<double>& x,
                                const std::vector<double>& Ax) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += op.w[i] * x[i] * Ax[i];
    den += op.w[i] * x[i] * x[i];
  }
  return num / den;
}

inline double weighted_norm(const std::vector<double>& w, const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i] * x[i];
  return std::sqrt(s);
}

inline double operator_inf_norm(const TriDiag& A) {
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i)
    s = std::max(s, std::abs(A.diag[i]) + std::abs(A.sub[i]) + std::abs(A.super[i]));
  return s;
}

}  // namespace detail

// Smallest Dirichlet eigenpair by shifted inverse iteration, switching to the
// Rayleigh quotient as shift once the direction settles. The residual target
// is 1e-9 relative, floored at the roundoff level eps*|A| that a double
// residual evaluation can reach at all (matters for fine grids on small balls,
// where |A| ~ 4/h^2 pushes the floor above 1e-9).
inline EigenResult lambda1_ball(const ModelManifold& m, double R, int n) {
  if (!(R > 0.0)) throw domain_error("lambda1_ball: R must be > 0");
  const RadialGrid g(R, n);
  const RadialOperator op = assemble_radial_laplacian(m, g, Bc::DirichletAtR);
  const std::size_t sz = op.size();

  // Initial direction: the symmetrized ground state is sine-like, so in u
  // variables sin(pi r/R)/psi^{(N-1)/2} is the right ansatz (exact on R^3 and
  // H^3). A plain sine overlaps poorly when the volume grows fast and the
  // Rayleigh shift can lock onto a higher mode of the tightly packed spectrum.
  std::vector<double> x(sz);
  const double half_codim = 0.5 * (m.dimension - 1);
  for (std::size_t i = 1; i < sz; ++i) {
    const double r = g.r(static_cast<int>(i));
    x[i] = std::sin(pi * r / R) / std::pow(m.psi(r), half_codim);
    if (!std::isfinite(x[i])) x[i] = 0.0;
  }
  x[0] = sz > 1 ? x[1] : 1.0;
  double nrm = detail::weighted_norm(op.w, x);
  for (auto& v : x) v /= nrm;

  const double res_floor = 8.0 * std::numeric_limits<double>::epsilon() *
                           detail::operator_inf_norm(op.A);
  const double res_tol = std::max(1e-9, res_floor);

  double lambda = 0.0, residual = 0.0, shift = 0.0;
  int it = 0;
  const int cap = 80;
  for (; it < cap; ++it) {
    TriDiag As = op.A;
    for (auto& d : As.diag) d -= shift;
    std::vector<double> y = thomas_solve(As, x);
    nrm = detail::weighted_norm(op.w, y);
    if (!(nrm > 0.0) || !all_finite(y))
      throw numerical_error("lambda1_ball: inverse iteration broke down");
    for (auto& v : y) v /= nrm;
    const std::vector<double> Ay = op.A.apply(y);
    lambda = detail::weighted_rayleigh(op, y, Ay);
    double r2 = 0.0;
    for (std::size_t i = 0; i < sz; ++i) {
      const double d = Ay[i] - lambda * y[i];
      r2 += op.w[i] * d * d;
    }
    residual = std::sqrt(r2);
    x = std::move(y);
    if (residual <= res_tol) break;
    if (it >= 1) shift = lambda;  // RQI once the first solve has filtered the direction
  }
  if (residual > res_tol)
    throw numerical_error("lambda1_ball: no convergence, residual " + std::to_string(residual));

  // Positive normalization, max = 1, embedded on the full grid.
  double mx = 0.0;
  for (double v : x)
    if (std::abs(v) > std::abs(mx)) mx = v;
  RadialField ef;
  ef.grid = g;
  ef.weights = make_weights(m, g);
  ef.values.assign(g.n + 1, 0.0);
  for (std::size_t i = 0; i < sz; ++i) ef.values[i] = x[i] / mx;

  return {lambda, std::move(ef), residual, it + 1};
}

struct SpectralEstimate {
  std::vector<double> radii;
  std::vector<double> lambdas;
  double extrapolated = 0.0;
  // Half-width of the trust band around the extrapolated value; twice the
  // last extrapolation step, so the band covers the tail the fit discards.
  double errbar = 0.0;
  std::optional<double> analytic;
  std::optional<double> rel_error;
  bool monotone = true;
};

// Exhaustion estimate of the spectral bottom: Dirichlet eigenvalues on an
// increasing ball schedule plus an Aitken limit of the last three.
inline SpectralEstimate lambda1_manifold(const ModelManifold& m,
                                         const std::vector<std::pair<double, int>>& schedule) {
  if (schedule.size() < 3)
    throw config_error("lambda1_manifold: schedule needs >= 3 radii");
  const double h0 = schedule.front().first / schedule.front().second;
  for (std::size_t j = 1; j < schedule.size(); ++j) {
    if (!(schedule[j].first > schedule[j - 1].first))
      throw config_error("lambda1_manifold: radii must increase");
    const double hj = schedule[j].first / schedule[j].second;
    if (std::abs(hj - h0) > 1e-6 * h0)
      throw config_error("lambda1_manifold: schedule must keep h fixed (n proportional to R)");
  }

  SpectralEstimate est;
  est.analytic = m.analytic_lambda1;
  for (const auto& [R, n] : schedule) {
    est.radii.push_back(R);
    est.lambdas.push_back(lambda1_ball(m, R, n).lambda);
  }
  for (std::size_t j = 1; j < est.lambdas.size(); ++j)
    if (est.lambdas[j] > est.lambdas[j - 1] + 1e-9) est.monotone = false;

  const std::size_t k = est.lambdas.size();
  est.extrapolated = aitken_limit(est.lambdas[k - 3], est.lambdas[k - 2], est.lambdas[k - 1]);
  est.errbar = std::max(2.0 * std::abs(est.extrapolated - est.lambdas[k - 1]), 1e-12);
  if (est.analytic && *est.analytic > 0.0)
    est.rel_error = std::abs(est.extrapolated - *est.analytic) / *est.analytic;
  else if (est.analytic)
    est.rel_error = std::abs(est.extrapolated - *est.analytic);
  return est;
}

struct FkProbeRow {
  double R, lambda, volume, product;
};

struct FkProbe {
  double worst = 0.0;  // min over tested balls of lambda1 * V^{2/N}
  std::vector<FkProbeRow> rows;
};

inline FkProbe faber_krahn_probe(const ModelManifold& m, const std::vector<double>& radii,
                                 double h = 0.02) {
  if (radii.empty()) throw config_error("faber_krahn_probe: radii must be nonempty");
  FkProbe probe;
  bool first = true;
  for (double R : radii) {
    const int n = std::max(16, static_cast<int>(std::lround(R / h)));
    const double lam = lambda1_ball(m, R, n).lambda;
    const double vol = ball_volume(m, R);
    const double prod = lam * std::pow(vol, 2.0 / m.dimension);
    probe.rows.push_back({R, lam, vol, prod});
    probe.worst = first ? prod : std::min(probe.worst, prod);
    first = false;
  }
  return probe;
}

}  // namespace rdlab
