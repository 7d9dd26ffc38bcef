#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "rdlab/numerics.hpp"

namespace rdlab {

// Rotationally symmetric model: metric dr^2 + psi(r)^2 dtheta^2 with
// psi(0) = 0, psi'(0) = 1, psi > 0 for r > 0.

struct EuclideanWarp {};

struct HyperbolicWarp {
  double kappa = 1.0;  // psi = sinh(sqrt(kappa) r)/sqrt(kappa)
};

namespace detail {

// Dense solution of the Jacobi equation psi'' = -K(r) psi, cached so psi and
// psi' come from cubic Hermite interpolation and psi'' from the equation
// itself (no interpolation noise in curvature).
struct JacobiCache {
  double step = 0.0;
  double r_max = 0.0;
  std::vector<double> psi, dpsi;
};

inline std::shared_ptr<const JacobiCache> solve_jacobi(
    const std::function<double(double)>& K, double r_max, double step) {
  auto cache = std::make_shared<JacobiCache>();
  cache->step = step;
  cache->r_max = r_max;
  const std::size_t n = static_cast<std::size_t>(std::ceil(r_max / step)) + 1;
  cache->psi.reserve(n + 1);
  cache->dpsi.reserve(n + 1);
  double y = 0.0, v = 1.0, r = 0.0;
  cache->psi.push_back(y);
  cache->dpsi.push_back(v);
  auto acc = [&K](double rr, double yy) { return -K(rr) * yy; };
  for (std::size_t i = 0; i < n; ++i) {
    const double k1y = v, k1v = acc(r, y);
    const double k2y = v + 0.5 * step * k1v, k2v = acc(r + 0.5 * step, y + 0.5 * step * k1y);
    const double k3y = v + 0.5 * step * k2v, k3v = acc(r + 0.5 * step, y + 0.5 * step * k2y);
    const double k4y = v + step * k3v, k4v = acc(r + step, y + step * k3y);
    y += step / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    v += step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    r += step;
    cache->psi.push_back(y);
    cache->dpsi.push_back(v);
    if (!std::isfinite(y)) throw numerical_error("solve_jacobi: warping overflow");
  }
  return cache;
}

struct HermiteEval {
  double value, derivative;
};

inline HermiteEval hermite_eval(const JacobiCache& c, double r) {
  if (r > c.r_max)
    throw domain_error("warping evaluated beyond its cached range r <= " +
                       std::to_string(c.r_max));
  const double s = r / c.step;
  std::size_t i = std::min(static_cast<std::size_t>(s), c.psi.size() - 2);
  const double t = s - static_cast<double>(i), h = c.step;
  const double y0 = c.psi[i], y1 = c.psi[i + 1], d0 = c.dpsi[i], d1 = c.dpsi[i + 1];
  const double t2 = t * t, t3 = t2 * t;
  HermiteEval out;
  out.value = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 +
              (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * d1;
  out.derivative = ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * h * d0 +
                    (-6 * t2 + 6 * t) * y1 + (3 * t2 - 2 * t) * h * d1) /
                   h;
  return out;
}

}  // namespace detail

// Representative of the pinched-curvature class: radial curvature runs from b
// at the origin to a at infinity (a <= b < 0) through a quintic ramp on
// r in [0, 2]. One interpolant standing in for the whole class.
struct PinchedWarp {
  double a = -2.0;
  double b = -1.0;
  std::shared_ptr<const detail::JacobiCache> cache;

  double curvature(double r) const { return b + (a - b) * smoothstep_quintic(0.5 * r); }
};

struct TabulatedWarp {
  std::shared_ptr<const CubicSpline> psi;
};

using WarpingKind = std::variant<EuclideanWarp, HyperbolicWarp, PinchedWarp, TabulatedWarp>;

struct ModelManifold {
  int dimension = 3;
  WarpingKind warping;
  std::optional<double> analytic_lambda1;

  double psi(double r) const {
    return std::visit(
        [r](const auto& w) -> double {
          using W = std::decay_t<decltype(w)>;
          if constexpr (std::is_same_v<W, EuclideanWarp>) {
            return r;
          } else if constexpr (std::is_same_v<W, HyperbolicWarp>) {
            const double s = std::sqrt(w.kappa);
            return std::sinh(s * r) / s;
          } else if constexpr (std::is_same_v<W, PinchedWarp>) {
            return detail::hermite_eval(*w.cache, r).value;
          } else {
            return w.psi->value(r);
          }
        },
        warping);
  }

  double psi_prime(double r) const {
    return std::visit(
        [r](const auto& w) -> double {
          using W = std::decay_t<decltype(w)>;
          if constexpr (std::is_same_v<W, EuclideanWarp>) {
            return 1.0;
          } else if constexpr (std::is_same_v<W, HyperbolicWarp>) {
            return std::cosh(std::sqrt(w.kappa) * r);
          } else if constexpr (std::is_same_v<W, PinchedWarp>) {
            return detail::hermite_eval(*w.cache, r).derivative;
          } else {
            return w.psi->derivative(r);
          }
        },
        warping);
  }

  double psi_second(double r) const {
    return std::visit(
        [r, this](const auto& w) -> double {
          using W = std::decay_t<decltype(w)>;
          if constexpr (std::is_same_v<W, EuclideanWarp>) {
            return 0.0;
          } else if constexpr (std::is_same_v<W, HyperbolicWarp>) {
            const double s = std::sqrt(w.kappa);
            return s * std::sinh(s * r);
          } else if constexpr (std::is_same_v<W, PinchedWarp>) {
            return -w.curvature(r) * psi(r);
          } else {
            return w.psi->second_derivative(r);
          }
        },
        warping);
  }

  static ModelManifold euclidean(int N) {
    check_dim(N);
    return {N, EuclideanWarp{}, 0.0};
  }

  static ModelManifold hyperbolic(int N, double kappa = 1.0) {
    check_dim(N);
    if (!(kappa > 0.0)) throw config_error("hyperbolic: kappa must be > 0");
    const double l1 = 0.25 * (N - 1) * (N - 1) * kappa;
    return {N, HyperbolicWarp{kappa}, l1};
  }

  static ModelManifold pinched(int N, double a, double b, double r_cache = 120.0) {
    check_dim(N);
    if (!(a <= b && b < 0.0)) throw config_error("pinched: need a <= b < 0");
    PinchedWarp w{a, b, nullptr};
    auto K = [w](double r) { return w.curvature(r); };
    w.cache = detail::solve_jacobi(K, r_cache, 1.0 / 512.0);
    return {N, w, std::nullopt};
  }

  static ModelManifold tabulated(int N, CubicSpline psi_spline) {
    check_dim(N);
    auto sp = std::make_shared<CubicSpline>(std::move(psi_spline));
    if (std::abs(sp->value(0.0)) > 1e-8)
      throw config_error("tabulated warping: psi(0) must vanish");
    if (std::abs(sp->derivative(0.0) - 1.0) > 1e-3)
      throw config_error("tabulated warping: psi'(0) must be 1");
    return {N, TabulatedWarp{sp}, std::nullopt};
  }

  // Two-column text file (r, psi), one header line, r starting at 0.
  static ModelManifold tabulated_from_file(int N, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("tabulated warping: cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> rs, ps;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      double r, p;
      if (!(ss >> r >> p)) throw config_error("tabulated warping: bad line '" + line + "'");
      rs.push_back(r);
      ps.push_back(p);
    }
    return tabulated(N, CubicSpline(std::move(rs), std::move(ps)));
  }

 private:
  static void check_dim(int N) {
    if (N < 2) throw config_error("manifold dimension must be >= 2");
  }
};

inline double volume_density(const ModelManifold& m, double r) {
  if (r < 0.0) throw domain_error("volume_density: r must be >= 0");
  if (r == 0.0) return 0.0;
  return sphere_area(m.dimension) * std::pow(m.psi(r), m.dimension - 1);
}

// Lower bound for the radial Ricci curvature, -(N-1) psi''/psi.
inline double radial_ricci_lower(const ModelManifold& m, double r) {
  if (!(r > 0.0)) throw domain_error("radial_ricci_lower: r must be > 0 (pole is singular)");
  return -(m.dimension - 1) * m.psi_second(r) / m.psi(r);
}

inline double ball_volume(const ModelManifold& m, double R) {
  if (!(R > 0.0)) throw domain_error("ball_volume: R must be > 0");
  return adaptive_simpson([&m](double r) { return volume_density(m, r); }, 0.0, R, 1e-9);
}

enum class ScVerdict { Sufficient, Unknown };
enum class BoundVerdict { Diverges, Saturates };

struct ScReport {
  ScVerdict verdict = ScVerdict::Unknown;
  double fitted_slope = 0.0;  // d log[r / log V] / d log r over the tail window
  std::vector<double> sample_r, sample_q;
};

struct BoundReport {
  BoundVerdict verdict = BoundVerdict::Saturates;
  double partial_full = 0.0, partial_half = 0.0;
  double doubling_ratio = 0.0;
  double inc_prev = 0.0, inc_last = 0.0;
};

namespace detail {

// Cumulative Simpson antiderivative of f on [0, r_max], 2*n_cells+1 nodes.
inline std::vector<double> cumulative_integral(const std::function<double(double)>& f,
                                               double r_max, std::size_t n_cells) {
  std::vector<double> acc(n_cells + 1, 0.0);
  const double h = r_max / static_cast<double>(n_cells);
  double left = f(0.0);
  for (std::size_t i = 0; i < n_cells; ++i) {
    const double a = i * h;
    const double fm = f(a + 0.5 * h), right = f(a + h);
    acc[i + 1] = acc[i] + h / 6.0 * (left + 4.0 * fm + right);
    left = right;
  }
  return acc;
}

}  // namespace detail

// Volume-growth test for stochastic completeness: the manifold is complete if
// r / log V(o,r) is non-integrable at infinity. A fitted log-log slope of the
// integrand >= -1.02 over [r_max/4, r_max] counts as non-integrable; -1 is the
// exact borderline (V ~ e^{a r^2}) and the slack absorbs its subleading terms.
// The test is only sufficient, so the other verdict is Unknown, never a
// completeness denial.
inline ScReport check_stochastic_completeness(const ModelManifold& m, double r_max) {
  if (!(r_max > 0.0)) throw domain_error("check_stochastic_completeness: r_max must be > 0");
  const std::size_t cells = 4096;
  auto density = [&m](double r) { return volume_density(m, r); };
  const auto V = detail::cumulative_integral(density, r_max, cells);
  if (!(V.back() > std::exp(1.0)))
    throw domain_error("check_stochastic_completeness: V(o, r_max) must exceed e");
  const double h = r_max / static_cast<double>(cells);

  ScReport rep;
  const double r_lo = 0.25 * r_max;
  const int samples = 8;
  for (int k = 0; k < samples; ++k) {
    const double r = r_lo * std::pow(r_max / r_lo, k / double(samples - 1));
    const auto idx = std::min(cells, static_cast<std::size_t>(std::lround(r / h)));
    const double v = V[idx];
    if (!std::isfinite(v) || !(v > std::exp(1.0) * 1.5)) continue;
    rep.sample_r.push_back(static_cast<double>(idx) * h);
    rep.sample_q.push_back(static_cast<double>(idx) * h / std::log(v));
  }
  if (rep.sample_r.size() < 5) return rep;  // not enough range: Unknown
  std::vector<double> lx(rep.sample_r.size()), ly(rep.sample_r.size());
  for (std::size_t i = 0; i < lx.size(); ++i) {
    lx[i] = std::log(rep.sample_r[i]);
    ly[i] = std::log(rep.sample_q[i]);
  }
  rep.fitted_slope = fit_linear(lx, ly).slope;
  rep.verdict = rep.fitted_slope >= -1.02 ? ScVerdict::Sufficient : ScVerdict::Unknown;
  return rep;
}

// Comparison-principle condition: int^inf (int_0^r psi^{N-1}) / psi^{N-1} dr
// diverges. Doubling test on the partial integral J over [1, r_max], extended
// by an increment test so log-divergent borderline warpings (e^{k r^2} tails,
// where the doubling ratio tends to 1) still register as Diverges.
inline BoundReport check_bound_condition(const ModelManifold& m, double r_max) {
  if (!(r_max > 1.0)) throw domain_error("check_bound_condition: r_max must be > 1");
  const std::size_t cells = 16384;
  const int N = m.dimension;
  auto w = [&](double r) { return std::pow(m.psi(r), N - 1); };
  const auto Vt = detail::cumulative_integral(w, r_max, cells);
  const double h = r_max / static_cast<double>(cells);

  // J(r) = int_1^r Vt/psi^{N-1}, accumulated by trapezoid on the dense grid.
  std::vector<double> J(cells + 1, 0.0);
  double prev_b = 0.0;
  bool started = false;
  for (std::size_t j = 1; j <= cells; ++j) {
    const double r = static_cast<double>(j) * h;
    if (r < 1.0) continue;
    const double bj = Vt[j] / w(r);
    if (started) J[j] = J[j - 1] + 0.5 * h * (prev_b + bj);
    started = true;
    prev_b = bj;
  }
  auto J_at = [&](double r) {
    const auto idx = std::min(cells, static_cast<std::size_t>(std::lround(r / h)));
    return J[idx];
  };

  BoundReport rep;
  rep.partial_full = J.back();
  if (r_max >= 8.0) {
    const double J_q = J_at(0.25 * r_max);
    rep.partial_half = J_at(0.5 * r_max);
    rep.inc_prev = rep.partial_half - J_q;
    rep.inc_last = rep.partial_full - rep.partial_half;
    rep.doubling_ratio = rep.partial_full / rep.partial_half;
    const bool diverges = rep.doubling_ratio >= 1.5 || rep.inc_last >= 0.9 * rep.inc_prev;
    rep.verdict = diverges ? BoundVerdict::Diverges : BoundVerdict::Saturates;
  } else {
    rep.partial_half = J_at(0.5 * (1.0 + r_max));
    rep.doubling_ratio = rep.partial_half > 0.0 ? rep.partial_full / rep.partial_half : 0.0;
    rep.verdict = rep.doubling_ratio >= 1.5 ? BoundVerdict::Diverges : BoundVerdict::Saturates;
  }
  return rep;
}

}  // namespace rdlab
