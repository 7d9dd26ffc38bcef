// Semilinear evolution u_t = Laplacian(u) + f(u) on truncated models:
// IMEX stepping with an adaptive reaction-limited step, blow-up detection by
// ceiling-plus-step-floor, mild-solution cross-validation, and the
// exhaustion scheme over growing balls.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rdlab/heat.hpp"
#include "rdlab/reaction.hpp"

namespace rdlab {

enum class Scheme { ImexCN, ImexBE };

struct SchemeConfig {
  double dt0 = 1e-3;
  double dt_min = 1e-10;
  double U_max = 1e8;
  double T_end = 1.0;
  Scheme scheme = Scheme::ImexCN;
  double cfl_reaction = 0.1;  // accepted steps keep dt * L(sup) <= this
};

struct Trajectory {
  std::vector<double> times;  // every accepted step, starting at 0
  std::vector<double> sups;
  std::vector<double> masses;
  std::vector<double> dts;  // dts[k] = times[k] - times[k-1]; dts[0] = 0
  std::vector<double> sample_times;
  std::vector<RadialField> fields;  // snapshots at sample_times
  Bc bc = Bc::DirichletAtR;
  Scheme scheme = Scheme::ImexCN;
  RadialField u0;
};

struct Global {
  double horizon = 0.0;
};
struct BlowUp {
  double t_star = 0.0;
  std::string method;
};
struct Inconclusive {
  std::string reason;
};
using SimulationOutcome = std::variant<Global, BlowUp, Inconclusive>;

struct BlowupEstimate {
  double t_star = 0.0;                 // root of the reciprocal-sup fit
  std::optional<double> t_star_power;  // root of the sup^{1-p} fit when p is known
  bool wide_uncertainty = false;       // fewer than 8 points fed the fit
  int points_used = 0;
};

// Extrapolates the blow-up time from the last decade of sup growth: 1/sup is
// asymptotically linear in t near blow-up, and sup^{1-p} is exactly linear on
// the power-law profile.
inline BlowupEstimate detect_blowup(const Trajectory& traj, double U_max,
                                    std::optional<double> p = {}) {
  const auto& sups = traj.sups;
  if (sups.size() < 2) throw domain_error("detect_blowup: trajectory too short");
  std::size_t peak = 0;
  for (std::size_t k = 1; k < sups.size(); ++k)
    if (sups[k] > sups[peak]) peak = k;
  if (!(sups[peak] >= 0.99 * U_max))
    throw domain_error("detect_blowup: sup history never crossed the ceiling");

  std::size_t start = peak;
  while (start > 0 && sups[start - 1] < sups[start]) --start;
  // Overflow-capped samples carry no profile information; fit on the last
  // decade of trustworthy growth.
  double top = 0.0;
  for (std::size_t k = start; k <= peak; ++k)
    if (sups[k] <= 1e250) top = std::max(top, sups[k]);
  if (!(top > 0.0)) throw domain_error("detect_blowup: no finite growth samples");
  std::vector<double> ts, recip, powy;
  for (std::size_t k = start; k <= peak; ++k) {
    if (!(sups[k] >= top / 10.0) || sups[k] > 1e250) continue;
    ts.push_back(traj.times[k]);
    recip.push_back(1.0 / sups[k]);
    if (p) powy.push_back(std::pow(sups[k], 1.0 - *p));
  }
  if (ts.size() < 2) throw domain_error("detect_blowup: not enough growth samples");

  BlowupEstimate est;
  est.points_used = static_cast<int>(ts.size());
  est.wide_uncertainty = ts.size() < 8;
  const LinearFit fr = fit_linear(ts, recip);
  if (!(fr.slope < 0.0)) throw domain_error("detect_blowup: reciprocal sup is not decreasing");
  est.t_star = -fr.intercept / fr.slope;
  if (p) {
    const LinearFit fp = fit_linear(ts, powy);
    if (fp.slope < 0.0) est.t_star_power = -fp.intercept / fp.slope;
  }
  return est;
}

namespace detail {

// Diffusion stage with matrices cached for the current step size.
struct ImexStepper {
  RadialOperator op;
  Scheme scheme;
  TriDiag lhs, rhs;
  double cached_dt = -1.0;

  void prepare(double dt) {
    if (dt == cached_dt) return;
    if (scheme == Scheme::ImexCN) {
      lhs = identity_plus(op.A, 0.5 * dt);
      rhs = identity_plus(op.A, -0.5 * dt);
    } else {
      lhs = identity_plus(op.A, dt);
    }
    cached_dt = dt;
  }

  std::vector<double> diffuse(const std::vector<double>& u) const {
    return scheme == Scheme::ImexCN ? thomas_solve(lhs, rhs.apply(u)) : thomas_solve(lhs, u);
  }
};

// Explicit midpoint update of u' = f(u), node by node. f >= 0 keeps the
// increment nonnegative; evaluation clamps roundoff-negative states.
inline void react_midpoint(const std::optional<Nonlinearity>& f, std::vector<double>& u,
                           double dt) {
  if (!f) return;
  for (auto& v : u) {
    const double s = v > 0.0 ? v : 0.0;
    const double mid = s + 0.5 * dt * eval(*f, s);
    v += dt * eval(*f, std::isfinite(mid) ? mid : s);
  }
}

inline double vec_sup(const std::vector<double>& u) {
  double s = 0.0;
  for (double v : u) s = std::max(s, std::abs(v));
  return s;
}

inline double vec_min(const std::vector<double>& u) {
  double s = u.empty() ? 0.0 : u[0];
  for (double v : u) s = std::min(s, v);
  return s;
}

inline bool has_nan(const std::vector<double>& u) {
  for (double v : u)
    if (std::isnan(v)) return true;
  return false;
}

inline double weighted_mass(const std::vector<double>& w, const std::vector<double>& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += w[i] * u[i];
  return s;
}

inline std::optional<double> power_exponent(const std::optional<Nonlinearity>& f) {
  if (!f) return {};
  if (const auto* pw = std::get_if<PowerReaction>(&f->kind)) return pw->p;
  if (const auto* plp = std::get_if<PiecewiseLinearPower>(&f->kind))
    if (plp->p > 1.0) return plp->p;
  return {};
}

}  // namespace detail

inline std::pair<SimulationOutcome, Trajectory> simulate(const ModelManifold& m,
                                                         const RadialGrid& g,
                                                         const std::optional<Nonlinearity>& f,
                                                         const RadialField& u0,
                                                         const SchemeConfig& cfg,
                                                         Bc bc = Bc::DirichletAtR) {
  if (u0.grid.n != g.n || u0.grid.R != g.R ||
      u0.values.size() != static_cast<std::size_t>(g.n) + 1 || !u0.weights)
    throw config_error("simulate: field lives on a different grid");
  if (u0.min_value() < 0.0) throw domain_error("simulate: u0 must be nonnegative");
  if (!all_finite(u0.values)) throw domain_error("simulate: u0 must be bounded");
  if (!(cfg.T_end > 0.0) || !(cfg.dt0 > 0.0) || !(cfg.dt_min > 0.0) ||
      cfg.dt_min > cfg.dt0 || !(cfg.cfl_reaction > 0.0))
    throw config_error("simulate: bad scheme configuration");
  if (!(cfg.U_max > u0.sup())) throw config_error("simulate: U_max must exceed sup u0");

  detail::ImexStepper st{assemble_radial_laplacian(m, g, bc), cfg.scheme, {}, {}, -1.0};
  std::vector<double> u = detail::restrict_to_op(st.op, u0.values);

  Trajectory traj;
  traj.bc = bc;
  traj.scheme = cfg.scheme;
  traj.u0 = u0;
  const auto& w = *u0.weights;
  auto full_field = [&](const std::vector<double>& v) {
    RadialField fld = u0;
    fld.values = detail::extend_from_op(v, g.n);
    return fld;
  };
  auto record_step = [&](double t, double dt, const std::vector<double>& v) {
    traj.times.push_back(t);
    traj.dts.push_back(dt);
    traj.sups.push_back(std::min(detail::vec_sup(v), 1e300));
    traj.masses.push_back(detail::weighted_mass(w, detail::extend_from_op(v, g.n)));
  };

  const double sample_dt = cfg.T_end / 64.0;
  double next_sample = 0.0;
  auto maybe_snapshot = [&](double t, const std::vector<double>& v, bool force) {
    if (t >= next_sample - 1e-12 || force) {
      traj.sample_times.push_back(t);
      traj.fields.push_back(full_field(v));
      while (next_sample <= t + 1e-12) next_sample += sample_dt;
    }
  };

  double t = 0.0;
  record_step(0.0, 0.0, u);
  maybe_snapshot(0.0, u, true);

  double lips = 0.0, lips_cap = -1.0;
  double sup = u0.sup();
  const double t_eps = 1e-12 * cfg.T_end;

  while (t < cfg.T_end - t_eps) {
    if (f && sup > lips_cap) {
      lips = lipschitz_on(*f, 1.05 * sup + 1e-12);
      lips_cap = 1.05 * sup;
    }
    double dt = cfg.dt0;
    if (f && lips > 0.0 && std::isfinite(lips)) dt = std::min(dt, cfg.cfl_reaction / lips);
    if (f && !std::isfinite(lips)) dt = cfg.dt_min;
    dt = std::max(dt, cfg.dt_min);
    dt = std::min(dt, cfg.T_end - t);

    int rejections = 0;
    for (;;) {
      st.prepare(dt);
      std::vector<double> next = st.diffuse(u);
      detail::react_midpoint(f, next, dt);

      const bool nan = detail::has_nan(next);
      const double nsup = nan ? 0.0 : detail::vec_sup(next);
      const bool ceiling = !nan && nsup > cfg.U_max;
      const bool undershoot = !nan && detail::vec_min(next) < -1e-6 * std::max(1.0, nsup);

      if (!nan && !ceiling && !undershoot) {
        u = std::move(next);
        sup = nsup;
        t += dt;
        record_step(t, dt, u);
        maybe_snapshot(t, u, false);
        break;
      }

      const bool at_floor = dt <= cfg.dt_min * (1.0 + 1e-9);
      if (!at_floor && rejections < 60) {
        dt = std::max(0.5 * dt, cfg.dt_min);
        ++rejections;
        continue;
      }
      if (nan) {
        std::ostringstream dump;
        dump << "simulate: non-finite state at t=" << t << " dt=" << dt << " sup=" << sup;
        throw numerical_error(dump.str());
      }
      if (ceiling) {
        t += dt;
        record_step(t, dt, next);
        maybe_snapshot(t, next, true);
        try {
          const auto est = detect_blowup(traj, cfg.U_max, detail::power_exponent(f));
          return {BlowUp{est.t_star, est.t_star_power ? "reciprocal+power" : "reciprocal"},
                  std::move(traj)};
        } catch (const domain_error&) {
          return {BlowUp{t, "ceiling crossing, fit degenerate"}, std::move(traj)};
        }
      }
      if (undershoot)
        return {Inconclusive{"negative undershoot persisted at the step floor"},
                std::move(traj)};
      return {Inconclusive{"step rejected 60 times without reaching the floor"},
              std::move(traj)};
    }
  }
  maybe_snapshot(t, u, traj.sample_times.back() < t - t_eps);
  return {Global{cfg.T_end}, std::move(traj)};
}

// Mild-solution fixed point u = e^{t Delta}u0 + int_0^t e^{(t-s) Delta} f(u(s)) ds
// on one contraction window, marched on `substeps` quadrature nodes with an
// exponential-trapezoid rule. Independent of the IMEX splitting.
inline RadialField duhamel_picard(const ModelManifold& m, const RadialGrid& g,
                                  const std::optional<Nonlinearity>& f, const RadialField& u0,
                                  double window, int iter_cap = 25, int substeps = 16) {
  if (!(window > 0.0)) throw domain_error("duhamel_picard: window must be > 0");
  if (iter_cap < 1 || substeps < 4) throw config_error("duhamel_picard: bad iteration setup");
  if (u0.grid.n != g.n || u0.grid.R != g.R ||
      u0.values.size() != static_cast<std::size_t>(g.n) + 1 || !u0.weights)
    throw config_error("duhamel_picard: field lives on a different grid");
  if (u0.min_value() < 0.0) throw domain_error("duhamel_picard: u0 must be nonnegative");
  if (f) {
    const double lips = lipschitz_on(*f, 2.0 * u0.sup() + 1.0);
    if (window * lips >= 0.5)
      throw config_error("duhamel_picard: window too large for a contraction");
  }

  const RadialOperator op = assemble_radial_laplacian(m, g, Bc::DirichletAtR);
  const double h = window / substeps;
  const std::size_t J = static_cast<std::size_t>(substeps);

  auto heat_step = [&](std::vector<double> v) {
    detail::cn_steps(op, v, h, 1, false);
    return v;
  };

  // homogeneous part e^{s_j Delta} u0
  std::vector<std::vector<double>> hom(J + 1);
  hom[0] = detail::restrict_to_op(op, u0.values);
  for (std::size_t j = 1; j <= J; ++j) hom[j] = heat_step(hom[j - 1]);
  if (!f) {
    RadialField out = u0;
    out.values = detail::extend_from_op(hom[J], g.n);
    return out;
  }

  auto react = [&](const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = eval(*f, std::max(0.0, v[i]));
    return out;
  };

  std::vector<std::vector<double>> cur = hom;
  double prev_resid = std::numeric_limits<double>::infinity();
  int growth_streak = 0;
  for (int it = 0; it < iter_cap; ++it) {
    std::vector<std::vector<double>> next(J + 1);
    next[0] = hom[0];
    std::vector<double> integral(hom[0].size(), 0.0);
    std::vector<double> f_prev = react(cur[0]);
    for (std::size_t j = 1; j <= J; ++j) {
      const std::vector<double> f_here = react(cur[j]);
      integral = heat_step(std::move(integral));
      const std::vector<double> carried = heat_step(f_prev);
      for (std::size_t i = 0; i < integral.size(); ++i)
        integral[i] += 0.5 * h * (carried[i] + f_here[i]);
      next[j] = hom[j];
      for (std::size_t i = 0; i < integral.size(); ++i) next[j][i] += integral[i];
      f_prev = f_here;
    }
    double resid = 0.0;
    for (std::size_t j = 0; j <= J; ++j)
      for (std::size_t i = 0; i < next[j].size(); ++i)
        resid = std::max(resid, std::abs(next[j][i] - cur[j][i]));
    cur = std::move(next);
    if (!std::isfinite(resid))
      throw numerical_error("duhamel_picard: iteration diverged; window too large");
    if (resid <= 1e-8) {
      RadialField out = u0;
      out.values = detail::extend_from_op(cur[J], g.n);
      return out;
    }
    growth_streak = resid > prev_resid ? growth_streak + 1 : 0;
    if (growth_streak >= 3)
      throw numerical_error("duhamel_picard: residual growing; window too large");
    prev_resid = resid;
  }
  throw numerical_error("duhamel_picard: no convergence within the iteration cap");
}

struct ExhaustionReport {
  std::vector<RadialGrid> grids;
  std::vector<Trajectory> runs;
  std::vector<SimulationOutcome> outcomes;
  bool monotone = true;
  double worst_violation = 0.0;  // most positive u_j - u_{j+1} over shared samples
};

// Dirichlet problems on an increasing sequence of balls, initial data cut off
// by a quintic smoothstep that is identically 1 on [0, R_j/2]. A single fixed
// step size shared by all runs keeps their sample times aligned, so the
// exhaustion monotonicity u_j <= u_{j+1} is checked pointwise in (t, r).
inline ExhaustionReport exhaustion_run(const ModelManifold& m,
                                       const std::optional<Nonlinearity>& f,
                                       const RadialField& u0_big,
                                       const std::vector<double>& radii,
                                       const SchemeConfig& cfg) {
  if (radii.size() < 2) throw config_error("exhaustion_run: need at least two radii");
  for (std::size_t j = 1; j < radii.size(); ++j)
    if (!(radii[j] > radii[j - 1])) throw config_error("exhaustion_run: radii must increase");
  const double h = u0_big.grid.h();
  if (std::abs(radii.back() - u0_big.grid.R) > 1e-9 * u0_big.grid.R)
    throw config_error("exhaustion_run: u0 must live on the largest ball");

  const double s_hi = std::max(1.0, 2.0 * u0_big.sup());
  const double lips = f ? lipschitz_on(*f, s_hi) : 0.0;
  double dt = cfg.dt0;
  if (lips > 0.0) dt = std::min(dt, cfg.cfl_reaction / lips);
  const long total_steps = std::lround(std::ceil(cfg.T_end / dt - 1e-12));
  dt = cfg.T_end / static_cast<double>(total_steps);
  const long stride = std::max<long>(1, total_steps / 64);

  ExhaustionReport rep;
  for (double R : radii) {
    const int n = static_cast<int>(std::lround(R / h));
    if (std::abs(n * h - R) > 1e-9 * R)
      throw config_error("exhaustion_run: radii must align with the shared grid step");
    const RadialGrid gj(n * h, n);
    RadialField uj = make_field(m, gj, [](double) { return 0.0; });
    for (int i = 0; i <= n; ++i) {
      const double r = gj.r(i);
      const double z =
          r <= 0.5 * R ? 1.0 : 1.0 - smoothstep_quintic((r - 0.5 * R) / (0.5 * R));
      uj.values[i] = u0_big.values[i] * z;
    }

    detail::ImexStepper st{assemble_radial_laplacian(m, gj, Bc::DirichletAtR), cfg.scheme,
                           {}, {}, -1.0};
    st.prepare(dt);
    std::vector<double> u = detail::restrict_to_op(st.op, uj.values);

    Trajectory traj;
    traj.bc = Bc::DirichletAtR;
    traj.scheme = cfg.scheme;
    traj.u0 = uj;
    SimulationOutcome outcome = Global{cfg.T_end};
    const auto& wj = *uj.weights;

    auto record = [&](double t, double step) {
      traj.times.push_back(t);
      traj.dts.push_back(step);
      traj.sups.push_back(detail::vec_sup(u));
      traj.masses.push_back(detail::weighted_mass(wj, detail::extend_from_op(u, n)));
    };
    auto snapshot = [&](double t) {
      traj.sample_times.push_back(t);
      RadialField fld = uj;
      fld.values = detail::extend_from_op(u, n);
      traj.fields.push_back(std::move(fld));
    };
    record(0.0, 0.0);
    snapshot(0.0);
    for (long k = 1; k <= total_steps; ++k) {
      std::vector<double> next = st.diffuse(u);
      detail::react_midpoint(f, next, dt);
      if (detail::has_nan(next)) {
        outcome = Inconclusive{"non-finite state in exhaustion step"};
        break;
      }
      u = std::move(next);
      const double sup = detail::vec_sup(u);
      record(k * dt, dt);
      if (sup > cfg.U_max) {
        outcome = BlowUp{k * dt, "ceiling at fixed step"};
        snapshot(k * dt);
        break;
      }
      if (sup > s_hi) {
        outcome = Inconclusive{"growth invalidated the fixed-step bound"};
        break;
      }
      if (k % stride == 0 || k == total_steps) snapshot(k * dt);
    }
    rep.grids.push_back(gj);
    rep.runs.push_back(std::move(traj));
    rep.outcomes.push_back(std::move(outcome));
  }

  for (std::size_t j = 0; j + 1 < rep.runs.size(); ++j) {
    const auto& a = rep.runs[j];
    const auto& b = rep.runs[j + 1];
    const std::size_t shared = std::min(a.fields.size(), b.fields.size());
    for (std::size_t k = 0; k < shared; ++k) {
      if (std::abs(a.sample_times[k] - b.sample_times[k]) > 1e-9) break;
      for (int i = 0; i < static_cast<int>(a.fields[k].values.size()); ++i) {
        const double gap = a.fields[k].values[i] - b.fields[k].values[i];
        rep.worst_violation = std::max(rep.worst_violation, gap);
      }
    }
  }
  rep.monotone = rep.worst_violation <= 1e-8;
  return rep;
}

}  // namespace rdlab
