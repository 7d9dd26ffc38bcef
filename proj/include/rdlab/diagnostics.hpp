// Runtime monitors for the proof machinery: the kernel-weighted functional
// and its differential inequality, the reciprocal-tail decay functional, the
// exponential supersolution bound, and the eigenfunction-weighted functional
// on a fixed ball. Monitors are pure functions over completed trajectories.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rdlab/solver.hpp"

namespace rdlab {

struct MonitorReport {
  std::string check;
  bool pass = false;
  bool applicable = true;
  double worst_margin = 0.0;
  double location = 0.0;  // time of the worst margin
  std::string note;
};

struct PhiSeries {
  double T = 0.0;
  std::vector<double> times;  // kept samples, ascending, times[0] = 0
  std::vector<double> values;
  std::vector<double> weight_mass;   // mass of the kernel weight per sample
  std::vector<RadialField> weights;  // p(o, ., T - t_k) for each kept sample
  int dropped_tail = 0;              // samples too close to T for the bump to resolve
  double phi0_center_value = 0.0;    // (e^{T Delta} u0)(o)
  double phi0_paired = 0.0;          // <bump, e^{T Delta} u0>, the adjoint of Phi(0)
};

// Phi(t) = <p(o, ., T-t), u(., t)> with the kernel weight produced by evolving
// a normalized bump. Both the bump and u0 are marched with the same snapshot
// partition, so <E_T bump, u0> = <bump, E_T u0> holds to roundoff: the step
// matrices are rational functions of one self-adjoint operator.
inline PhiSeries kaplan_phi(const Trajectory& traj, const ModelManifold& m, const RadialGrid& g,
                            double T, double dt_hint = 1e-3) {
  if (traj.u0.grid.n != g.n || traj.u0.grid.R != g.R)
    throw config_error("kaplan_phi: trajectory lives on a different grid");
  if (!(T > 0.0) || traj.times.empty() || T > traj.times.back() + 1e-9)
    throw domain_error("kaplan_phi: horizon outside the trajectory");
  if (traj.fields.empty()) throw domain_error("kaplan_phi: trajectory has no snapshots");

  const double floor = std::max(32.0 * g.h() * g.h(), 4.0 * dt_hint);
  PhiSeries series;
  series.T = T;
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < traj.sample_times.size(); ++k) {
    const double tk = traj.sample_times[k];
    if (tk > T + 1e-12) break;
    if (T - tk < floor) {
      ++series.dropped_tail;
      continue;
    }
    kept.push_back(k);
  }
  if (kept.empty()) throw domain_error("kaplan_phi: no usable samples below the horizon");

  std::vector<double> spans;  // s = T - t_k, ascending
  for (auto it = kept.rbegin(); it != kept.rend(); ++it)
    spans.push_back(T - traj.sample_times[*it]);

  const RadialField bump = delta_bump(m, g, 4.0 * g.h());
  const HeatOptions opts{traj.bc, true};
  const auto kernel = evolve_with_snapshots(m, g, bump, spans, dt_hint, opts);
  const auto forward = evolve_with_snapshots(m, g, traj.u0, spans, dt_hint, opts);

  for (std::size_t j = 0; j < kept.size(); ++j) {
    const std::size_t k = kept[j];
    const RadialField& weight = kernel[kept.size() - 1 - j];  // span T - t_k
    series.times.push_back(traj.sample_times[k]);
    series.values.push_back(weight.weighted_dot(traj.fields[k]));
    series.weight_mass.push_back(weight.mass());
    series.weights.push_back(weight);
  }
  series.phi0_paired = bump.weighted_dot(forward.back());
  series.phi0_center_value = forward.back().center_value();
  return series;
}

// Phi' >= h(Phi) along the series, by central differences. The absolute slack
// absorbs the caloric pairing drift when h vanishes; the relative slack
// budgets discretization error against the theorem-backed inequality.
inline MonitorReport check_phi_ode(const PhiSeries& phi, const std::optional<Nonlinearity>& h,
                                   double tol_rel = 0.1, double tol_abs = -1.0) {
  if (phi.times.size() < 3) throw domain_error("check_phi_ode: need at least 3 samples");

  MonitorReport rep;
  rep.check = "phi_ode";
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k + 1 < phi.times.size(); ++k) {
    const double dphi =
        (phi.values[k + 1] - phi.values[k - 1]) / (phi.times[k + 1] - phi.times[k - 1]);
    const double rhs = h ? eval(*h, std::max(0.0, phi.values[k])) : 0.0;
    // Absolute slack scales with the local value so a late huge sample cannot
    // loosen the check at early times.
    const double slack_abs =
        tol_abs >= 0.0 ? tol_abs : 1e-2 * (1.0 + std::abs(phi.values[k]));
    const double margin = dphi - (1.0 - tol_rel) * rhs + slack_abs;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.location = phi.times[k];
    }
  }
  rep.pass = rep.worst_margin >= 0.0;
  return rep;
}

// G(t) = int_{Phi(t)}^inf dz/h(z) must decay at unit rate past the first
// threshold crossing. The tail integral reuses the reaction module's
// doubling-window quadrature.
inline MonitorReport g_functional_check(const PhiSeries& phi, const Nonlinearity& h,
                                        double delta, double slack = 0.1) {
  MonitorReport rep;
  rep.check = "g_decay";
  std::size_t k0 = phi.values.size();
  for (std::size_t k = 0; k < phi.values.size(); ++k)
    if (phi.values[k] >= delta) {
      k0 = k;
      break;
    }
  if (k0 == phi.values.size()) {
    rep.pass = true;
    rep.applicable = false;
    rep.note = "threshold never crossed";
    return rep;
  }
  auto tail = [&](double s) {
    const auto verdict = tail_reciprocal_integral(h, s);
    if (!verdict.finite)
      throw hypothesis_error("g_functional_check: reciprocal tail diverges");
    return verdict.value;
  };
  const double t_bar = phi.times[k0];
  const double g_bar = tail(phi.values[k0]);
  rep.worst_margin = std::numeric_limits<double>::infinity();
  rep.location = t_bar;
  for (std::size_t k = k0 + 1; k < phi.values.size(); ++k) {
    if (!(phi.values[k] > 0.0)) continue;
    const double elapsed = phi.times[k] - t_bar;
    const double margin = g_bar - (1.0 - slack) * elapsed - tail(phi.values[k]) + 1e-9;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.location = phi.times[k];
    }
  }
  if (!std::isfinite(rep.worst_margin)) {  // single crossing sample
    rep.worst_margin = 0.0;
    rep.note = "no samples past the crossing";
  }
  rep.pass = rep.worst_margin >= 0.0;
  std::ostringstream note;
  note << "t_bar=" << t_bar;
  rep.note = rep.note.empty() ? note.str() : rep.note + "; " + note.str();
  return rep;
}

// u(., t) <= e^{alpha t} v(., t) with v the reaction-free evolution of the
// same datum, stepped through the recorded dt history so the diffusion
// matrices cancel exactly in the comparison; also verifies that the
// dominating function stays below delta.
inline MonitorReport supersolution_check(const Trajectory& traj, const ModelManifold& m,
                                         const RadialGrid& g, double alpha, double tol_abs,
                                         double delta) {
  if (traj.u0.grid.n != g.n || traj.u0.grid.R != g.R)
    throw config_error("supersolution_check: trajectory lives on a different grid");
  if (!(alpha >= 0.0) || !(delta > 0.0) || !(tol_abs > 0.0))
    throw domain_error("supersolution_check: bad parameters");
  if (traj.fields.empty()) throw domain_error("supersolution_check: empty trajectory");

  detail::ImexStepper st{assemble_radial_laplacian(m, g, traj.bc), traj.scheme, {}, {}, -1.0};
  std::vector<double> v = detail::restrict_to_op(st.op, traj.u0.values);

  MonitorReport rep;
  rep.check = "supersolution";
  rep.worst_margin = std::numeric_limits<double>::infinity();
  double bar_u_max = 0.0;
  std::size_t j = 0;
  auto compare = [&](double t) {
    if (j >= traj.sample_times.size()) return;
    if (std::abs(traj.sample_times[j] - t) > 1e-9 * (1.0 + t)) return;
    const std::vector<double> vf = detail::extend_from_op(v, g.n);
    const double growth = std::exp(alpha * t);
    const auto& u = traj.fields[j].values;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double bar_u = growth * vf[i];
      bar_u_max = std::max(bar_u_max, bar_u);
      const double margin = bar_u + tol_abs - u[i];
      if (margin < rep.worst_margin) {
        rep.worst_margin = margin;
        rep.location = t;
      }
    }
    ++j;
  };
  compare(traj.times[0]);
  for (std::size_t k = 1; k < traj.times.size(); ++k) {
    st.prepare(traj.dts[k]);
    v = st.diffuse(v);
    compare(traj.times[k]);
  }
  const bool dominated = rep.worst_margin >= 0.0;
  const bool below_delta = bar_u_max <= delta * (1.0 + 1e-9);
  rep.pass = dominated && below_delta;
  std::ostringstream note;
  note << "max_bar_u=" << bar_u_max << " delta=" << delta
       << (below_delta ? "" : " (bound violated)");
  rep.note = note.str();
  return rep;
}

// Data-size thresholds of the small-data global theorem: the sup-norm bound
// delta e^{-alpha} and the L1 bound delta / (C_bar e^{-(lambda1 - alpha)}).
inline std::pair<double, double> smallness_bounds(double lambda1, double alpha, double delta,
                                                  double C_bar) {
  if (!(alpha > 0.0) || alpha > lambda1)
    throw hypothesis_error("smallness_bounds: need 0 < alpha <= lambda1");
  if (!(delta > 0.0) || !(C_bar > 0.0))
    throw domain_error("smallness_bounds: delta and C_bar must be positive");
  const double c2 = C_bar * std::exp(-(lambda1 - alpha));
  return {delta * std::exp(-alpha), delta / c2};
}

// Smallest positive root of f(s) = lambda1_D s: where the reaction overtakes
// the spectral drain. Below-slope reactions never do (infinity); reactions
// already above the drain at 0+ give 0.
inline double reaction_drain_threshold(const Nonlinearity& f, double lambda1_D) {
  if (!(lambda1_D > 0.0)) throw domain_error("reaction_drain_threshold: lambda1_D must be > 0");
  auto excess = [&](double s) { return eval(f, s) - lambda1_D * s; };
  double lo = 1e-9, hi = 1e-9;
  if (excess(lo) > 0.0) return 0.0;
  for (int k = 0; k < 400; ++k) {
    hi *= 2.0;
    if (!std::isfinite(excess(hi))) break;
    if (excess(hi) > 0.0) return bisect_root(excess, lo, hi);
    lo = hi;
  }
  return std::numeric_limits<double>::infinity();
}

struct KaplanBallReport {
  MonitorReport monitor;   // w' >= -lambda1_D w + f(w) with relative slack
  double threshold = 0.0;  // smallest positive root of f(s) = lambda1_D s
  double w0 = 0.0;
  double w_max = 0.0;
  bool crossed = false;
  bool renormalized = false;
};

// Eigenfunction-weighted functional w(t) = int u phi dmu on a Dirichlet ball,
// with phi dmu a probability weight so Jensen applies to convex f.
inline KaplanBallReport bounded_domain_kaplan(const Trajectory& traj, double lambda1_D,
                                              const RadialField& phi, const Nonlinearity& f,
                                              double slack = 0.1) {
  if (traj.bc != Bc::DirichletAtR)
    throw domain_error("bounded_domain_kaplan: needs a Dirichlet-ball trajectory");
  if (traj.fields.size() < 3)
    throw domain_error("bounded_domain_kaplan: need at least 3 snapshots");
  if (!(lambda1_D > 0.0)) throw domain_error("bounded_domain_kaplan: lambda1_D must be > 0");

  KaplanBallReport rep;
  RadialField weight = phi;
  const double mass = phi.mass();
  if (!(mass > 0.0)) throw domain_error("bounded_domain_kaplan: weight has no mass");
  if (std::abs(mass - 1.0) > 1e-8) {
    for (auto& v : weight.values) v /= mass;
    rep.renormalized = true;
  }

  std::vector<double> w(traj.fields.size());
  for (std::size_t k = 0; k < traj.fields.size(); ++k)
    w[k] = weight.weighted_dot(traj.fields[k]);
  rep.w0 = w.front();
  rep.w_max = *std::max_element(w.begin(), w.end());

  rep.monitor.check = "kaplan_ball";
  rep.monitor.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k + 1 < w.size(); ++k) {
    const double dw =
        (w[k + 1] - w[k - 1]) / (traj.sample_times[k + 1] - traj.sample_times[k - 1]);
    const double rhs = -lambda1_D * w[k] + eval(f, std::max(0.0, w[k]));
    const double margin = dw - rhs + slack * std::abs(rhs) + 1e-2 * (1.0 + std::abs(w[k]));
    if (margin < rep.monitor.worst_margin) {
      rep.monitor.worst_margin = margin;
      rep.monitor.location = traj.sample_times[k];
    }
  }
  rep.monitor.pass = rep.monitor.worst_margin >= 0.0;

  rep.threshold = reaction_drain_threshold(f, lambda1_D);
  rep.crossed = rep.w_max > rep.threshold;
  std::ostringstream note;
  note << "w0=" << rep.w0 << " threshold=" << rep.threshold
       << (rep.renormalized ? " (weight renormalized)" : "");
  rep.monitor.note = note.str();
  return rep;
}

}  // namespace rdlab
