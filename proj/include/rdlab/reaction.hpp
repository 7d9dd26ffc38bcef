// Nonlinearities f (and minorants h) of the reaction term, plus the
// hypothesis analyzers: slope at zero, convexity, reciprocal tail
// integrability, and the near-zero linear bound certificate.
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

struct PowerReaction {
  double p = 2.0;  // f(s) = s^p
};

struct PiecewiseLinearPower {
  double alpha = 1.0;  // f(s) = alpha*s on [0,1], alpha*s^p beyond; continuous at 1
  double p = 2.0;
};

struct ExpMinusOne {
  double beta = 1.0;  // f(s) = e^{beta s} - 1
};

struct TabulatedReaction {
  std::shared_ptr<const CubicSpline> table;
  double s_max = 0.0;
  // Beyond the last sample the spline segment may bend down; a linear tail
  // with the end slope keeps f nondecreasing, which is the conservative
  // direction for every analyzer built on it.
  double end_value = 0.0;
  double end_slope = 0.0;
};

using ReactionKind =
    std::variant<PowerReaction, PiecewiseLinearPower, ExpMinusOne, TabulatedReaction>;

struct Nonlinearity {
  ReactionKind kind;
  std::shared_ptr<const Nonlinearity> minorant;  // h of "f >= h"; self when absent

  static Nonlinearity power(double p) {
    if (!(p > 1.0)) throw config_error("Nonlinearity::power: need p > 1");
    return {PowerReaction{p}, nullptr};
  }

  // p = 1 is the degenerate all-linear case; useful as a divergent-tail probe.
  static Nonlinearity piecewise_linear_power(double alpha, double p) {
    if (!(alpha > 0.0) || !(p >= 1.0))
      throw config_error("Nonlinearity::piecewise_linear_power: need alpha > 0, p >= 1");
    return {PiecewiseLinearPower{alpha, p}, nullptr};
  }

  static Nonlinearity exp_minus_one(double beta) {
    if (!(beta > 0.0)) throw config_error("Nonlinearity::exp_minus_one: need beta > 0");
    return {ExpMinusOne{beta}, nullptr};
  }

  static Nonlinearity tabulated(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 3)
      throw config_error("Nonlinearity::tabulated: need >= 3 matched samples");
    if (xs.front() != 0.0 || std::abs(ys.front()) > 1e-12)
      throw config_error("Nonlinearity::tabulated: table must start at f(0) = 0");
    for (std::size_t i = 1; i < xs.size(); ++i) {
      if (!(xs[i] > xs[i - 1]))
        throw config_error("Nonlinearity::tabulated: abscissae must increase");
      if (ys[i] < ys[i - 1] - 1e-12)
        throw config_error("Nonlinearity::tabulated: samples must be nondecreasing");
    }
    auto spline = std::make_shared<CubicSpline>(xs, ys);
    TabulatedReaction tab;
    tab.s_max = xs.back();
    tab.end_value = ys.back();
    tab.end_slope = std::max(0.0, spline->derivative(xs.back()));
    tab.table = std::move(spline);
    return {ReactionKind{std::move(tab)}, nullptr};
  }

  static Nonlinearity tabulated_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("Nonlinearity::tabulated_from_file: cannot open " + path);
    std::vector<double> xs, ys;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      std::istringstream row(line);
      double x, y;
      if (row >> x >> y) {
        xs.push_back(x);
        ys.push_back(y);
      } else if (!first) {
        break;
      }
      first = false;
    }
    return tabulated(xs, ys);
  }

  Nonlinearity with_minorant(const Nonlinearity& h) const {
    Nonlinearity out = *this;
    out.minorant = std::make_shared<Nonlinearity>(h);
    return out;
  }

  const Nonlinearity& h() const { return minorant ? *minorant : *this; }
};

inline double eval(const Nonlinearity& f, double s) {
  if (s < 0.0) throw domain_error("eval: nonlinearity argument must be >= 0");
  return std::visit(
      [s](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PowerReaction>) {
          return std::pow(s, k.p);
        } else if constexpr (std::is_same_v<K, PiecewiseLinearPower>) {
          return s <= 1.0 ? k.alpha * s : k.alpha * std::pow(s, k.p);
        } else if constexpr (std::is_same_v<K, ExpMinusOne>) {
          return std::expm1(k.beta * s);
        } else {
          if (s > k.s_max) return k.end_value + k.end_slope * (s - k.s_max);
          return std::max(0.0, k.table->value(s));
        }
      },
      f.kind);
}

// One-sided derivative at 0; +inf when the difference quotient blows up.
inline double slope_at_zero(const Nonlinearity& f) {
  return std::visit(
      [&f](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PowerReaction>) {
          return 0.0;  // p > 1
        } else if constexpr (std::is_same_v<K, PiecewiseLinearPower>) {
          return k.alpha;
        } else if constexpr (std::is_same_v<K, ExpMinusOne>) {
          return k.beta;
        } else {
          const double h0 = std::min(k.s_max / 8.0, k.table->knot(1));
          const double q1 = eval(f, h0) / h0;
          const double q2 = eval(f, 0.5 * h0) / (0.5 * h0);
          const double slope = 2.0 * q2 - q1;  // Richardson on the quotient
          if (!std::isfinite(slope)) return std::numeric_limits<double>::infinity();
          return std::max(0.0, slope);
        }
      },
      f.kind);
}

struct ConvexityReport {
  bool convex = false;
  double worst = 0.0;     // most negative centered second difference
  double location = 0.0;  // abscissa where it occurs
  int samples = 0;
};

inline ConvexityReport is_convex_on(const Nonlinearity& f, double S, int k = 64) {
  if (!(S > 0.0)) throw domain_error("is_convex_on: S must be > 0");
  if (k < 8) throw config_error("is_convex_on: need k >= 8");
  const double d = S / (k + 1);
  ConvexityReport rep;
  rep.samples = k;
  rep.worst = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= k; ++j) {
    const double x = j * d;
    const double second = eval(f, x - d) - 2.0 * eval(f, x) + eval(f, x + d);
    if (second < rep.worst) {
      rep.worst = second;
      rep.location = x;
    }
  }
  rep.convex = rep.worst >= -1e-10;
  return rep;
}

struct TailVerdict {
  bool finite = false;
  double value = 0.0;               // partial sum, plus geometric tail when finite
  std::vector<double> increments;   // per doubling window [s0 2^k, s0 2^{k+1}]
};

// Integrates 1/f over doubling windows past s0. Geometric decay of the
// increments certifies convergence numerically; flat increments signal a
// divergent tail. The raw increments are always returned as evidence.
inline TailVerdict tail_reciprocal_integral(const Nonlinearity& f, double s0) {
  if (!(s0 > 0.0)) throw domain_error("tail_reciprocal_integral: s0 must be > 0");
  if (!(eval(f, s0) > 0.0))
    throw domain_error("tail_reciprocal_integral: f must be positive from s0 on");

  const int k_max = 64;
  TailVerdict verdict;
  double total = 0.0;
  for (int k = 0; k < k_max; ++k) {
    const double lo = s0 * std::pow(2.0, k), hi = 2.0 * lo;
    if (!(eval(f, hi) > 0.0) && !(eval(f, hi) == std::numeric_limits<double>::infinity()))
      throw domain_error("tail_reciprocal_integral: f vanishes on the tail");
    const double inc = adaptive_simpson(
        [&f](double s) {
          const double v = eval(f, s);
          return v > 0.0 ? 1.0 / v : 0.0;
        },
        lo, hi, 1e-10);
    verdict.increments.push_back(inc);
    total += inc;
    if (k > 0 && inc < 1e-9 * std::max(total, 1e-30)) {
      const double r = inc / verdict.increments[k - 1];
      verdict.finite = true;
      verdict.value = r < 1.0 ? total + inc * r / (1.0 - r) : total;
      return verdict;
    }
  }
  // no convergence within the horizon: decide by the late increment ratios
  std::vector<double> ratios;
  for (std::size_t k = verdict.increments.size() - 8; k < verdict.increments.size(); ++k)
    ratios.push_back(verdict.increments[k] / verdict.increments[k - 1]);
  std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
  const double median = ratios[ratios.size() / 2];
  verdict.value = total;
  if (median <= 0.95) {
    verdict.finite = true;
    verdict.value = total + verdict.increments.back() * median / (1.0 - median);
  }
  return verdict;
}

struct LinearBoundCert {
  double alpha = 0.0;
  double delta = 0.0;
};

// Smallest alpha(delta) = sup_{(0,delta]} f(x)/x over the candidate grid;
// ties broken toward the largest delta. None when the ratio is unbounded.
inline std::optional<LinearBoundCert> linear_bound_near_zero(
    const Nonlinearity& f, const std::vector<double>& delta_grid) {
  if (delta_grid.empty()) throw config_error("linear_bound_near_zero: empty delta grid");
  std::optional<LinearBoundCert> best;
  for (double delta : delta_grid) {
    if (!(delta > 0.0)) throw config_error("linear_bound_near_zero: deltas must be > 0");
    double alpha = 0.0;
    const int samples = 1024;
    for (int j = 1; j <= samples; ++j) {
      const double x = delta * j / samples;
      alpha = std::max(alpha, eval(f, x) / x);
    }
    if (!(alpha <= 1e12)) continue;
    if (!best || alpha < best->alpha * (1.0 - 1e-12) ||
        (alpha <= best->alpha * (1.0 + 1e-12) && delta > best->delta))
      best = LinearBoundCert{alpha, delta};
  }
  return best;
}

// Largest sampled difference quotient on [0, s_hi]; the solver's step control
// treats it as a Lipschitz bound for the reaction term.
inline double lipschitz_on(const Nonlinearity& f, double s_hi) {
  if (!(s_hi > 0.0)) throw domain_error("lipschitz_on: s_hi must be > 0");
  const int samples = 2048;
  const double d = s_hi / samples;
  double worst = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double quotient = (eval(f, (j + 1) * d) - eval(f, j * d)) / d;
    worst = std::max(worst, std::abs(quotient));
  }
  return worst;
}

struct HypothesisReport {
  double slope_at_zero = 0.0;          // of the minorant h
  ConvexityReport convexity;           // of h on [0, S]
  TailVerdict tail;                    // of h from s0 = 1
  std::optional<LinearBoundCert> linear_bound;  // of f itself
};

inline HypothesisReport analyze_hypotheses(const Nonlinearity& f, double S,
                                           const std::vector<double>& delta_grid) {
  HypothesisReport rep;
  const Nonlinearity& h = f.h();
  rep.slope_at_zero = slope_at_zero(h);
  rep.convexity = is_convex_on(h, S);
  rep.tail = tail_reciprocal_integral(h, 1.0);
  rep.linear_bound = linear_bound_near_zero(f, delta_grid);
  return rep;
}

}  // namespace rdlab
