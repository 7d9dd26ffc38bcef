#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdlab {

// Error taxonomy mirrors the CLI exit codes: bad inputs and violated
// hypotheses exit 1, numerical breakdowns exit 2.
struct domain_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct hypothesis_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double pi = std::numbers::pi;

// Surface area of the unit (N-1)-sphere, 2 pi^{N/2} / Gamma(N/2).
inline double sphere_area(int dim) {
  if (dim < 2) throw domain_error("sphere_area: dimension must be >= 2");
  return 2.0 * std::pow(pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

struct TriDiag {
  std::vector<double> sub;    // sub[i] couples row i to i-1; sub[0] unused
  std::vector<double> diag;
  std::vector<double> super;  // super[i] couples row i to i+1; super[n-1] unused

  std::size_t size() const { return diag.size(); }

  std::vector<double> apply(const std::vector<double>& x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = diag[i] * x[i];
      if (i > 0) v += sub[i] * x[i - 1];
      if (i + 1 < n) v += super[i] * x[i + 1];
      y[i] = v;
    }
    return y;
  }
};

// Thomas algorithm. No pivoting; fine for the diagonally dominant solves here
// and, with the tiny-pivot guard, for near-singular shifted systems where the
// solution direction (not its scale) is what matters.
inline std::vector<double> thomas_solve(const TriDiag& A, std::vector<double> rhs) {
  const std::size_t n = A.size();
  if (rhs.size() != n) throw domain_error("thomas_solve: size mismatch");
  std::vector<double> c(n), d(n);
  double piv = A.diag[0];
  if (std::abs(piv) < 1e-300) piv = piv < 0 ? -1e-300 : 1e-300;
  c[0] = A.super.empty() ? 0.0 : A.super[0] / piv;
  d[0] = rhs[0] / piv;
  for (std::size_t i = 1; i < n; ++i) {
    piv = A.diag[i] - A.sub[i] * c[i - 1];
    if (std::abs(piv) < 1e-300) piv = piv < 0 ? -1e-300 : 1e-300;
    c[i] = (i + 1 < n) ? A.super[i] / piv : 0.0;
    d[i] = (rhs[i] - A.sub[i] * d[i - 1]) / piv;
  }
  for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
  return d;
}

namespace detail {
inline double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double fa, double b, double fb, double m, double fm,
                                   double whole, double tol, int depth, long& budget) {
  if ((budget -= 2) < 0)
    throw numerical_error("adaptive_simpson: evaluation budget exhausted");
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, budget) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, budget);
}
}  // namespace detail

// Stratified into 32 panels before the adaptive recursion: a lone 3-point
// estimate both misjudges the tolerance scale and can terminate spuriously
// when the mass sits between samples (e.g. a drifting kernel bulk far from
// both endpoints). The abs floor guards integrals that are themselves ~0,
// and the budget turns a pathological recursion into an error, not a hang.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double rel_tol = 1e-10, int max_depth = 48) {
  if (!(b >= a)) throw domain_error("adaptive_simpson: b < a");
  if (a == b) return 0.0;
  constexpr int panels = 32;
  std::array<double, panels + 1> xs{}, fs{};
  double peak = 0.0;
  for (int i = 0; i <= panels; ++i) {
    xs[i] = i == panels ? b : a + (b - a) * i / panels;
    fs[i] = f(xs[i]);
    peak = std::max(peak, std::abs(fs[i]));
  }
  const double scale = std::max(std::abs(b - a) * peak, 1e-300);
  const double tol = std::max(scale * rel_tol, 1e-300) / panels;
  long budget = 4'000'000;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double m = 0.5 * (xs[k] + xs[k + 1]);
    const double fm = f(m);
    const double whole = detail::simpson(xs[k], fs[k], xs[k + 1], fs[k + 1], fm);
    total += detail::adaptive_simpson_rec(f, xs[k], fs[k], xs[k + 1], fs[k + 1], m, fm, whole,
                                          tol, max_depth, budget);
  }
  return total;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw domain_error("fit_linear: need >= 2 matched points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-300) throw numerical_error("fit_linear: degenerate abscissae");
  LinearFit out;
  out.slope = (n * sxy - sx * sy) / det;
  out.intercept = (sy - out.slope * sx) / n;
  return out;
}

// Least-squares slope of log y against x; skips nonpositive y.
inline LinearFit fit_log_linear(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> xs, ls;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (y[i] > 0.0) {
      xs.push_back(x[i]);
      ls.push_back(std::log(y[i]));
    }
  return fit_linear(xs, ls);
}

// Aitken delta-squared limit of a geometric-tail sequence from its last three
// terms. Falls back to the final term when the differences degenerate.
inline double aitken_limit(double l0, double l1, double l2) {
  const double d1 = l1 - l0, d2 = l2 - l1;
  const double den = d2 - d1;
  if (std::abs(den) < 1e-14 * (std::abs(d1) + std::abs(d2)) || den == 0.0) return l2;
  const double q = d2 / d1;
  if (!(std::abs(q) < 1.0)) return l2;  // not converging geometrically
  return l2 - d2 * d2 / den;
}

// 0 for x <= 0, 1 for x >= 1, C^2 joins.
inline double smoothstep_quintic(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

// Natural cubic spline on strictly increasing abscissae. Evaluation outside
// the domain extrapolates the end segment's polynomial.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> xs, std::vector<double> ys)
      : x_(std::move(xs)), y_(std::move(ys)) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n) throw domain_error("CubicSpline: need >= 3 points");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw domain_error("CubicSpline: abscissae not increasing");
    // Solve for second derivatives with natural end conditions.
    TriDiag A;
    A.sub.assign(n, 0.0);
    A.diag.assign(n, 1.0);
    A.super.assign(n, 0.0);
    std::vector<double> rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double hl = x_[i] - x_[i - 1], hr = x_[i + 1] - x_[i];
      A.sub[i] = hl / 6.0;
      A.diag[i] = (hl + hr) / 3.0;
      A.super[i] = hr / 6.0;
      rhs[i] = (y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl;
    }
    m_ = thomas_solve(A, rhs);
  }

  double min_x() const { return x_.front(); }
  double max_x() const { return x_.back(); }
  double knot(std::size_t i) const { return x_.at(i); }

  double value(double x) const {
    const auto [i, t, h] = locate(x);
    const double a = y_[i], b = y_[i + 1], ma = m_[i], mb = m_[i + 1];
    const double u = 1.0 - t;
    return u * a + t * b + h * h / 6.0 * (u * (u * u - 1.0) * ma + t * (t * t - 1.0) * mb);
  }

  double derivative(double x) const {
    const auto [i, t, h] = locate(x);
    const double u = 1.0 - t;
    return (y_[i + 1] - y_[i]) / h +
           h / 6.0 * ((3.0 * t * t - 1.0) * m_[i + 1] - (3.0 * u * u - 1.0) * m_[i]);
  }

  double second_derivative(double x) const {
    const auto [i, t, h] = locate(x);
    return (1.0 - t) * m_[i] + t * m_[i + 1];
  }

 private:
  struct Loc {
    std::size_t i;
    double t;
    double h;
  };
  Loc locate(double x) const {
    std::size_t lo = 0, hi = x_.size() - 1;
    if (x <= x_.front())
      hi = 1;
    else if (x >= x_.back())
      lo = x_.size() - 2;
    else {
      while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (x_[mid] <= x ? lo : hi) = mid;
      }
    }
    const double h = x_[lo + 1] - x_[lo];
    return {lo, (x - x_[lo]) / h, h};
  }

  std::vector<double> x_, y_, m_;
};

// Bisection on [a,b]; requires a sign change.
inline double bisect_root(const std::function<double(double)>& f, double a, double b,
                          double tol = 1e-12) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) throw domain_error("bisect_root: no sign change");
  for (int it = 0; it < 200 && b - a > tol * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    const double m = 0.5 * (a + b), fm = f(m);
    if (fm == 0.0) return m;
    if (fa * fm < 0.0) {
      b = m;
      fb = fm;
    } else {
      a = m;
      fa = fm;
    }
  }
  return 0.5 * (a + b);
}

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace rdlab
