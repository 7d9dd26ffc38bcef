#pragma once

// Independent oracles for the test suite. Everything here is deliberately
// implemented by different algorithms than the library paths it checks.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rdlab/spectral.hpp"

namespace oracles {

// Eigenvalue count below x for a symmetric tridiagonal matrix, by the Sturm
// (LDL^T inertia) recurrence.
inline int sturm_count_below(const std::vector<double>& diag, const std::vector<double>& off,
                             double x) {
  int count = 0;
  double d = 1.0;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const double off2 = (i == 0) ? 0.0 : off[i - 1] * off[i - 1];
    d = diag[i] - x - off2 / d;
    if (d == 0.0) d = 1e-300;
    if (d < 0.0) ++count;
  }
  return count;
}

// Smallest eigenvalue by bisection on the Sturm count. Dense brute-force in
// the sense that it scans the whole spectrum bracket, no shifts, no vectors.
inline double sturm_smallest_eigenvalue(const std::vector<double>& diag,
                                        const std::vector<double>& off) {
  double lo = diag[0], hi = diag[0];
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const double radius = (i > 0 ? std::abs(off[i - 1]) : 0.0) +
                          (i + 1 < diag.size() ? std::abs(off[i]) : 0.0);
    lo = std::min(lo, diag[i] - radius);
    hi = std::max(hi, diag[i] + radius);
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count_below(diag, off, mid) >= 1)
      hi = mid;
    else
      lo = mid;
    if (hi - lo <= 1e-13 * std::max(1.0, std::abs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

// Symmetrization of the weighted operator: D^{1/2} A D^{-1/2} with D = diag(w).
// Same spectrum, explicitly symmetric, suitable for the Sturm oracle.
inline void symmetrize(const rdlab::RadialOperator& op, std::vector<double>& diag,
                       std::vector<double>& off) {
  const std::size_t n = op.size();
  diag = op.A.diag;
  off.assign(n - 1, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i)
    off[i] = op.A.super[i] * std::sqrt(op.w[i] / op.w[i + 1]);
}

inline double central_second_derivative(const std::function<double(double)>& f, double x,
                                        double h) {
  return (f(x - h) - 2.0 * f(x) + f(x + h)) / (h * h);
}

// Blow-up time of u' = u^p from constant data.
inline double ode_blowup_time(double u0, double p) {
  return std::pow(u0, 1.0 - p) / (p - 1.0);
}

}  // namespace oracles
