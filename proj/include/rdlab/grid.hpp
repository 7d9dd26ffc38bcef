#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "rdlab/manifold.hpp"
#include "rdlab/numerics.hpp"

namespace rdlab {

// Uniform truncated grid on [0, R], nodes r_i = i h, h = R/n.
struct RadialGrid {
  double R = 1.0;
  int n = 16;

  RadialGrid() = default;
  RadialGrid(double R_, int n_) : R(R_), n(n_) {
    if (!(R > 0.0)) throw config_error("RadialGrid: R must be > 0");
    if (n < 1) throw config_error("RadialGrid: n must be >= 1");
  }

  double h() const { return R / n; }
  double r(int i) const { return i * h(); }
};

// Cell masses for the weighted inner product <u,v> = sum u_i v_i w_i.
// Interior nodes use omega psi(r_i)^{N-1} h; the end cells are half width, and
// the origin cell is integrated exactly since psi vanishes there.
inline std::shared_ptr<const std::vector<double>> make_weights(const ModelManifold& m,
                                                               const RadialGrid& g) {
  auto w = std::make_shared<std::vector<double>>(g.n + 1);
  const double h = g.h();
  auto density = [&m](double r) { return volume_density(m, r); };
  (*w)[0] = adaptive_simpson(density, 0.0, 0.5 * h, 1e-12);
  for (int i = 1; i < g.n; ++i) (*w)[i] = volume_density(m, g.r(i)) * h;
  (*w)[g.n] = adaptive_simpson(density, g.R - 0.5 * h, g.R, 1e-12);
  return w;
}

struct RadialField {
  RadialGrid grid;
  std::shared_ptr<const std::vector<double>> weights;
  std::vector<double> values;

  double mass() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += (*weights)[i] * values[i];
    return s;
  }

  double sup() const {
    double s = 0.0;
    for (double v : values) s = std::max(s, std::abs(v));
    return s;
  }

  double min_value() const {
    double s = values.empty() ? 0.0 : values[0];
    for (double v : values) s = std::min(s, v);
    return s;
  }

  double max_value() const {
    double s = values.empty() ? 0.0 : values[0];
    for (double v : values) s = std::max(s, v);
    return s;
  }

  double center_value() const { return values[0]; }

  double weighted_dot(const RadialField& other) const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      s += (*weights)[i] * values[i] * other.values[i];
    return s;
  }
};

template <typename F>
RadialField make_field(const ModelManifold& m, const RadialGrid& g, F&& fn) {
  RadialField f;
  f.grid = g;
  f.weights = make_weights(m, g);
  f.values.resize(g.n + 1);
  for (int i = 0; i <= g.n; ++i) f.values[i] = fn(g.r(i));
  return f;
}

inline RadialField constant_field(const ModelManifold& m, const RadialGrid& g, double c) {
  return make_field(m, g, [c](double) { return c; });
}

// Smooth compactly supported bump, peak at r = center, support width
// |r - center| < width, maximum = height.
inline RadialField bump_field(const ModelManifold& m, const RadialGrid& g, double center,
                              double width, double height) {
  if (!(width > 0.0)) throw config_error("bump_field: width must be > 0");
  return make_field(m, g, [=](double r) {
    const double s = (r - center) / width;
    if (std::abs(s) >= 1.0) return 0.0;
    return height * std::exp(1.0 - 1.0 / (1.0 - s * s));
  });
}

// L1-normalized bump at the pole; the delta-data stand-in for kernel work.
inline RadialField delta_bump(const ModelManifold& m, const RadialGrid& g, double width) {
  RadialField f = bump_field(m, g, 0.0, width, 1.0);
  const double mass = f.mass();
  if (!(mass > 0.0)) throw numerical_error("delta_bump: vanishing mass (width under-resolved)");
  for (double& v : f.values) v /= mass;
  return f;
}

inline double linf_diff(const RadialField& a, const RadialField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    s = std::max(s, std::abs(a.values[i] - b.values[i]));
  return s;
}

}  // namespace rdlab
