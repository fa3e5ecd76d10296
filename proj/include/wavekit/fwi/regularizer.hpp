#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "wavekit/core/grid.hpp"
#include "wavekit/core/operators.hpp"
#include "wavekit/core/vec.hpp"

namespace wavekit::fwi {

enum class RegularizerKind { SplineSmoothing, Diffusion };

inline const char* to_string(RegularizerKind k) {
  return k == RegularizerKind::SplineSmoothing ? "spline" : "diffusion";
}

inline RegularizerKind parse_regularizer(const std::string& s) {
  if (s == "spline" || s == "spline_smoothing") return RegularizerKind::SplineSmoothing;
  if (s == "diffusion") return RegularizerKind::Diffusion;
  throw std::invalid_argument("unknown regularizer '" + s + "' (expected spline or diffusion)");
}

/// D^T D for the nodal forward-difference gradient D (edges inside the grid only).
inline std::vector<double> gradient_normal(const RegularGrid2D& g, std::span<const double> x) {
  const double ix2 = 1.0 / (g.hx * g.hx), iy2 = 1.0 / (g.hy * g.hy);
  std::vector<double> y(g.size(), 0.0);
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix + 1 < g.nx; ++ix) {
      const std::size_t k = g.index(ix, iy);
      const double d = (x[k + 1] - x[k]) * ix2;
      y[k] -= d;
      y[k + 1] += d;
    }
  }
  for (int iy = 0; iy + 1 < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const std::size_t k = g.index(ix, iy);
      const double d = (x[k + g.nx] - x[k]) * iy2;
      y[k] -= d;
      y[k + g.nx] += d;
    }
  }
  return y;
}

/// ||D x||^2 with D the nodal forward-difference gradient.
inline double gradient_norm2(const RegularGrid2D& g, std::span<const double> x) {
  double s = 0.0;
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix + 1 < g.nx; ++ix) {
      const std::size_t k = g.index(ix, iy);
      const double d = (x[k + 1] - x[k]) / g.hx;
      s += d * d;
    }
  }
  for (int iy = 0; iy + 1 < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const std::size_t k = g.index(ix, iy);
      const double d = (x[k + g.nx] - x[k]) / g.hy;
      s += d * d;
    }
  }
  return s;
}

/// alpha R(m): spline smoothing ||Lap (m - m_ref)||^2 or diffusion ||grad (m - m_ref)||^2.
struct Regularizer {
  RegularizerKind kind = RegularizerKind::SplineSmoothing;
  RealField m_ref;
  double alpha = 0.0;

  Regularizer() = default;
  Regularizer(RegularizerKind k, RealField ref, double a) : kind(k), m_ref(std::move(ref)), alpha(a) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("Regularizer: alpha must be >= 0");
  }

  [[nodiscard]] double value(const RealField& m) const {
    if (alpha == 0.0) return 0.0;
    const auto d = diff(m);
    if (kind == RegularizerKind::SplineSmoothing) {
      const auto l = negative_laplacian(m.grid, d);
      return alpha * dot(std::span<const double>(l), std::span<const double>(l));
    }
    return alpha * gradient_norm2(m.grid, d);
  }

  [[nodiscard]] std::vector<double> gradient(const RealField& m) const {
    if (alpha == 0.0) return std::vector<double>(m.values.size(), 0.0);
    return hessian_vec(m.grid, diff(m));
  }

  /// alpha * Hessian of R applied to v (R is quadratic, so this is independent of m).
  [[nodiscard]] std::vector<double> hessian_vec(const RegularGrid2D& g, std::span<const double> v) const {
    std::vector<double> out(v.size(), 0.0);
    if (alpha == 0.0) return out;
    out = kind == RegularizerKind::SplineSmoothing ? negative_laplacian(g, negative_laplacian(g, v)) : gradient_normal(g, v);
    for (double& x : out) x *= 2.0 * alpha;
    return out;
  }

 private:
  [[nodiscard]] std::vector<double> diff(const RealField& m) const {
    require_same_grid(m.grid, m_ref.grid, "Regularizer");
    std::vector<double> d(m.values.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = m.values[i] - m_ref.values[i];
    return d;
  }
};

/// Value of R for a unit-relative roughness on grid g: used to turn a relative weight into alpha.
inline double regularizer_unit(RegularizerKind kind, const RegularGrid2D& g, double m_scale) {
  const double h2 = g.hx * g.hy;
  const double per_node = kind == RegularizerKind::SplineSmoothing ? m_scale * m_scale / (h2 * h2) : m_scale * m_scale / h2;
  return per_node * static_cast<double>(g.size());
}

}  // namespace wavekit::fwi
