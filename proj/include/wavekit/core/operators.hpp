#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "wavekit/core/grid.hpp"
#include "wavekit/core/vec.hpp"

namespace wavekit {

/// Matrix-free five-point operator  -Lap_h u + mass .* u  with homogeneous Dirichlet
/// closure outside the grid. Helmholtz, shifted-Laplacian and plain Laplacian
/// applications all run through this one stencil.
class StencilOperator {
 public:
  StencilOperator(const RegularGrid2D& grid, cvec mass) : grid_(grid), mass_(std::move(mass)) {
    if (mass_.size() != grid_.size()) throw std::invalid_argument("StencilOperator: mass length");
    cx_ = 1.0 / (grid_.hx * grid_.hx);
    cy_ = 1.0 / (grid_.hy * grid_.hy);
    diag_.resize(mass_.size());
    for (std::size_t i = 0; i < mass_.size(); ++i) diag_[i] = 2.0 * cx_ + 2.0 * cy_ + mass_[i];
  }

  [[nodiscard]] const RegularGrid2D& grid() const { return grid_; }
  [[nodiscard]] const cvec& diagonal() const { return diag_; }
  [[nodiscard]] const cvec& mass() const { return mass_; }
  [[nodiscard]] double cx() const { return cx_; }
  [[nodiscard]] double cy() const { return cy_; }

  void apply(std::span<const cplx> u, std::span<cplx> out) const {
    const int nx = grid_.nx, ny = grid_.ny;
    for (int iy = 0; iy < ny; ++iy) {
      const std::size_t row = static_cast<std::size_t>(iy) * nx;
      for (int ix = 0; ix < nx; ++ix) {
        const std::size_t k = row + ix;
        cplx acc = diag_[k] * u[k];
        cplx side{};
        if (ix > 0) side += u[k - 1];
        if (ix + 1 < nx) side += u[k + 1];
        cplx vert{};
        if (iy > 0) vert += u[k - nx];
        if (iy + 1 < ny) vert += u[k + nx];
        out[k] = acc - cx_ * side - cy_ * vert;
      }
    }
  }

  [[nodiscard]] cvec apply(std::span<const cplx> u) const {
    cvec out(u.size());
    apply(u, out);
    return out;
  }

  /// out = b - A u
  void residual(std::span<const cplx> b, std::span<const cplx> u, std::span<cplx> out) const {
    apply(u, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = b[i] - out[i];
  }

 private:
  RegularGrid2D grid_;
  cvec mass_;
  cvec diag_;
  double cx_ = 0.0, cy_ = 0.0;
};

/// Mass coefficient of the shifted operator: -omega^2 m (alpha (1 - i gamma) - i beta).
/// alpha = 1, beta = 0 reproduces the Helmholtz coefficient -omega^2 m (1 - i gamma) exactly.
inline cvec shifted_mass(const HelmholtzProblem& p, double alpha, double beta) {
  const double w2 = p.omega * p.omega;
  cvec mass(p.m.size());
  for (std::size_t i = 0; i < mass.size(); ++i) {
    const cplx shift(alpha, -alpha * p.gamma.values[i] - beta);
    mass[i] = -w2 * p.m.values[i] * shift;
  }
  return mass;
}

inline StencilOperator helmholtz_operator(const HelmholtzProblem& p) {
  return StencilOperator(p.grid(), shifted_mass(p, 1.0, 0.0));
}

inline StencilOperator shifted_laplacian_operator(const HelmholtzProblem& p, double alpha,
                                                  double beta) {
  return StencilOperator(p.grid(), shifted_mass(p, alpha, beta));
}

inline void check_apply_input(const HelmholtzProblem& p, const ComplexField& u, const char* what) {
  require_same_grid(p.grid(), u.grid, what);
  require_finite(u.values, what);
}

inline ComplexField helmholtz_apply(const HelmholtzProblem& p, const ComplexField& u) {
  check_apply_input(p, u, "helmholtz_apply");
  return ComplexField(u.grid, helmholtz_operator(p).apply(u.values));
}

inline ComplexField shifted_laplacian_apply(const HelmholtzProblem& p, double alpha, double beta,
                                            const ComplexField& u) {
  check_apply_input(p, u, "shifted_laplacian_apply");
  return ComplexField(u.grid, shifted_laplacian_operator(p, alpha, beta).apply(u.values));
}

/// -Lap_h applied to a real field (Dirichlet closure), used by the regularizers.
inline std::vector<double> negative_laplacian(const RegularGrid2D& g, std::span<const double> u) {
  const double cx = 1.0 / (g.hx * g.hx), cy = 1.0 / (g.hy * g.hy);
  std::vector<double> out(u.size());
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const std::size_t k = g.index(ix, iy);
      double v = (2.0 * cx + 2.0 * cy) * u[k];
      if (ix > 0) v -= cx * u[k - 1];
      if (ix + 1 < g.nx) v -= cx * u[k + 1];
      if (iy > 0) v -= cy * u[k - g.nx];
      if (iy + 1 < g.ny) v -= cy * u[k + g.nx];
      out[k] = v;
    }
  }
  return out;
}

inline int default_abl_thickness(const RegularGrid2D& g) { return std::min(g.nx, g.ny) / 8; }

/// Quadratic absorbing ramp on the left, right and bottom edges; the top row (free surface)
/// stays reflecting.  gamma = ((T - d) / T)^2 at distance d < T nodes from an absorbing edge.
inline AttenuationField absorbing_layer(const RegularGrid2D& g, int thickness_nodes) {
  if (thickness_nodes < 0 || 2 * thickness_nodes >= std::min(g.nx, g.ny)) {
    throw std::invalid_argument("absorbing_layer: thickness " + std::to_string(thickness_nodes) +
                                " must satisfy 0 <= t < min(nx, ny)/2 for grid " + describe(g));
  }
  AttenuationField gamma(g);
  if (thickness_nodes == 0) return gamma;
  const double t = thickness_nodes;
  auto ramp = [t](int d) { return d < t ? ((t - d) / t) * ((t - d) / t) : 0.0; };
  for (int iy = 1; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      gamma(ix, iy) = std::max({ramp(ix), ramp(g.nx - 1 - ix), ramp(g.ny - 1 - iy)});
    }
  }
  return gamma;
}

inline AttenuationField absorbing_layer(const RegularGrid2D& g) {
  return absorbing_layer(g, default_abl_thickness(g));
}

/// Discrete delta: 1/(hx hy) at `node`, so that sum(g) * hx * hy = 1.
inline ComplexField point_source(const RegularGrid2D& g, std::size_t node) {
  if (node >= g.size()) {
    throw std::out_of_range("point_source: node " + std::to_string(node) + " outside grid " +
                            describe(g));
  }
  ComplexField f(g);
  f.values[node] = 1.0 / (g.hx * g.hy);
  return f;
}

struct Extent {
  double x = 0.0;
  double y = 0.0;
};

/// Coarsest grid resolving f_max at `points_per_wavelength` for the slowest velocity, with
/// (n - 1) a multiple of 2^(levels - 1) so the multigrid hierarchy exists.
inline RegularGrid2D grid_for_frequency(double f_max, double v_min, Extent extent,
                                        int points_per_wavelength = 10, int levels = 3) {
  if (!(f_max > 0.0) || !(v_min > 0.0) || !(extent.x > 0.0) || !(extent.y > 0.0) ||
      points_per_wavelength < 1 || levels < 1) {
    throw std::invalid_argument("grid_for_frequency: arguments must be positive");
  }
  const double h_max = v_min / (f_max * points_per_wavelength);
  const int q = 1 << (levels - 1);
  auto intervals = [&](double len) {
    // tolerate round-off when len / h_max is an integer
    const int n = static_cast<int>(std::ceil(len / h_max - 1e-9));
    return std::max(q, ((n + q - 1) / q) * q);
  };
  const int ix = std::max(intervals(extent.x), 2);
  const int iy = std::max(intervals(extent.y), 2);
  return RegularGrid2D(ix + 1, iy + 1, extent.x / ix, extent.y / iy);
}

}  // namespace wavekit
