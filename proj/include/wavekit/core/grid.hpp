#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wavekit {

using cplx = std::complex<double>;

/// Regular node-centred 2D grid. Index (ix, iy) maps to iy * nx + ix; iy = 0 is the
/// top (surface) row and depth grows with iy.
struct RegularGrid2D {
  int nx = 0;
  int ny = 0;
  double hx = 0.0;
  double hy = 0.0;

  RegularGrid2D() = default;
  RegularGrid2D(int nx_, int ny_, double hx_, double hy_) : nx(nx_), ny(ny_), hx(hx_), hy(hy_) {
    if (nx < 3 || ny < 3) {
      throw std::invalid_argument("RegularGrid2D: need at least 3 nodes per direction, got " +
                                  std::to_string(nx) + "x" + std::to_string(ny));
    }
    if (!(hx > 0.0) || !(hy > 0.0) || !std::isfinite(hx) || !std::isfinite(hy)) {
      throw std::invalid_argument("RegularGrid2D: spacings must be positive and finite");
    }
  }

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  [[nodiscard]] std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * nx + ix;
  }
  [[nodiscard]] double extent_x() const { return hx * (nx - 1); }
  [[nodiscard]] double extent_y() const { return hy * (ny - 1); }

  /// True when the grid can be coarsened `times` times by taking every other node.
  [[nodiscard]] bool coarsenable(int times = 1) const {
    const int step = 1 << times;
    return (nx - 1) % step == 0 && (ny - 1) % step == 0 && (nx - 1) / step >= 1 &&
           (ny - 1) / step >= 1;
  }
  [[nodiscard]] RegularGrid2D coarsened() const {
    if (!coarsenable(1)) {
      throw std::invalid_argument("grid " + std::to_string(nx) + "x" + std::to_string(ny) +
                                  " cannot be coarsened: (n-1) must be even");
    }
    RegularGrid2D c;
    c.nx = (nx - 1) / 2 + 1;
    c.ny = (ny - 1) / 2 + 1;
    c.hx = 2.0 * hx;
    c.hy = 2.0 * hy;
    return c;
  }

  friend bool operator==(const RegularGrid2D&, const RegularGrid2D&) = default;
};

inline std::string describe(const RegularGrid2D& g) {
  return std::to_string(g.nx) + "x" + std::to_string(g.ny);
}

inline void require_same_grid(const RegularGrid2D& a, const RegularGrid2D& b, const char* what) {
  if (!(a == b)) {
    throw std::invalid_argument(std::string(what) + ": grid mismatch (" + describe(a) + " vs " +
                                describe(b) + ")");
  }
}

/// Real-valued grid function.
struct RealField {
  RegularGrid2D grid;
  std::vector<double> values;

  RealField() = default;
  explicit RealField(const RegularGrid2D& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  RealField(const RegularGrid2D& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw std::invalid_argument("RealField: length mismatch");
  }

  double& operator()(int ix, int iy) { return values[grid.index(ix, iy)]; }
  double operator()(int ix, int iy) const { return values[grid.index(ix, iy)]; }
  [[nodiscard]] std::size_t size() const { return values.size(); }
};

/// Squared slowness m = 1/c^2 in s^2/m^2. Strictly positive and finite.
struct SlownessSquaredField : RealField {
  SlownessSquaredField() = default;
  SlownessSquaredField(const RegularGrid2D& g, std::vector<double> v) : RealField(g, std::move(v)) {
    validate();
  }
  SlownessSquaredField(const RegularGrid2D& g, double value) : RealField(g, value) { validate(); }

  static SlownessSquaredField from_velocity(const RegularGrid2D& g, std::span<const double> velocity) {
    std::vector<double> m(velocity.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = 1.0 / (velocity[i] * velocity[i]);
    return {g, std::move(m)};
  }

  void validate() const {
    for (double v : values) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("SlownessSquaredField: values must be positive and finite");
      }
    }
  }
};

/// Attenuation profile gamma in [0, 1].
struct AttenuationField : RealField {
  AttenuationField() = default;
  explicit AttenuationField(const RegularGrid2D& g) : RealField(g, 0.0) {}
  AttenuationField(const RegularGrid2D& g, std::vector<double> v) : RealField(g, std::move(v)) {
    for (double x : values) {
      if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("AttenuationField: values must lie in [0, 1]");
      }
    }
  }
};

/// Complex grid function (wavefields, residuals, errors, right-hand sides).
struct ComplexField {
  RegularGrid2D grid;
  std::vector<cplx> values;

  ComplexField() = default;
  explicit ComplexField(const RegularGrid2D& g) : grid(g), values(g.size()) {}
  ComplexField(const RegularGrid2D& g, std::vector<cplx> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw std::invalid_argument("ComplexField: length mismatch");
  }

  cplx& operator()(int ix, int iy) { return values[grid.index(ix, iy)]; }
  cplx operator()(int ix, int iy) const { return values[grid.index(ix, iy)]; }
  [[nodiscard]] std::size_t size() const { return values.size(); }

  [[nodiscard]] bool finite() const {
    for (const cplx& z : values) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
  }
};

/// H(m, omega) = -Laplacian - omega^2 m (1 - i gamma).
struct HelmholtzProblem {
  SlownessSquaredField m;
  AttenuationField gamma;
  double omega = 0.0;

  HelmholtzProblem() = default;
  HelmholtzProblem(SlownessSquaredField m_, AttenuationField gamma_, double omega_)
      : m(std::move(m_)), gamma(std::move(gamma_)), omega(omega_) {
    require_same_grid(m.grid, gamma.grid, "HelmholtzProblem");
    if (!(omega > 0.0) || !std::isfinite(omega)) {
      throw std::invalid_argument("HelmholtzProblem: omega must be positive");
    }
  }

  [[nodiscard]] const RegularGrid2D& grid() const { return m.grid; }
};

inline double angular_frequency(double hz) { return 2.0 * 3.14159265358979323846 * hz; }

}  // namespace wavekit
