#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "wavekit/core/grid.hpp"
#include "wavekit/core/vec.hpp"

namespace wavekit {

// Inter-grid transfer for vertex-aligned grids: coarse node (I, J) sits on fine node (2I, 2J).
//
// Prolongation is bilinear interpolation. Restriction is full weighting, built as the
// adjoint of prolongation in the trapezoidal grid inner product
//     <u, v>_h = sum_k w_k conj(u_k) v_k,   w = 1 inside, 1/2 on edges, 1/4 at corners,
// so  <restrict(u), v>_2h = 1/4 <u, prolong(v)>_h  holds exactly and constants are preserved
// on every node including the boundary.

namespace detail {

inline double edge_weight(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

template <class T>
void prolong_impl(const RegularGrid2D& coarse, const RegularGrid2D& fine, std::span<const T> c,
                  std::span<T> f) {
  for (int iy = 0; iy < fine.ny; ++iy) {
    const int jy = iy / 2;
    const bool oy = iy % 2 != 0;
    for (int ix = 0; ix < fine.nx; ++ix) {
      const int jx = ix / 2;
      const bool ox = ix % 2 != 0;
      T v = c[coarse.index(jx, jy)];
      if (ox && oy) {
        v = 0.25 * (c[coarse.index(jx, jy)] + c[coarse.index(jx + 1, jy)] +
                    c[coarse.index(jx, jy + 1)] + c[coarse.index(jx + 1, jy + 1)]);
      } else if (ox) {
        v = 0.5 * (c[coarse.index(jx, jy)] + c[coarse.index(jx + 1, jy)]);
      } else if (oy) {
        v = 0.5 * (c[coarse.index(jx, jy)] + c[coarse.index(jx, jy + 1)]);
      }
      f[fine.index(ix, iy)] = v;
    }
  }
}

template <class T>
void restrict_impl(const RegularGrid2D& fine, const RegularGrid2D& coarse, std::span<const T> f,
                   std::span<T> c) {
  static constexpr double w1[3] = {0.5, 1.0, 0.5};
  for (int jy = 0; jy < coarse.ny; ++jy) {
    for (int jx = 0; jx < coarse.nx; ++jx) {
      T acc{};
      for (int dy = -1; dy <= 1; ++dy) {
        const int iy = 2 * jy + dy;
        if (iy < 0 || iy >= fine.ny) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          const int ix = 2 * jx + dx;
          if (ix < 0 || ix >= fine.nx) continue;
          const double w = w1[dx + 1] * w1[dy + 1] * edge_weight(ix, fine.nx) *
                           edge_weight(iy, fine.ny);
          acc += w * f[fine.index(ix, iy)];
        }
      }
      const double wc = edge_weight(jx, coarse.nx) * edge_weight(jy, coarse.ny);
      c[coarse.index(jx, jy)] = (0.25 / wc) * acc;
    }
  }
}

}  // namespace detail

inline void restrict_to(const RegularGrid2D& fine, const RegularGrid2D& coarse,
                        std::span<const cplx> f, std::span<cplx> c) {
  detail::restrict_impl<cplx>(fine, coarse, f, c);
}

inline void prolong_to(const RegularGrid2D& coarse, const RegularGrid2D& fine,
                       std::span<const cplx> c, std::span<cplx> f) {
  detail::prolong_impl<cplx>(coarse, fine, c, f);
}

inline ComplexField restrict_field(const ComplexField& fine) {
  const RegularGrid2D coarse = fine.grid.coarsened();
  ComplexField out;
  out.grid = coarse;
  out.values.resize(coarse.size());
  restrict_to(fine.grid, coarse, fine.values, out.values);
  return out;
}

/// Bilinear prolongation onto the grid whose coarsening is `coarse.grid`.
inline ComplexField prolong_field(const ComplexField& coarse) {
  RegularGrid2D fine;
  fine.nx = 2 * (coarse.grid.nx - 1) + 1;
  fine.ny = 2 * (coarse.grid.ny - 1) + 1;
  fine.hx = coarse.grid.hx / 2.0;
  fine.hy = coarse.grid.hy / 2.0;
  ComplexField out;
  out.grid = fine;
  out.values.resize(fine.size());
  prolong_to(coarse.grid, fine, coarse.values, out.values);
  return out;
}

/// Trapezoidal-weighted inner product sum w_k conj(a_k) b_k.
inline cplx grid_inner(const RegularGrid2D& g, std::span<const cplx> a, std::span<const cplx> b) {
  cplx s{};
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const std::size_t k = g.index(ix, iy);
      s += detail::edge_weight(ix, g.nx) * detail::edge_weight(iy, g.ny) * std::conj(a[k]) * b[k];
    }
  }
  return s;
}

/// Coefficient injection: coarse node takes the co-located fine value.
inline std::vector<double> inject(const RegularGrid2D& fine, const RegularGrid2D& coarse,
                                  std::span<const double> f) {
  std::vector<double> c(coarse.size());
  for (int jy = 0; jy < coarse.ny; ++jy)
    for (int jx = 0; jx < coarse.nx; ++jx) c[coarse.index(jx, jy)] = f[fine.index(2 * jx, 2 * jy)];
  return c;
}

/// Bilinear resampling between two grids covering the same physical extent (node 0 at the
/// origin). Used to carry models between frequency-window grids.
class BilinearResampler {
 public:
  BilinearResampler(const RegularGrid2D& from, const RegularGrid2D& to) : from_(from), to_(to) {
    const double ex = from.extent_x(), ey = from.extent_y();
    if (std::abs(ex - to.extent_x()) > 1e-9 * ex || std::abs(ey - to.extent_y()) > 1e-9 * ey) {
      throw std::invalid_argument("BilinearResampler: grids cover different extents");
    }
    entries_.resize(to.size());
    for (int iy = 0; iy < to.ny; ++iy) {
      const auto [y0, ty] = locate(iy * to.hy / from.hy, from.ny);
      for (int ix = 0; ix < to.nx; ++ix) {
        const auto [x0, tx] = locate(ix * to.hx / from.hx, from.nx);
        Entry& e = entries_[to.index(ix, iy)];
        e.idx[0] = from.index(x0, y0);
        e.idx[1] = from.index(x0 + 1, y0);
        e.idx[2] = from.index(x0, y0 + 1);
        e.idx[3] = from.index(x0 + 1, y0 + 1);
        e.w[0] = (1 - tx) * (1 - ty);
        e.w[1] = tx * (1 - ty);
        e.w[2] = (1 - tx) * ty;
        e.w[3] = tx * ty;
      }
    }
  }

  [[nodiscard]] std::vector<double> apply(std::span<const double> f) const {
    std::vector<double> out(entries_.size());
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const Entry& e = entries_[k];
      out[k] = e.w[0] * f[e.idx[0]] + e.w[1] * f[e.idx[1]] + e.w[2] * f[e.idx[2]] +
               e.w[3] * f[e.idx[3]];
    }
    return out;
  }

  /// Transpose of apply (maps gradients back to the source grid).
  [[nodiscard]] std::vector<double> apply_transpose(std::span<const double> g) const {
    std::vector<double> out(from_.size(), 0.0);
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const Entry& e = entries_[k];
      for (int j = 0; j < 4; ++j) out[e.idx[j]] += e.w[j] * g[k];
    }
    return out;
  }

  [[nodiscard]] const RegularGrid2D& from() const { return from_; }
  [[nodiscard]] const RegularGrid2D& to() const { return to_; }

 private:
  struct Entry {
    std::size_t idx[4];
    double w[4];
  };

  static std::pair<int, double> locate(double pos, int n) {
    pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
    int i0 = std::min(static_cast<int>(std::floor(pos)), n - 2);
    return {i0, pos - i0};
  }

  RegularGrid2D from_, to_;
  std::vector<Entry> entries_;
};

inline SlownessSquaredField resample(const SlownessSquaredField& m, const RegularGrid2D& to) {
  if (m.grid == to) return m;
  return {to, BilinearResampler(m.grid, to).apply(m.values)};
}

}  // namespace wavekit
