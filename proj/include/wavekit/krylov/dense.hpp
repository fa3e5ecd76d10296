#pragma once

#include <Eigen/Dense>

#include "wavekit/core/operators.hpp"

namespace wavekit {

using DenseMatrix = Eigen::MatrixXcd;

/// Explicit matrix of a five-point stencil operator. Intended for small grids only.
inline DenseMatrix assemble_dense(const StencilOperator& op) {
  const RegularGrid2D& g = op.grid();
  const auto n = static_cast<Eigen::Index>(g.size());
  DenseMatrix a = DenseMatrix::Zero(n, n);
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const auto k = static_cast<Eigen::Index>(g.index(ix, iy));
      a(k, k) = op.diagonal()[k];
      if (ix > 0) a(k, k - 1) = -op.cx();
      if (ix + 1 < g.nx) a(k, k + 1) = -op.cx();
      if (iy > 0) a(k, k - g.nx) = -op.cy();
      if (iy + 1 < g.ny) a(k, k + g.nx) = -op.cy();
    }
  }
  return a;
}

/// LU factorization of a stencil operator with solve on std::vector data.
class DenseLu {
 public:
  DenseLu() = default;
  explicit DenseLu(const StencilOperator& op) : lu_(assemble_dense(op)) {}
  explicit DenseLu(const DenseMatrix& a) : lu_(a) {}

  void solve(std::span<const cplx> b, std::span<cplx> x) const {
    // Aligned copies keep the vectorised triangular solves independent of caller addresses.
    const Eigen::VectorXcd bv = Eigen::Map<const Eigen::VectorXcd>(b.data(), static_cast<Eigen::Index>(b.size()));
    const Eigen::VectorXcd xv = lu_.solve(bv);
    std::copy(xv.data(), xv.data() + xv.size(), x.begin());
  }

  [[nodiscard]] cvec solve(std::span<const cplx> b) const {
    cvec x(b.size());
    solve(b, x);
    return x;
  }

 private:
  Eigen::PartialPivLU<DenseMatrix> lu_;
};

}  // namespace wavekit
