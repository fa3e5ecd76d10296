#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "wavekit/core/operators.hpp"
#include "wavekit/core/transfer.hpp"
#include "wavekit/krylov/dense.hpp"

namespace wavekit {

struct VCycleConfig {
  int levels = 3;
  int pre_smooth = 1;
  int post_smooth = 1;
  double jacobi_weight = 0.8;
  double alpha = 1.0;  // shift (alpha, beta) of the preconditioning operator
  double beta = 0.5;

  void validate() const {
    if (levels < 2) throw std::invalid_argument("VCycleConfig: levels must be >= 2");
    if (pre_smooth < 0 || post_smooth < 0)
      throw std::invalid_argument("VCycleConfig: smoothing counts must be >= 0");
    if (!(jacobi_weight > 0.0 && jacobi_weight <= 1.0))
      throw std::invalid_argument("VCycleConfig: jacobi_weight must be in (0, 1]");
  }
};

/// Geometric V-cycle for the shifted Laplacian -Lap - omega^2 m (alpha(1 - i gamma) - i beta).
/// Coarse operators are rediscretized from injected coefficients; the coarsest level is
/// solved by dense LU. Immutable after construction, so one instance may serve concurrent
/// applications.
class ShiftedLaplacianVCycle {
 public:
  ShiftedLaplacianVCycle(const HelmholtzProblem& p, const VCycleConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    if (!p.grid().coarsenable(cfg_.levels - 1)) {
      throw std::invalid_argument("vcycle: grid " + describe(p.grid()) + " cannot be coarsened " +
                                  std::to_string(cfg_.levels - 1) + " times");
    }
    HelmholtzProblem level = p;
    for (int l = 0; l < cfg_.levels; ++l) {
      if (l > 0) {
        const RegularGrid2D coarse = level.grid().coarsened();
        HelmholtzProblem next;
        next.m.grid = coarse;
        next.m.values = inject(level.grid(), coarse, level.m.values);
        next.gamma.grid = coarse;
        next.gamma.values = inject(level.grid(), coarse, level.gamma.values);
        next.omega = p.omega;
        level = std::move(next);
      }
      ops_.push_back(shifted_laplacian_operator(level, cfg_.alpha, cfg_.beta));
      cvec inv(ops_.back().diagonal().size());
      for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = cfg_.jacobi_weight / ops_.back().diagonal()[i];
      weighted_inv_diag_.push_back(std::move(inv));
    }
    coarse_lu_ = DenseLu(ops_.back());
  }

  [[nodiscard]] const VCycleConfig& config() const { return cfg_; }
  [[nodiscard]] const RegularGrid2D& grid() const { return ops_.front().grid(); }
  [[nodiscard]] const StencilOperator& fine_operator() const { return ops_.front(); }

  /// One V-cycle for SL e = r starting from e0; result written to e (may alias e0).
  void apply(std::span<const cplx> e0, std::span<const cplx> r, std::span<cplx> e) const {
    if (e.data() != e0.data()) std::copy(e0.begin(), e0.end(), e.begin());
    cycle(0, r, e);
  }

  [[nodiscard]] cvec apply(std::span<const cplx> r) const {
    cvec e(r.size());
    cycle(0, r, e);
    return e;
  }

 private:
  void smooth(int level, std::span<const cplx> r, std::span<cplx> e, int sweeps) const {
    const StencilOperator& op = ops_[level];
    const cvec& winv = weighted_inv_diag_[level];
    cvec res(e.size());
    for (int s = 0; s < sweeps; ++s) {
      op.residual(r, e, res);
      for (std::size_t i = 0; i < e.size(); ++i) e[i] += winv[i] * res[i];
    }
  }

  void cycle(int level, std::span<const cplx> r, std::span<cplx> e) const {
    if (level == cfg_.levels - 1) {
      coarse_lu_.solve(r, e);
      return;
    }
    const StencilOperator& op = ops_[level];
    const RegularGrid2D& fine = op.grid();
    const RegularGrid2D& coarse = ops_[level + 1].grid();
    smooth(level, r, e, cfg_.pre_smooth);
    cvec res(e.size());
    op.residual(r, e, res);
    cvec rc(coarse.size()), ec(coarse.size());
    restrict_to(fine, coarse, res, rc);
    cycle(level + 1, rc, ec);
    cvec corr(e.size());
    prolong_to(coarse, fine, ec, corr);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += corr[i];
    smooth(level, r, e, cfg_.post_smooth);
  }

  VCycleConfig cfg_;
  std::vector<StencilOperator> ops_;
  std::vector<cvec> weighted_inv_diag_;
  DenseLu coarse_lu_;
};

inline ComplexField vcycle(const HelmholtzProblem& p, const VCycleConfig& cfg, const ComplexField& e0,
                           const ComplexField& r) {
  require_same_grid(p.grid(), r.grid, "vcycle");
  require_same_grid(p.grid(), e0.grid, "vcycle");
  ShiftedLaplacianVCycle vc(p, cfg);
  ComplexField e(p.grid());
  vc.apply(e0.values, r.values, e.values);
  return e;
}

}  // namespace wavekit
