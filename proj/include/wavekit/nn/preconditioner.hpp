#pragma once

#include <memory>
#include <numbers>

#include "wavekit/core/grid.hpp"
#include "wavekit/core/vec.hpp"
#include "wavekit/krylov/fgmres.hpp"
#include "wavekit/krylov/multigrid.hpp"
#include "wavekit/nn/encoder_solver.hpp"

namespace wavekit::nn {

template <class T>
using Context = std::vector<Tensor<T>>;

/// Encoder input: the dimensionless wavenumber (omega h)^2 m, scaled so that a medium at
/// ten points per wavelength reads 1.
template <class T>
Tensor<T> medium_tensor(const HelmholtzProblem& p) {
  const RegularGrid2D& g = p.grid();
  const double scale = p.omega * p.omega * g.hx * g.hy * (10.0 / (2.0 * std::numbers::pi)) *
                       (10.0 / (2.0 * std::numbers::pi));
  Tensor<T> t(1, g.ny, g.nx);
  for (std::size_t i = 0; i < g.size(); ++i) t.v[i] = static_cast<T>(scale * p.m.values[i]);
  return t;
}

/// Solver input: (re r, im r) / s and gamma, where s = ||r||_inf.
template <class T>
Tensor<T> residual_tensor(const RegularGrid2D& g, std::span<const cplx> r, const AttenuationField& gamma,
                          double s) {
  Tensor<T> t(3, g.ny, g.nx);
  const double inv = s > 0.0 ? 1.0 / s : 0.0;
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) {
    t.v[i] = static_cast<T>(r[i].real() * inv);
    t.v[n + i] = static_cast<T>(r[i].imag() * inv);
    t.v[2 * n + i] = static_cast<T>(gamma.values[i]);
  }
  return t;
}

/// Physical error from the network's 2-channel output: s * hx * hy * (out_0 + i out_1).
template <class T>
void decode_error(const RegularGrid2D& g, const Tensor<T>& out, double s, std::span<cplx> e) {
  const std::size_t n = g.size();
  const double f = s * g.hx * g.hy;
  for (std::size_t i = 0; i < n; ++i)
    e[i] = cplx(f * static_cast<double>(out.v[i]), f * static_cast<double>(out.v[n + i]));
}

/// Training target in network units: e / (s hx hy), laid out like the network output.
template <class T>
Tensor<T> error_target(const RegularGrid2D& g, std::span<const cplx> e, double s) {
  Tensor<T> t(2, g.ny, g.nx);
  const std::size_t n = g.size();
  const double f = s > 0.0 ? 1.0 / (s * g.hx * g.hy) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    t.v[i] = static_cast<T>(e[i].real() * f);
    t.v[n + i] = static_cast<T>(e[i].imag() * f);
  }
  return t;
}

template <class T>
Context<T> encoder_forward(const EncoderSolver<T>& net, const HelmholtzProblem& p) {
  return net.encode(medium_tensor<T>(p));
}

/// e = ||r||_inf hx hy SolverNet(r / ||r||_inf, gamma; ctx).
template <class T>
void solver_forward(const EncoderSolver<T>& net, const Context<T>& ctx, const AttenuationField& gamma,
                    std::span<const cplx> r, std::span<cplx> e) {
  const RegularGrid2D& g = gamma.grid;
  if (r.size() != g.size() || e.size() != g.size())
    throw std::invalid_argument("solver_forward: residual does not match the attenuation grid");
  const double s = norm_inf(r);
  if (s == 0.0) {
    std::fill(e.begin(), e.end(), cplx{});
    return;
  }
  const Tensor<T> out = net.solve(residual_tensor<T>(g, r, gamma, s), ctx);
  decode_error(g, out, s, e);
}

template <class T>
ComplexField solver_forward(const EncoderSolver<T>& net, const Context<T>& ctx, const AttenuationField& gamma,
                            const ComplexField& r) {
  require_same_grid(r.grid, gamma.grid, "solver_forward");
  ComplexField e(r.grid);
  solver_forward(net, ctx, gamma, r.values, e.values);
  return e;
}

/// M_VU: network estimate refined by one shifted-Laplacian V-cycle. Holds an immutable
/// snapshot of the weights and the context of one medium.
class MvuPreconditioner {
 public:
  MvuPreconditioner(const HelmholtzProblem& p, EncoderSolver<float> net, const VCycleConfig& cfg = {})
      : gamma_(p.gamma), net_(std::move(net)), vcycle_(p, cfg) {
    ctx_ = encoder_forward(net_, p);
  }

  void apply(std::span<const cplx> r, std::span<cplx> e) const {
    solver_forward(net_, ctx_, gamma_, r, e);
    vcycle_.apply(e, r, e);
  }

  [[nodiscard]] ComplexField apply(const ComplexField& r) const {
    ComplexField e(r.grid);
    apply(r.values, e.values);
    return e;
  }

  [[nodiscard]] LinearOperator as_operator() const {
    return [this](std::span<const cplx> r, std::span<cplx> e) { apply(r, e); };
  }

  [[nodiscard]] const EncoderSolver<float>& network() const { return net_; }
  [[nodiscard]] const Context<float>& context() const { return ctx_; }
  [[nodiscard]] const ShiftedLaplacianVCycle& vcycle() const { return vcycle_; }

 private:
  AttenuationField gamma_;
  EncoderSolver<float> net_;
  ShiftedLaplacianVCycle vcycle_;
  Context<float> ctx_;
};

inline ComplexField mvu_precondition(const HelmholtzProblem& p, const ComplexField& r, const Context<float>& ctx,
                                     const EncoderSolver<float>& net, const VCycleConfig& cfg = {}) {
  require_same_grid(p.grid(), r.grid, "mvu_precondition");
  ComplexField e = solver_forward(net, ctx, p.gamma, r);
  ShiftedLaplacianVCycle vc(p, cfg);
  vc.apply(e.values, r.values, e.values);
  return e;
}

}  // namespace wavekit::nn
