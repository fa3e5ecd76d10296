#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "wavekit/core/operators.hpp"
#include "wavekit/krylov/fgmres.hpp"
#include "wavekit/krylov/multigrid.hpp"

namespace wavekit {

/// Tolerance for data simulation and misfit evaluation.
inline constexpr double kForwardTol = 1e-6;
/// Tolerance for sensitivity (Jacobian / adjoint) solves.
inline constexpr double kSensitivityTol = 1e-4;

struct SolveOptions {
  double tol = kForwardTol;
  int max_iter = 300;
  int restart = 30;
};

inline LinearOperator as_operator(const StencilOperator& op) {
  return [&op](std::span<const cplx> in, std::span<cplx> out) { op.apply(in, out); };
}

inline LinearOperator as_preconditioner(const ShiftedLaplacianVCycle& vc) {
  return [&vc](std::span<const cplx> r, std::span<cplx> e) {
    std::fill(e.begin(), e.end(), cplx{});
    vc.apply(e, r, e);
  };
}

/// Solve H x = rhs with FGMRES from a zero initial guess.
inline std::pair<ComplexField, SolveReport> solve_forward(const HelmholtzProblem& p,
                                                          const ComplexField& rhs,
                                                          const LinearOperator& precond,
                                                          const SolveOptions& opt = {}) {
  require_same_grid(p.grid(), rhs.grid, "solve_forward");
  require_finite(rhs.values, "solve_forward");
  const StencilOperator h = helmholtz_operator(p);
  ComplexField x(p.grid());
  SolveReport rep = fgmres(as_operator(h), precond, rhs.values, x.values,
                           {opt.tol, opt.max_iter, opt.restart});
  return {std::move(x), std::move(rep)};
}

/// Solve H^* x = rhs through the conjugated forward system H conj(x) = conj(rhs), which holds
/// because the real and imaginary parts of H are each symmetric. Uses the same
/// preconditioner as the forward solve.
inline std::pair<ComplexField, SolveReport> solve_adjoint(const HelmholtzProblem& p,
                                                          const ComplexField& rhs,
                                                          const LinearOperator& precond,
                                                          const SolveOptions& opt = {}) {
  ComplexField crhs(rhs.grid, conj(rhs.values));
  auto [y, rep] = solve_forward(p, crhs, precond, opt);
  for (cplx& z : y.values) z = std::conj(z);
  return {std::move(y), std::move(rep)};
}

enum class SolveKind { Forward, Adjoint };

inline const char* to_string(SolveKind k) { return k == SolveKind::Forward ? "forward" : "adjoint"; }

struct SolveRecord {
  std::string solve_id;
  SolveKind kind = SolveKind::Forward;
  double omega = 0.0;
  double tol = 0.0;
  SolveReport report;
};

inline void write_solve_csv_header(std::ostream& os) {
  os << "solve_id,kind,omega,tol,iterations,relres,seconds\n";
}

/// One CSV row; `with_timing = false` writes 0 seconds so reruns are byte-identical.
inline void write_solve_csv_row(std::ostream& os, const SolveRecord& r, bool with_timing = true) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.3g,%d,%.6e,%.6f\n", r.solve_id.c_str(),
                to_string(r.kind), r.omega, r.tol, r.report.iterations, r.report.achieved_relres,
                with_timing ? r.report.wall_time : 0.0);
  os << buf;
}

}  // namespace wavekit
