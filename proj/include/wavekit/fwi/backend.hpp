#pragma once

#include <functional>
#include <memory>
#include <string>

#include "wavekit/krylov/dense.hpp"
#include "wavekit/krylov/solve.hpp"
#include "wavekit/nn/preconditioner.hpp"

namespace wavekit::fwi {

/// Iteration and time totals over a group of solves.
struct SolveStats {
  long iterations = 0;
  int solves = 0;
  int capped = 0;
  double seconds = 0.0;

  void add(const SolveReport& r) {
    iterations += r.iterations;
    ++solves;
    if (!r.converged) ++capped;
    seconds += r.wall_time;
  }
  SolveStats& operator+=(const SolveStats& o) {
    iterations += o.iterations;
    solves += o.solves;
    capped += o.capped;
    seconds += o.seconds;
    return *this;
  }
};

/// Solves with H(m, omega) and its adjoint for one medium and frequency. Const methods may be
/// called concurrently.
class FrequencySolver {
 public:
  virtual ~FrequencySolver() = default;
  virtual std::pair<ComplexField, SolveReport> forward(const ComplexField& rhs, double tol) const = 0;
  virtual std::pair<ComplexField, SolveReport> adjoint(const ComplexField& rhs, double tol) const = 0;
};

using SolverFactory = std::function<std::unique_ptr<FrequencySolver>(const HelmholtzProblem&)>;

/// Direct solves by dense LU; exact up to round-off. For small grids and oracles.
class DenseFrequencySolver : public FrequencySolver {
 public:
  explicit DenseFrequencySolver(const HelmholtzProblem& p) : grid_(p.grid()), lu_(helmholtz_operator(p)) {}

  std::pair<ComplexField, SolveReport> forward(const ComplexField& rhs, double) const override {
    require_same_grid(grid_, rhs.grid, "DenseFrequencySolver");
    ComplexField x(grid_);
    lu_.solve(rhs.values, x.values);
    SolveReport r;
    r.converged = true;
    return {std::move(x), r};
  }

  std::pair<ComplexField, SolveReport> adjoint(const ComplexField& rhs, double tol) const override {
    ComplexField c(rhs.grid, conj(rhs.values));
    auto [y, r] = forward(c, tol);
    for (cplx& z : y.values) z = std::conj(z);
    return {std::move(y), r};
  }

 private:
  RegularGrid2D grid_;
  DenseLu lu_;
};

/// FGMRES with either the shifted-Laplacian V-cycle or M_VU. A capped solve is returned with
/// converged = false when `allow_cap` is set and raises SolverError otherwise.
class KrylovFrequencySolver : public FrequencySolver {
 public:
  KrylovFrequencySolver(const HelmholtzProblem& p, std::shared_ptr<const nn::EncoderSolver<float>> net,
                        int max_iter, bool allow_cap, const VCycleConfig& vc = {})
      : problem_(p), max_iter_(max_iter), allow_cap_(allow_cap) {
    if (net) {
      mvu_ = std::make_unique<nn::MvuPreconditioner>(p, *net, vc);
      precond_ = mvu_->as_operator();
    } else {
      vcycle_ = std::make_unique<ShiftedLaplacianVCycle>(p, vc);
      precond_ = as_preconditioner(*vcycle_);
    }
  }

  std::pair<ComplexField, SolveReport> forward(const ComplexField& rhs, double tol) const override {
    return check(solve_forward(problem_, rhs, precond_, {tol, max_iter_, 30}));
  }

  std::pair<ComplexField, SolveReport> adjoint(const ComplexField& rhs, double tol) const override {
    return check(solve_adjoint(problem_, rhs, precond_, {tol, max_iter_, 30}));
  }

 private:
  std::pair<ComplexField, SolveReport> check(std::pair<ComplexField, SolveReport> r) const {
    if (!r.second.converged && !allow_cap_) {
      throw SolverError("FGMRES reached the cap of " + std::to_string(max_iter_) + " iterations (relres " +
                        std::to_string(r.second.achieved_relres) + ")",
                        r.second);
    }
    return r;
  }

  HelmholtzProblem problem_;
  int max_iter_;
  bool allow_cap_;
  std::unique_ptr<nn::MvuPreconditioner> mvu_;
  std::unique_ptr<ShiftedLaplacianVCycle> vcycle_;
  LinearOperator precond_;
};

inline SolverFactory dense_factory() {
  return [](const HelmholtzProblem& p) { return std::make_unique<DenseFrequencySolver>(p); };
}

/// `net` is read at every call, so swapping the pointed-to snapshot changes later solvers.
inline SolverFactory krylov_factory(const std::shared_ptr<const nn::EncoderSolver<float>>* net, int max_iter,
                                    bool allow_cap) {
  return [net, max_iter, allow_cap](const HelmholtzProblem& p) {
    return std::make_unique<KrylovFrequencySolver>(p, net ? *net : nullptr, max_iter, allow_cap);
  };
}

}  // namespace wavekit::fwi
