#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavekit/core/vec.hpp"

namespace wavekit {

struct SolveReport {
  int iterations = 0;
  double achieved_relres = 0.0;
  bool converged = false;
  double wall_time = 0.0;
  /// Arnoldi residual estimates ||b - A x_j|| / ||b||, one per iteration.
  std::vector<double> residual_history;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, SolveReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  [[nodiscard]] const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

/// y = Op(x). Preconditioners may be nonlinear and vary between calls.
using LinearOperator = std::function<void(std::span<const cplx>, std::span<cplx>)>;

struct FgmresOptions {
  double tol = 1e-6;
  int max_iter = 300;
  int restart = 30;
};

/// Right-preconditioned flexible GMRES with restarts. Stops when the true relative residual
/// ||b - A x|| / ||b|| <= tol or after max_iter operator applications.  An empty `precond`
/// means no preconditioning.
inline SolveReport fgmres(const LinearOperator& apply, const LinearOperator& precond,
                          std::span<const cplx> b, std::span<cplx> x, const FgmresOptions& opt) {
  if (!(opt.tol > 0.0)) throw std::invalid_argument("fgmres: tol must be positive");
  if (opt.restart < 1) throw std::invalid_argument("fgmres: restart must be >= 1");
  if (opt.max_iter < 0) throw std::invalid_argument("fgmres: max_iter must be >= 0");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  SolveReport rep;
  auto finish = [&](double relres) {
    rep.achieved_relres = relres;
    rep.converged = relres <= opt.tol;
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  };

  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), cplx{});
    return finish(0.0);
  }

  const int m = opt.restart;
  std::vector<cvec> V(m + 1, cvec(n)), Z(m, cvec(n));
  std::vector<cvec> H(m + 1, cvec(m));
  std::vector<double> cs(m);
  cvec sn(m), g(m + 1), y(m);
  cvec r(n), w(n);

  auto check_finite = [&](std::span<const cplx> v, const char* what) {
    for (const cplx& z : v) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        finish(std::numeric_limits<double>::quiet_NaN());
        throw SolverError(std::string("fgmres: non-finite values from ") + what, rep);
      }
    }
  };

  while (true) {
    apply(x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    check_finite(r, "operator");
    const double beta = norm2(r);
    const double relres = beta / bnorm;
    if (relres <= opt.tol || rep.iterations >= opt.max_iter) return finish(relres);

    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), cplx{});
    g[0] = beta;
    int k = 0;  // columns built in this cycle
    for (int j = 0; j < m && rep.iterations < opt.max_iter; ++j) {
      if (precond) {
        precond(V[j], Z[j]);
        check_finite(Z[j], "preconditioner");
      } else {
        Z[j] = V[j];
      }
      apply(Z[j], w);
      check_finite(w, "operator");
      ++rep.iterations;
      for (int i = 0; i <= j; ++i) {
        H[i][j] = dot(V[i], w);
        for (std::size_t q = 0; q < n; ++q) w[q] -= H[i][j] * V[i][q];
      }
      const double hnext = norm2(w);
      H[j + 1][j] = hnext;

      for (int i = 0; i < j; ++i) {
        const cplx a = H[i][j], c = H[i + 1][j];
        H[i][j] = cs[i] * a + sn[i] * c;
        H[i + 1][j] = -std::conj(sn[i]) * a + cs[i] * c;
      }
      const cplx a = H[j][j];
      const double bj = std::abs(H[j + 1][j]);
      const double t = std::hypot(std::abs(a), bj);
      if (t == 0.0) {
        cs[j] = 1.0;
        sn[j] = 0.0;
      } else if (std::abs(a) == 0.0) {
        cs[j] = 0.0;
        sn[j] = std::conj(H[j + 1][j]) / t;
      } else {
        cs[j] = std::abs(a) / t;
        sn[j] = (a / std::abs(a)) * std::conj(H[j + 1][j]) / t;
      }
      H[j][j] = cs[j] * a + sn[j] * H[j + 1][j];
      H[j + 1][j] = 0.0;
      g[j + 1] = -std::conj(sn[j]) * g[j];
      g[j] = cs[j] * g[j];
      k = j + 1;

      const double est = std::abs(g[j + 1]) / bnorm;
      rep.residual_history.push_back(est);
      if (hnext == 0.0 || est <= opt.tol) break;
      for (std::size_t q = 0; q < n; ++q) V[j + 1][q] = w[q] / hnext;
    }

    for (int i = k - 1; i >= 0; --i) {
      cplx s = g[i];
      for (int l = i + 1; l < k; ++l) s -= H[i][l] * y[l];
      if (H[i][i] == cplx{}) {
        finish(std::numeric_limits<double>::quiet_NaN());
        throw SolverError("fgmres: singular Hessenberg system", rep);
      }
      y[i] = s / H[i][i];
    }
    for (int i = 0; i < k; ++i)
      for (std::size_t q = 0; q < n; ++q) x[q] += y[i] * Z[i][q];
  }
}

}  // namespace wavekit
