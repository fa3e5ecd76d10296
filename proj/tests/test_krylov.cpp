#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "wavekit/core/operators.hpp"
#include "wavekit/krylov/fgmres.hpp"
#include "wavekit/krylov/multigrid.hpp"
#include "wavekit/krylov/solve.hpp"

namespace wk = wavekit;
using wk::cplx;
using namespace wavekit::testing;

namespace {

wk::HelmholtzProblem layered_problem(int nx, int ny, double h, double f, std::uint64_t seed) {
  wk::RegularGrid2D g(nx, ny, h, h);
  std::mt19937_64 rng(seed);
  return {wk::SlownessSquaredField(g, random_linear_m(g, rng)), wk::absorbing_layer(g),
          wk::angular_frequency(f)};
}

}  // namespace

TEST(VCycle, ReducesShiftedLaplacianResidual) {
  auto p = layered_problem(33, 33, 20.0, 5.0, 1);
  wk::ShiftedLaplacianVCycle vc(p, {});
  auto s = wk::shifted_laplacian_operator(p, 1.0, 0.5);
  std::mt19937_64 rng(2);
  wk::cvec r = random_complex(p.grid().size(), rng);
  auto e = vc.apply(r);
  wk::cvec res(r.size());
  s.residual(r, e, res);
  EXPECT_LT(wk::norm2(res) / wk::norm2(r), 0.5);
}

TEST(VCycle, ZeroResidualKeepsInitialGuessFixedPoint) {
  auto p = layered_problem(17, 17, 20.0, 4.0, 3);
  wk::VCycleConfig cfg;
  std::mt19937_64 rng(4);
  Eigen::MatrixXcd s = dense_shifted(p.grid(), p.m.values, p.gamma.values, p.omega, cfg.alpha, cfg.beta);
  wk::cvec x = random_complex(p.grid().size(), rng);
  wk::cvec b = from_eigen(s * to_eigen(x));
  wk::ComplexField e0(p.grid(), x), r(p.grid(), b);
  auto e = wk::vcycle(p, cfg, e0, r);
  EXPECT_LT(wk::relative_error(e.values, x), 1e-10);
}

TEST(VCycle, RejectsUncoarsenableGrid) {
  auto p = layered_problem(19, 17, 20.0, 4.0, 3);
  EXPECT_THROW(wk::ShiftedLaplacianVCycle(p, {}), std::invalid_argument);
  wk::VCycleConfig bad;
  bad.jacobi_weight = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Fgmres, IdentityConvergesInOneIteration) {
  std::mt19937_64 rng(5);
  auto b = random_complex(50, rng);
  wk::cvec x(50);
  auto ident = [](std::span<const cplx> in, std::span<cplx> out) { std::copy(in.begin(), in.end(), out.begin()); };
  auto rep = wk::fgmres(ident, {}, b, x, {1e-12, 10, 5});
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 1);
  EXPECT_LT(wk::relative_error(x, b), 1e-14);
}

TEST(Fgmres, ZeroRhsReturnsZero) {
  wk::cvec b(20), x(20, cplx(1.0, 1.0));
  auto ident = [](std::span<const cplx> in, std::span<cplx> out) { std::copy(in.begin(), in.end(), out.begin()); };
  auto rep = wk::fgmres(ident, {}, b, x, {});
  EXPECT_EQ(rep.iterations, 0);
  EXPECT_TRUE(rep.converged);
  for (const cplx& z : x) EXPECT_EQ(z, cplx{});
}

TEST(Fgmres, MatchesDenseSolveWithoutPreconditioner) {
  auto p = layered_problem(9, 9, 25.0, 3.0, 6);
  auto h = wk::helmholtz_operator(p);
  Eigen::MatrixXcd hd = dense_shifted(p.grid(), p.m.values, p.gamma.values, p.omega);
  std::mt19937_64 rng(7);
  auto b = random_complex(p.grid().size(), rng);
  wk::cvec x(b.size());
  auto rep = wk::fgmres(wk::as_operator(h), {}, b, x, {1e-10, 500, 200});
  ASSERT_TRUE(rep.converged);
  Eigen::VectorXcd ref = hd.partialPivLu().solve(to_eigen(b));
  EXPECT_LT(rel(to_eigen(x), ref), 1e-8);
  for (std::size_t i = 1; i < rep.residual_history.size(); ++i)
    EXPECT_LE(rep.residual_history[i], rep.residual_history[i - 1] * (1 + 1e-12));
}

TEST(Fgmres, StopsAtIterationCap) {
  auto p = layered_problem(33, 33, 10.0, 20.0, 8);
  auto h = wk::helmholtz_operator(p);
  std::mt19937_64 rng(9);
  auto b = random_complex(p.grid().size(), rng);
  wk::cvec x(b.size());
  auto rep = wk::fgmres(wk::as_operator(h), {}, b, x, {1e-12, 40, 30});
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.iterations, 40);
  EXPECT_EQ(rep.residual_history.size(), 40u);
  EXPECT_GT(rep.achieved_relres, 1e-12);
}

TEST(Fgmres, NonFiniteOperatorOutputThrows) {
  wk::cvec b(10, cplx(1.0)), x(10);
  auto bad = [](std::span<const cplx>, std::span<cplx> out) {
    std::fill(out.begin(), out.end(), cplx(std::nan(""), 0.0));
  };
  EXPECT_THROW(wk::fgmres(bad, {}, b, x, {}), wk::SolverError);
}

TEST(Fgmres, VCyclePreconditionedSolveMatchesDense) {
  auto p = layered_problem(33, 17, 30.0, 5.0, 10);
  wk::ShiftedLaplacianVCycle vc(p, {});
  std::mt19937_64 rng(11);
  wk::ComplexField b(p.grid(), random_complex(p.grid().size(), rng));
  auto [x, rep] = wk::solve_forward(p, b, wk::as_preconditioner(vc), {1e-9, 300, 30});
  ASSERT_TRUE(rep.converged);
  Eigen::MatrixXcd hd = dense_shifted(p.grid(), p.m.values, p.gamma.values, p.omega);
  Eigen::VectorXcd ref = hd.partialPivLu().solve(to_eigen(b.values));
  EXPECT_LT(rel(to_eigen(x.values), ref), 1e-7);
  auto [y, rep_none] = wk::solve_forward(p, b, {}, {1e-9, 300, 30});
  EXPECT_LT(rep.iterations, rep_none.iterations);
}

TEST(Solve, AdjointMatchesConjugateTransposeSolve) {
  auto p = layered_problem(17, 17, 30.0, 4.0, 12);
  wk::ShiftedLaplacianVCycle vc(p, {});
  std::mt19937_64 rng(13);
  wk::ComplexField b(p.grid(), random_complex(p.grid().size(), rng));
  auto [y, rep] = wk::solve_adjoint(p, b, wk::as_preconditioner(vc), {1e-10, 300, 30});
  ASSERT_TRUE(rep.converged);
  Eigen::MatrixXcd hd = dense_shifted(p.grid(), p.m.values, p.gamma.values, p.omega);
  Eigen::VectorXcd ref = hd.adjoint().partialPivLu().solve(to_eigen(b.values));
  EXPECT_LT(rel(to_eigen(y.values), ref), 1e-8);

  // <H^{-1} a, c> = <a, H^{-*} c>
  wk::ComplexField a(p.grid(), random_complex(p.grid().size(), rng));
  auto [u, rep2] = wk::solve_forward(p, a, wk::as_preconditioner(vc), {1e-10, 300, 30});
  const cplx lhs = wk::dot(u.values, b.values), rhs = wk::dot(a.values, y.values);
  EXPECT_LT(std::abs(lhs - rhs) / std::abs(lhs), 1e-8);
}

TEST(Solve, RejectsGridMismatchAndNonFinite) {
  auto p = layered_problem(17, 17, 30.0, 4.0, 12);
  wk::ComplexField other(wk::RegularGrid2D(9, 9, 1.0, 1.0));
  EXPECT_THROW(wk::solve_forward(p, other, {}), std::invalid_argument);
  wk::ComplexField bad(p.grid());
  bad.values[3] = cplx(0.0, std::numeric_limits<double>::infinity());
  EXPECT_THROW(wk::solve_forward(p, bad, {}), std::invalid_argument);
}

TEST(Solve, CsvRowWithoutTimingIsDeterministic) {
  wk::SolveRecord r;
  r.solve_id = "0:1:2";
  r.kind = wk::SolveKind::Adjoint;
  r.omega = 12.5;
  r.tol = 1e-4;
  r.report.iterations = 17;
  r.report.achieved_relres = 5e-5;
  r.report.wall_time = 0.123;
  std::ostringstream os;
  wk::write_solve_csv_header(os);
  wk::write_solve_csv_row(os, r, false);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "solve_id,kind,omega,tol,iterations,relres,seconds");
  EXPECT_NE(s.find("0:1:2,adjoint,"), std::string::npos);
  EXPECT_EQ(s.substr(s.size() - 10), ",0.000000\n");
}

TEST(Solve, ZeroRhsGivesZeroWithoutIterations) {
  auto p = layered_problem(17, 17, 30.0, 4.0, 14);
  auto [x, rep] = wk::solve_forward(p, wk::ComplexField(p.grid()), {});
  EXPECT_EQ(rep.iterations, 0);
  for (const cplx& z : x.values) EXPECT_EQ(z, cplx{});
  auto [y, rep2] = wk::solve_adjoint(p, wk::ComplexField(p.grid()), {});
  EXPECT_EQ(rep2.iterations, 0);
}

TEST(Solve, ConjugationIdentityAndTrueResidual) {
  auto p = layered_problem(17, 17, 30.0, 4.0, 15);
  wk::ShiftedLaplacianVCycle vc(p, {});
  std::mt19937_64 rng(16);
  wk::ComplexField b(p.grid(), random_complex(p.grid().size(), rng));
  for (double tol : {wk::kForwardTol, wk::kSensitivityTol}) {
    auto [x, rep] = wk::solve_forward(p, b, wk::as_preconditioner(vc), {tol, 300, 30});
    ASSERT_TRUE(rep.converged);
    wk::ComplexField cb(p.grid(), wk::conj(b.values));
    auto [y, rep2] = wk::solve_adjoint(p, cb, wk::as_preconditioner(vc), {tol, 300, 30});
    EXPECT_LT(wk::relative_error(wk::conj(y.values), x.values), 10 * tol);
    auto hx = wk::helmholtz_apply(p, x);
    wk::cvec r(b.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b.values[i] - hx.values[i];
    EXPECT_LE(wk::norm2(r) / wk::norm2(b.values), 1.01 * tol);
    Eigen::MatrixXcd hd = dense_shifted(p.grid(), p.m.values, p.gamma.values, p.omega);
    Eigen::VectorXcd ref = hd.partialPivLu().solve(to_eigen(b.values));
    EXPECT_LT(rel(to_eigen(x.values), ref), 10 * tol) << "tol " << tol;
  }
}

TEST(Solve, ConstantMediumVCycleIterationsRegression) {
  wk::RegularGrid2D g(65, 65, 20.0, 20.0);
  wk::HelmholtzProblem p(wk::SlownessSquaredField(g, 1.0 / (2000.0 * 2000.0)), wk::absorbing_layer(g),
                         wk::angular_frequency(8.0));
  wk::ShiftedLaplacianVCycle vc(p, {});
  auto b = wk::point_source(g, g.index(32, 8));
  auto [x, rep] = wk::solve_forward(p, b, wk::as_preconditioner(vc), {1e-6, 500, 30});
  EXPECT_TRUE(rep.converged);
  EXPECT_LT(rep.iterations, 500);
  RecordProperty("vcycle_iterations", rep.iterations);
}
