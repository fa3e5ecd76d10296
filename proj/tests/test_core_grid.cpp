#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "wavekit/core/field_io.hpp"
#include "wavekit/core/layout.hpp"
#include "wavekit/core/operators.hpp"
#include "wavekit/core/transfer.hpp"
#include "wavekit/krylov/dense.hpp"

namespace wk = wavekit;
using wk::cplx;
using namespace wavekit::testing;

namespace {

wk::HelmholtzProblem constant_problem(const wk::RegularGrid2D& g, double m, double omega,
                                      wk::AttenuationField gamma = {}) {
  if (gamma.values.empty()) gamma = wk::AttenuationField(g);
  return {wk::SlownessSquaredField(g, m), std::move(gamma), omega};
}

}  // namespace

TEST(RegularGrid, RejectsDegenerateGrids) {
  EXPECT_THROW(wk::RegularGrid2D(2, 5, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(wk::RegularGrid2D(5, 5, 0.0, 1.0), std::invalid_argument);
  wk::RegularGrid2D g(9, 5, 1.0, 2.0);
  EXPECT_EQ(g.size(), 45u);
  EXPECT_TRUE(g.coarsenable(2));
  EXPECT_FALSE(g.coarsenable(3));
}

TEST(SlownessField, RejectsNonPositive) {
  wk::RegularGrid2D g(4, 4, 1.0, 1.0);
  EXPECT_THROW(wk::SlownessSquaredField(g, 0.0), std::invalid_argument);
  EXPECT_THROW(wk::SlownessSquaredField(g, std::vector<double>(16, -1.0)), std::invalid_argument);
}

TEST(HelmholtzApply, ZeroMapsToZero) {
  wk::RegularGrid2D g(8, 8, 1.0, 1.0);
  auto p = constant_problem(g, 1.0, 0.7);
  wk::ComplexField u(g);
  for (const cplx& z : wk::helmholtz_apply(p, u).values) EXPECT_EQ(z, cplx{});
}

TEST(HelmholtzApply, MatchesDenseAssembly) {
  wk::RegularGrid2D g(8, 8, 1.0, 1.0);
  const double omega = 0.9;
  auto p = constant_problem(g, 1.0, omega);
  std::mt19937_64 rng(11);
  wk::ComplexField u(g, random_complex(g.size(), rng));
  auto hu = wk::helmholtz_apply(p, u);
  Eigen::MatrixXcd h = dense_shifted(g, p.m.values, p.gamma.values, omega);
  EXPECT_LT(rel(to_eigen(hu.values), h * to_eigen(u.values)), 1e-13);
}

TEST(HelmholtzApply, InteriorSpikeEqualsStencilRow) {
  const double h = 0.5, omega = 1.3;
  wk::RegularGrid2D g(7, 7, h, h);
  auto p = constant_problem(g, 1.0, omega);
  wk::ComplexField u(g);
  u(3, 3) = 1.0;
  auto hu = wk::helmholtz_apply(p, u);
  EXPECT_NEAR(hu(3, 3).real(), 4.0 / (h * h) - omega * omega, 1e-12);
  EXPECT_NEAR(hu(3, 3).imag(), 0.0, 1e-15);
  EXPECT_NEAR(hu(2, 3).real(), -1.0 / (h * h), 1e-12);
}

TEST(HelmholtzApply, ErrorsOnMismatchAndNonFinite) {
  wk::RegularGrid2D g(8, 8, 1.0, 1.0), other(9, 8, 1.0, 1.0);
  auto p = constant_problem(g, 1.0, 1.0);
  EXPECT_THROW(wk::helmholtz_apply(p, wk::ComplexField(other)), std::invalid_argument);
  wk::ComplexField bad(g);
  bad.values[5] = cplx(std::nan(""), 0.0);
  EXPECT_THROW(wk::helmholtz_apply(p, bad), std::invalid_argument);
}

TEST(ShiftedLaplacian, CoincidesWithHelmholtzWithoutShift) {
  wk::RegularGrid2D g(9, 7, 1.0, 1.5);
  std::mt19937_64 rng(3);
  wk::HelmholtzProblem p(wk::SlownessSquaredField(g, random_linear_m(g, rng)), wk::AttenuationField(g),
                         2000.0 * 0.4);
  wk::ComplexField u(g, random_complex(g.size(), rng));
  auto a = wk::helmholtz_apply(p, u);
  auto b = wk::shifted_laplacian_apply(p, 1.0, 0.0, u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.values[i], b.values[i]);
}

TEST(ShiftedLaplacian, MatchesDenseAssembly) {
  wk::RegularGrid2D g(8, 8, 10.0, 10.0);
  std::mt19937_64 rng(5);
  auto m = random_linear_m(g, rng);
  auto gamma = wk::absorbing_layer(g, 2);
  const double omega = 2 * M_PI * 8.0;
  wk::HelmholtzProblem p(wk::SlownessSquaredField(g, m), gamma, omega);
  wk::ComplexField u(g, random_complex(g.size(), rng));
  auto su = wk::shifted_laplacian_apply(p, 1.0, 0.5, u);
  Eigen::MatrixXcd s = dense_shifted(g, m, gamma.values, omega, 1.0, 0.5);
  EXPECT_LT(rel(to_eigen(su.values), s * to_eigen(u.values)), 1e-13);
}

TEST(HelmholtzApply, IsLinear) {
  wk::RegularGrid2D g(11, 9, 1.0, 1.0);
  std::mt19937_64 rng(17);
  auto gamma = wk::absorbing_layer(g, 2);
  wk::HelmholtzProblem p(wk::SlownessSquaredField(g, 0.8), gamma, 1.1);
  for (int trial = 0; trial < 10; ++trial) {
    wk::ComplexField u(g, random_complex(g.size(), rng)), v(g, random_complex(g.size(), rng));
    const cplx a(rng() % 7 - 3.0, 0.5), b(-1.25, rng() % 5 - 2.0);
    wk::ComplexField w(g);
    for (std::size_t i = 0; i < w.size(); ++i) w.values[i] = a * u.values[i] + b * v.values[i];
    auto lhs = wk::helmholtz_apply(p, w);
    auto hu = wk::helmholtz_apply(p, u), hv = wk::helmholtz_apply(p, v);
    std::vector<cplx> rhs(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) rhs[i] = a * hu.values[i] + b * hv.values[i];
    EXPECT_LT(wk::relative_error(lhs.values, rhs), 1e-13);
    auto sl = wk::shifted_laplacian_apply(p, 1.0, 0.5, w);
    auto su = wk::shifted_laplacian_apply(p, 1.0, 0.5, u), sv = wk::shifted_laplacian_apply(p, 1.0, 0.5, v);
    for (std::size_t i = 0; i < w.size(); ++i) rhs[i] = a * su.values[i] + b * sv.values[i];
    EXPECT_LT(wk::relative_error(sl.values, rhs), 1e-13);
  }
}

TEST(HelmholtzAssembly, SymmetryProperties) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 6; ++trial) {
    const int nx = 4 + static_cast<int>(rng() % 13), ny = 4 + static_cast<int>(rng() % 13);
    wk::RegularGrid2D g(nx, ny, 5.0 + rng() % 10, 5.0 + rng() % 10);
    auto m = random_linear_m(g, rng);
    auto h = wk::assemble_dense(wk::helmholtz_operator(
        wk::HelmholtzProblem(wk::SlownessSquaredField(g, m), wk::AttenuationField(g), 30.0)));
    EXPECT_EQ((h - h.transpose()).norm(), 0.0);
    auto gamma = wk::absorbing_layer(g, std::min(nx, ny) / 4);
    auto ha = wk::assemble_dense(
        wk::helmholtz_operator(wk::HelmholtzProblem(wk::SlownessSquaredField(g, m), gamma, 30.0)));
    Eigen::MatrixXd re = ha.real(), im = ha.imag();
    EXPECT_EQ((re - re.transpose()).norm(), 0.0);
    EXPECT_EQ((im - im.transpose()).norm(), 0.0);
  }
}

TEST(AbsorbingLayer, ZeroThicknessIsZero) {
  wk::RegularGrid2D g(16, 12, 1.0, 1.0);
  auto gamma = wk::absorbing_layer(g, 0);
  for (double v : gamma.values) EXPECT_EQ(v, 0.0);
}

TEST(AbsorbingLayer, RampShapeAndEdges) {
  wk::RegularGrid2D g(32, 32, 1.0, 1.0);
  auto gamma = wk::absorbing_layer(g, 8);
  EXPECT_DOUBLE_EQ(gamma(4, 16), 0.25);
  EXPECT_DOUBLE_EQ(gamma(16, 16), 0.0);
  for (int ix = 0; ix < g.nx; ++ix) {
    EXPECT_EQ(gamma(ix, 0), 0.0);
    EXPECT_EQ(gamma(ix, g.ny - 1), 1.0);
  }
  EXPECT_EQ(*std::max_element(gamma.values.begin(), gamma.values.end()), 1.0);
  EXPECT_THROW(wk::absorbing_layer(g, 16), std::invalid_argument);
  EXPECT_THROW(wk::absorbing_layer(g, -1), std::invalid_argument);
}

TEST(PointSource, DeltaScaling) {
  wk::RegularGrid2D g(9, 9, 10.0, 10.0);
  auto a = wk::point_source(g, 40), b = wk::point_source(g, 41);
  EXPECT_DOUBLE_EQ(a.values[40].real(), 0.01);
  cplx sum{};
  for (const cplx& z : a.values) sum += z;
  EXPECT_NEAR(sum.real() * g.hx * g.hy, 1.0, 1e-15);
  EXPECT_EQ(wk::dot(a.values, b.values), cplx{});
  EXPECT_THROW(wk::point_source(g, 81), std::out_of_range);
}

TEST(GridForFrequency, TenPointsPerWavelength) {
  auto g = wk::grid_for_frequency(5.0, 1500.0, {1920.0, 960.0});
  EXPECT_LE(g.hx, 30.0 + 1e-12);
  EXPECT_LE(g.hy, 30.0 + 1e-12);
  EXPECT_EQ(g.nx, 65);
  EXPECT_EQ(g.ny, 33);
  EXPECT_TRUE(g.coarsenable(2));
  auto g2 = wk::grid_for_frequency(10.0, 1500.0, {1920.0, 960.0});
  EXPECT_GE(g2.nx - 1, 2 * (g.nx - 1));
  auto odd = wk::grid_for_frequency(3.3, 1700.0, {1234.0, 777.0});
  EXPECT_LE(odd.hx, 1700.0 / 33.0);
  EXPECT_TRUE(odd.coarsenable(2));
  EXPECT_THROW(wk::grid_for_frequency(0.0, 1500.0, {1.0, 1.0}), std::invalid_argument);
}

TEST(GridForFrequency, SpacingHalvesWhenFrequencyDoubles) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> f(1.0, 8.0), len(500.0, 5000.0);
  for (int t = 0; t < 50; ++t) {
    const double fr = f(rng);
    const wk::Extent e{len(rng), len(rng)};
    auto a = wk::grid_for_frequency(fr, 1500.0, e), b = wk::grid_for_frequency(2 * fr, 1500.0, e);
    EXPECT_LE(b.hx, 1500.0 / (2 * fr * 10) * (1 + 1e-12));
    EXPECT_LE(b.hx, a.hx);
    EXPECT_TRUE(b.coarsenable(2));
  }
}

TEST(Transfer, RestrictPreservesConstants) {
  wk::RegularGrid2D g(17, 9, 1.0, 1.0);
  wk::ComplexField u(g);
  for (auto& z : u.values) z = cplx(2.5, -1.0);
  auto c = wk::restrict_field(u);
  EXPECT_EQ(c.grid.nx, 9);
  EXPECT_EQ(c.grid.ny, 5);
  for (const cplx& z : c.values) EXPECT_NEAR(std::abs(z - cplx(2.5, -1.0)), 0.0, 1e-14);
  auto back = wk::restrict_field(wk::prolong_field(c));
  for (const cplx& z : back.values) EXPECT_NEAR(std::abs(z - cplx(2.5, -1.0)), 0.0, 1e-14);
}

TEST(Transfer, ProlongOfZeroIsZero) {
  wk::ComplexField c(wk::RegularGrid2D(5, 5, 2.0, 2.0));
  for (const cplx& z : wk::prolong_field(c).values) EXPECT_EQ(z, cplx{});
}

TEST(Transfer, RestrictionIsScaledAdjointOfProlongation) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 5; ++t) {
    const int nxc = 3 + static_cast<int>(rng() % 8), nyc = 3 + static_cast<int>(rng() % 8);
    wk::RegularGrid2D fine(2 * nxc - 1, 2 * nyc - 1, 1.0, 1.0);
    const auto coarse = fine.coarsened();
    wk::ComplexField u(fine, random_complex(fine.size(), rng));
    wk::ComplexField v(coarse, random_complex(coarse.size(), rng));
    const cplx lhs = wk::grid_inner(coarse, wk::restrict_field(u).values, v.values);
    const cplx rhs = 0.25 * wk::grid_inner(fine, u.values, wk::prolong_field(v).values);
    EXPECT_LT(std::abs(lhs - rhs) / std::abs(rhs), 1e-13);
  }
}

TEST(Transfer, NonCoarsenableThrows) {
  wk::ComplexField u(wk::RegularGrid2D(8, 9, 1.0, 1.0));
  EXPECT_THROW(wk::restrict_field(u), std::invalid_argument);
}

TEST(Resampler, TransposeIdentityAndExactOnLinear) {
  wk::RegularGrid2D a(17, 9, 30.0, 30.0), b(33, 17, 15.0, 15.0), c(29, 13, 480.0 / 28, 240.0 / 12);
  std::mt19937_64 rng(1);
  wk::BilinearResampler ab(a, b);
  std::vector<double> lin(a.size());
  for (int y = 0; y < a.ny; ++y)
    for (int x = 0; x < a.nx; ++x) lin[a.index(x, y)] = 3.0 + 0.1 * x * a.hx - 0.2 * y * a.hy;
  auto fb = ab.apply(lin);
  for (int y = 0; y < b.ny; ++y)
    for (int x = 0; x < b.nx; ++x)
      EXPECT_NEAR(fb[b.index(x, y)], 3.0 + 0.1 * x * b.hx - 0.2 * y * b.hy, 1e-10);
  wk::BilinearResampler ac(a, c);
  auto u = random_real(a.size(), rng), v = random_real(c.size(), rng);
  EXPECT_NEAR(wk::dot(ac.apply(u), v), wk::dot(u, ac.apply_transpose(v)), 1e-10);
}

TEST(Layout, SamplingAndAdjoint) {
  wk::RegularGrid2D g(9, 7, 1.0, 1.0);
  wk::SourceReceiverLayout layout(g, {1, 2}, {3, 10, 20, 40});
  wk::ComplexField ones(g);
  for (auto& z : ones.values) z = 1.0;
  auto d = wk::sample_at_receivers(ones, layout);
  ASSERT_EQ(d.size(), 4u);
  for (const cplx& z : d) EXPECT_EQ(z, cplx(1.0));
  std::mt19937_64 rng(4);
  wk::ComplexField u(g, random_complex(g.size(), rng));
  auto dd = random_complex(4, rng);
  const cplx lhs = wk::dot(wk::sample_at_receivers(u, layout), dd);
  const cplx rhs = wk::dot(u.values, wk::scatter_from_receivers(dd, layout).values);
  EXPECT_LT(std::abs(lhs - rhs) / std::abs(rhs), 1e-13);
  wk::SourceReceiverLayout single(g, {0}, {17});
  EXPECT_EQ(wk::sample_at_receivers(u, single)[0], u.values[17]);
  EXPECT_THROW(wk::SourceReceiverLayout(g, {0}, {63}), std::out_of_range);
  EXPECT_TRUE(layout.full_coverage());
}

TEST(FieldIo, HeaderLayoutAndRoundTrip) {
  wk::RegularGrid2D g(5, 3, 12.5, 7.0);
  std::mt19937_64 rng(8);
  wk::ComplexField u(g, random_complex(g.size(), rng));
  std::stringstream ss;
  wk::write_field(ss, u);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 32u + 16u * g.size());
  EXPECT_EQ(bytes.substr(0, 4), "WKF1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 5);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3);
  EXPECT_EQ(bytes[28], 1);
  auto back = wk::read_complex_field(ss);
  EXPECT_EQ(back.grid, g);
  EXPECT_EQ(back.values, u.values);

  wk::RealField r(g, random_real(g.size(), rng));
  std::stringstream sr;
  wk::write_field(sr, r);
  EXPECT_EQ(sr.str().size(), 32u + 8u * g.size());
  EXPECT_EQ(wk::read_real_field(sr).values, r.values);

  std::stringstream junk("XXXX0000000000000000000000000000");
  EXPECT_THROW(wk::read_field(junk), std::runtime_error);
}
