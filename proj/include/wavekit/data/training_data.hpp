#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavekit/core/field_io.hpp"
#include "wavekit/core/operators.hpp"
#include "wavekit/krylov/fgmres.hpp"
#include "wavekit/krylov/multigrid.hpp"
#include "wavekit/krylov/solve.hpp"
#include "wavekit/util/parallel.hpp"

namespace wavekit {

struct VelocityRange {
  double lo = 0.0;
  double hi = 0.0;

  void validate(const char* what) const {
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
      throw std::invalid_argument(std::string(what) + ": velocity range must satisfy 0 < lo <= hi");
  }
};

/// Supervision pair with H(m, omega) e_true = r. Samples drawn for one medium share `m`.
struct TrainingSample {
  ComplexField r;
  ComplexField e_true;
  std::shared_ptr<const SlownessSquaredField> m;
};

/// Samples on one grid at one frequency; gamma is common to every sample.
struct Dataset {
  RegularGrid2D grid;
  double omega = 0.0;
  AttenuationField gamma;
  std::vector<TrainingSample> samples;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] HelmholtzProblem problem(std::size_t i) const { return {*samples[i].m, gamma, omega}; }
};

struct DatasetSpec {
  int count = 2000;
  RegularGrid2D grid;
  double omega = 0.0;
  VelocityRange v_top{1500.0, 2500.0};
  VelocityRange v_bottom{2500.0, 4500.0};
  std::uint64_t seed = 1;
  int samples_per_medium = 4;
  int abl_thickness = -1;  // -1: default_abl_thickness(grid)
  int min_iter = 1;
  int max_iter = 10;
  VCycleConfig vcycle;

  void validate() const {
    if (count < 1) throw std::invalid_argument("DatasetSpec: count must be >= 1");
    if (!(omega > 0.0)) throw std::invalid_argument("DatasetSpec: omega must be positive");
    if (samples_per_medium < 1) throw std::invalid_argument("DatasetSpec: samples_per_medium must be >= 1");
    if (min_iter < 1 || max_iter < min_iter)
      throw std::invalid_argument("DatasetSpec: need 1 <= min_iter <= max_iter");
    v_top.validate("DatasetSpec.v_top");
    v_bottom.validate("DatasetSpec.v_bottom");
    vcycle.validate();
  }

  [[nodiscard]] AttenuationField gamma() const {
    return abl_thickness < 0 ? absorbing_layer(grid) : absorbing_layer(grid, abl_thickness);
  }
};

/// m = 1/v^2 with v linear in depth from v_top (row 0) to v_bottom (last row).
inline SlownessSquaredField linear_model(const RegularGrid2D& g, double v_top, double v_bottom) {
  std::vector<double> m(g.size());
  for (int iy = 0; iy < g.ny; ++iy) {
    const double v = v_top + (v_bottom - v_top) * iy / (g.ny - 1);
    for (int ix = 0; ix < g.nx; ++ix) m[g.index(ix, iy)] = 1.0 / (v * v);
  }
  return {g, std::move(m)};
}

template <class Rng>
SlownessSquaredField random_linear_model(const RegularGrid2D& g, const VelocityRange& top,
                                         const VelocityRange& bottom, Rng& rng) {
  top.validate("random_linear_model");
  bottom.validate("random_linear_model");
  std::uniform_real_distribution<double> ut(top.lo, top.hi), ub(bottom.lo, bottom.hi);
  const double vt = top.lo == top.hi ? top.lo : ut(rng);
  const double vb = bottom.lo == bottom.hi ? bottom.lo : ub(rng);
  return linear_model(g, vt, vb);
}

/// Complex standard normal vector: independent N(0, 1/2) real and imaginary parts.
template <class Rng>
cvec complex_normal(std::size_t n, Rng& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  cvec x(n);
  for (cplx& z : x) {
    const double re = nd(rng);
    const double im = nd(rng);
    z = {re, im};
  }
  return x;
}

/// Runs exactly `iters` FGMRES iterations (or fewer on exact convergence) from x0.
inline SolveReport fixed_iterations(const StencilOperator& h, const LinearOperator& precond, std::span<const cplx> b,
                                    std::span<cplx> x, int iters) {
  return fgmres(as_operator(h), precond, b, x, {std::numeric_limits<double>::min(), iters, std::max(iters, 1)});
}

/// x ~ CN(0, I), b = H x, x~ = FGMRES(H, V-cycle, b, 0, iters), r = b - H x~, e = x - x~.
template <class Rng>
TrainingSample generate_sample(const HelmholtzProblem& p, const ShiftedLaplacianVCycle& vc,
                               std::shared_ptr<const SlownessSquaredField> m, Rng& rng, int min_iter = 1,
                               int max_iter = 10) {
  if (min_iter < 1 || max_iter < min_iter) throw std::invalid_argument("generate_sample: need 1 <= min_iter <= max_iter");
  const StencilOperator h = helmholtz_operator(p);
  const std::size_t n = p.grid().size();
  cvec x = complex_normal(n, rng);
  std::uniform_int_distribution<int> ud(min_iter, max_iter);
  const int iters = ud(rng);
  cvec b(n);
  h.apply(x, b);
  cvec xt(n);
  fixed_iterations(h, as_preconditioner(vc), b, xt, iters);
  TrainingSample s;
  s.r = ComplexField(p.grid());
  s.e_true = ComplexField(p.grid());
  h.residual(b, xt, s.r.values);
  for (std::size_t i = 0; i < n; ++i) s.e_true.values[i] = x[i] - xt[i];
  s.m = std::move(m);
  return s;
}

template <class Rng>
TrainingSample generate_sample(const SlownessSquaredField& m, const AttenuationField& gamma, double omega, Rng& rng,
                               const VCycleConfig& cfg = {}) {
  HelmholtzProblem p(m, gamma, omega);
  ShiftedLaplacianVCycle vc(p, cfg);
  return generate_sample(p, vc, std::make_shared<const SlownessSquaredField>(m), rng);
}

/// ||H e - r|| / ||r||.
inline double sample_relation_error(const HelmholtzProblem& p, const TrainingSample& s) {
  const ComplexField he = helmholtz_apply(p, s.e_true);
  return relative_error(he.values, s.r.values);
}

inline std::mt19937_64 indexed_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

/// spec.count samples over fresh random linear media, `samples_per_medium` per medium.
/// Sample i draws from its own stream, so results do not depend on `threads`.
inline Dataset build_dataset(const DatasetSpec& spec, int threads = 1) {
  spec.validate();
  Dataset ds;
  ds.grid = spec.grid;
  ds.omega = spec.omega;
  ds.gamma = spec.gamma();
  ds.samples.resize(static_cast<std::size_t>(spec.count));
  const std::size_t per = static_cast<std::size_t>(spec.samples_per_medium);
  const std::size_t media = (ds.samples.size() + per - 1) / per;
  parallel_for(media, threads, [&](std::size_t k) {
    auto mrng = indexed_rng(spec.seed, k, 1);
    auto m = std::make_shared<const SlownessSquaredField>(random_linear_model(spec.grid, spec.v_top, spec.v_bottom, mrng));
    HelmholtzProblem p(*m, ds.gamma, spec.omega);
    ShiftedLaplacianVCycle vc(p, spec.vcycle);
    for (std::size_t i = k * per; i < std::min(ds.samples.size(), (k + 1) * per); ++i) {
      auto rng = indexed_rng(spec.seed, i, 2);
      ds.samples[i] = generate_sample(p, vc, m, rng, spec.min_iter, spec.max_iter);
    }
  });
  return ds;
}

// Dataset container "WKD1":
//   magic, u32 version (1), u32 reserved, f64 omega, u64 sample count, u64 medium count,
//   gamma as a WKF1 record,
//   manifest: per sample three u64 absolute byte offsets (r, e, m),
//   WKF1 records: each distinct medium once, then r and e of every sample.

inline void write_dataset(std::ostream& os, const Dataset& ds) {
  std::map<const SlownessSquaredField*, std::size_t> medium_index;
  std::vector<const SlownessSquaredField*> media;
  for (const auto& s : ds.samples) {
    if (medium_index.emplace(s.m.get(), media.size()).second) media.push_back(s.m.get());
  }
  const std::size_t n = ds.grid.size();
  const std::uint64_t real_rec = kFieldHeaderBytes + 8 * n, cplx_rec = kFieldHeaderBytes + 16 * n;
  const std::uint64_t header = 4 + 4 + 4 + 8 + 8 + 8;
  const std::uint64_t manifest_at = header + real_rec;
  const std::uint64_t media_at = manifest_at + 24 * ds.samples.size();
  const std::uint64_t samples_at = media_at + real_rec * media.size();

  os.write("WKD1", 4);
  io::write_le<std::uint32_t>(os, 1);
  io::write_le<std::uint32_t>(os, 0);
  io::write_le<double>(os, ds.omega);
  io::write_le<std::uint64_t>(os, ds.samples.size());
  io::write_le<std::uint64_t>(os, media.size());
  write_field(os, static_cast<const RealField&>(ds.gamma));
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    io::write_le<std::uint64_t>(os, samples_at + 2 * cplx_rec * i);
    io::write_le<std::uint64_t>(os, samples_at + 2 * cplx_rec * i + cplx_rec);
    io::write_le<std::uint64_t>(os, media_at + real_rec * medium_index.at(ds.samples[i].m.get()));
  }
  for (const auto* m : media) write_field(os, static_cast<const RealField&>(*m));
  for (const auto& s : ds.samples) {
    write_field(os, s.r);
    write_field(os, s.e_true);
  }
}

inline Dataset read_dataset(std::istream& is) {
  io::expect_magic(is, "WKD1", "dataset");
  const auto version = io::read_le<std::uint32_t>(is);
  if (version != 1) throw std::runtime_error("dataset: unsupported version " + std::to_string(version));
  io::read_le<std::uint32_t>(is);
  Dataset ds;
  ds.omega = io::read_le<double>(is);
  const auto count = io::read_le<std::uint64_t>(is);
  io::read_le<std::uint64_t>(is);
  RealField g = read_real_field(is);
  ds.grid = g.grid;
  ds.gamma = AttenuationField(g.grid, std::move(g.values));
  std::vector<std::array<std::uint64_t, 3>> manifest(count);
  for (auto& entry : manifest)
    for (auto& off : entry) off = io::read_le<std::uint64_t>(is);
  std::map<std::uint64_t, std::shared_ptr<const SlownessSquaredField>> media;
  ds.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& s = ds.samples[i];
    is.seekg(static_cast<std::streamoff>(manifest[i][0]));
    s.r = read_complex_field(is);
    is.seekg(static_cast<std::streamoff>(manifest[i][1]));
    s.e_true = read_complex_field(is);
    auto it = media.find(manifest[i][2]);
    if (it == media.end()) {
      is.seekg(static_cast<std::streamoff>(manifest[i][2]));
      RealField m = read_real_field(is);
      it = media.emplace(manifest[i][2], std::make_shared<const SlownessSquaredField>(m.grid, std::move(m.values))).first;
    }
    s.m = it->second;
    if (!(s.r.grid == ds.grid) || !(s.e_true.grid == ds.grid) || !(s.m->grid == ds.grid))
      throw std::runtime_error("dataset: record grid differs from the dataset grid");
  }
  return ds;
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_dataset(os, ds);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_dataset(is);
}

}  // namespace wavekit
