#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavekit/core/layout.hpp"
#include "wavekit/core/operators.hpp"
#include "wavekit/core/transfer.hpp"
#include "wavekit/fwi/backend.hpp"
#include "wavekit/util/parallel.hpp"

namespace wavekit::fwi {

/// Observations at one frequency, on that frequency's grid.
struct FrequencyData {
  double omega = 0.0;
  AttenuationField gamma;
  SourceReceiverLayout layout;
  std::vector<cvec> d_obs;  // per source, in receiver order
  double sigma = 1.0;       // misfit weight is 1 / sigma^2

  [[nodiscard]] const RegularGrid2D& grid() const { return layout.grid; }

  /// Point-source right-hand side of source s.
  [[nodiscard]] ComplexField source(std::size_t s) const { return point_source(grid(), layout.sources.at(s)); }
};

struct Survey {
  std::vector<FrequencyData> freqs;

  [[nodiscard]] std::size_t sources() const { return freqs.empty() ? 0 : freqs[0].layout.sources.size(); }

  void validate() const {
    for (std::size_t j = 0; j < freqs.size(); ++j) {
      const auto& f = freqs[j];
      if (j > 0 && !(f.omega > freqs[j - 1].omega))
        throw std::invalid_argument("Survey: frequencies must be strictly increasing");
      if (f.layout.sources.size() != sources()) throw std::invalid_argument("Survey: source count differs across frequencies");
      require_same_grid(f.gamma.grid, f.grid(), "Survey");
      if (!f.d_obs.empty()) {
        if (f.d_obs.size() != f.layout.sources.size()) throw std::invalid_argument("Survey: one data vector per source");
        for (const auto& d : f.d_obs)
          if (d.size() != f.layout.receivers.size()) throw std::invalid_argument("Survey: data length != receivers");
      }
      if (!(f.sigma > 0.0)) throw std::invalid_argument("Survey: sigma must be positive");
    }
  }
};

/// One frequency per entry of `hz`, each on grid_for_frequency at 10 points per wavelength.
inline Survey make_survey(const Acquisition& acq, Extent extent, const std::vector<double>& hz, double v_min,
                          int abl_thickness = -1) {
  Survey s;
  for (double f : hz) {
    FrequencyData fd;
    fd.omega = angular_frequency(f);
    const RegularGrid2D g = grid_for_frequency(f, v_min, extent);
    fd.gamma = abl_thickness < 0 ? absorbing_layer(g) : absorbing_layer(g, abl_thickness);
    fd.layout = acq.on_grid(g);
    s.freqs.push_back(std::move(fd));
  }
  s.validate();
  return s;
}

inline double rms(const std::vector<cvec>& d) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& v : d) {
    for (const cplx& z : v) s += std::norm(z);
    n += v.size();
  }
  return n ? std::sqrt(s / static_cast<double>(n)) : 0.0;
}

/// Fills d_obs = P^T H(m_true)^-1 q_s + noise for every source and frequency. m_true is
/// resampled bilinearly onto each frequency grid. Noise is complex Gaussian with
/// E|n|^2 = (noise_fraction * rms)^2; sigma is set to max(noise_fraction, 0.01) * rms.
template <class Rng>
void simulate_observations(const SlownessSquaredField& m_true, Survey& survey, double noise_fraction, Rng& rng,
                           const SolverFactory& factory, double tol = 1e-8, int threads = 1) {
  if (!(noise_fraction >= 0.0)) throw std::invalid_argument("simulate_observations: noise_fraction must be >= 0");
  for (std::size_t j = 0; j < survey.freqs.size(); ++j) {
    FrequencyData& f = survey.freqs[j];
    const HelmholtzProblem p(resample(m_true, f.grid()), f.gamma, f.omega);
    const auto solver = factory(p);
    const std::size_t ns = f.layout.sources.size();
    f.d_obs.assign(ns, {});
    parallel_for(ns, threads, [&](std::size_t s) {
      try {
        auto [u, rep] = solver->forward(f.source(s), tol);
        if (!rep.converged) throw SolverError("not converged", rep);
        f.d_obs[s] = sample_at_receivers(u, f.layout);
      } catch (const SolverError& e) {
        throw SolverError("simulate_observations: source " + std::to_string(s) + ", frequency " + std::to_string(j) +
                              ": " + e.what(),
                          e.report());
      }
    });
    const double r = rms(f.d_obs);
    if (noise_fraction > 0.0) {
      std::normal_distribution<double> nd(0.0, noise_fraction * r / std::sqrt(2.0));
      for (auto& d : f.d_obs)
        for (cplx& z : d) {
          const double re = nd(rng);
          const double im = nd(rng);
          z += cplx(re, im);
        }
    }
    f.sigma = std::max(noise_fraction, 0.01) * r;
    if (!(f.sigma > 0.0)) f.sigma = 1.0;
  }
  survey.validate();
}

}  // namespace wavekit::fwi
