#pragma once

#include <Eigen/Dense>
#include <random>
#include <stdexcept>
#include <vector>

#include "wavekit/core/vec.hpp"

namespace wavekit::fwi {

/// Source encoding X (n_s x p). Rademacher columns carry weight 1/p so that
/// E[||A X||^2] / p = ||A||_F^2; the identity encoding carries weight 1.
struct SimSourceEncoding {
  Eigen::MatrixXd x;
  double weight = 1.0;

  [[nodiscard]] int sources() const { return static_cast<int>(x.rows()); }
  [[nodiscard]] int columns() const { return static_cast<int>(x.cols()); }

  static SimSourceEncoding identity(int n_sources) {
    if (n_sources < 1) throw std::invalid_argument("encoding: need at least one source");
    return {Eigen::MatrixXd::Identity(n_sources, n_sources), 1.0};
  }

  template <class Rng>
  static SimSourceEncoding rademacher(int n_sources, int p, Rng& rng) {
    if (n_sources < 1 || p < 1) throw std::invalid_argument("encoding: need n_s >= 1 and p >= 1");
    SimSourceEncoding e{Eigen::MatrixXd(n_sources, p), 1.0 / p};
    std::bernoulli_distribution coin(0.5);
    for (int k = 0; k < p; ++k)
      for (int s = 0; s < n_sources; ++s) e.x(s, k) = coin(rng) ? 1.0 : -1.0;
    return e;
  }
};

/// Encoded blocks: columns of G X and D X, where G and D hold one column per source.
struct EncodedBlock {
  std::vector<cvec> sources;
  std::vector<cvec> data;
};

inline EncodedBlock rademacher_encode(const std::vector<cvec>& g, const std::vector<cvec>& d,
                                      const SimSourceEncoding& enc) {
  const std::size_t ns = g.size();
  if (d.size() != ns || static_cast<std::size_t>(enc.sources()) != ns)
    throw std::invalid_argument("rademacher_encode: source count mismatch");
  auto combine = [&](const std::vector<cvec>& cols) {
    std::vector<cvec> out;
    const std::size_t n = cols.empty() ? 0 : cols[0].size();
    for (const auto& c : cols)
      if (c.size() != n) throw std::invalid_argument("rademacher_encode: ragged columns");
    for (int k = 0; k < enc.columns(); ++k) {
      cvec v(n);
      for (std::size_t s = 0; s < ns; ++s) {
        const double w = enc.x(static_cast<Eigen::Index>(s), k);
        if (w == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) v[i] += w * cols[s][i];
      }
      out.push_back(std::move(v));
    }
    return out;
  };
  return {combine(g), combine(d)};
}

}  // namespace wavekit::fwi
