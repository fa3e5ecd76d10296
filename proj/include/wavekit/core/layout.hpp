#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavekit/core/grid.hpp"
#include "wavekit/core/vec.hpp"

namespace wavekit {

/// Source and receiver node indices on one grid. `masks[s][r]` says whether receiver r
/// records source s; the default layout is full coverage.
struct SourceReceiverLayout {
  RegularGrid2D grid;
  std::vector<std::size_t> sources;
  std::vector<std::size_t> receivers;
  std::vector<std::vector<bool>> masks;

  SourceReceiverLayout() = default;
  SourceReceiverLayout(const RegularGrid2D& g, std::vector<std::size_t> src,
                       std::vector<std::size_t> rec)
      : grid(g), sources(std::move(src)), receivers(std::move(rec)) {
    for (std::size_t s : sources)
      if (s >= grid.size()) throw std::out_of_range("SourceReceiverLayout: source index");
    for (std::size_t r : receivers)
      if (r >= grid.size()) throw std::out_of_range("SourceReceiverLayout: receiver index");
    masks.assign(sources.size(), std::vector<bool>(receivers.size(), true));
  }

  [[nodiscard]] bool full_coverage() const {
    for (const auto& m : masks)
      for (bool b : m)
        if (!b) return false;
    return true;
  }
};

/// P^T u: wavefield values at the receiver nodes, in receiver order.
inline cvec sample_at_receivers(const ComplexField& u, const SourceReceiverLayout& layout) {
  require_same_grid(u.grid, layout.grid, "sample_at_receivers");
  cvec d(layout.receivers.size());
  for (std::size_t r = 0; r < d.size(); ++r) d[r] = u.values[layout.receivers[r]];
  return d;
}

/// P d: scatter receiver values back onto the grid (adjoint of sampling).
inline ComplexField scatter_from_receivers(std::span<const cplx> d,
                                           const SourceReceiverLayout& layout) {
  if (d.size() != layout.receivers.size()) {
    throw std::invalid_argument("scatter_from_receivers: data length mismatch");
  }
  ComplexField u(layout.grid);
  for (std::size_t r = 0; r < d.size(); ++r) u.values[layout.receivers[r]] += d[r];
  return u;
}

/// Physical acquisition geometry, independent of any grid. Positions in meters, depth down.
struct Acquisition {
  std::vector<double> source_x;
  double source_depth = 0.0;
  std::vector<double> receiver_x;
  double receiver_depth = 0.0;

  /// `n_sources` equispaced sources and a receiver on every `receiver_stride`-th base-grid
  /// column, skipping `margin` meters at each side.
  static Acquisition surface_line(double extent_x, int n_sources, double depth, double margin,
                                  int n_receivers) {
    Acquisition a;
    a.source_depth = depth;
    a.receiver_depth = depth;
    const double span = extent_x - 2 * margin;
    for (int s = 0; s < n_sources; ++s)
      a.source_x.push_back(margin + span * (n_sources == 1 ? 0.5 : double(s) / (n_sources - 1)));
    for (int r = 0; r < n_receivers; ++r)
      a.receiver_x.push_back(margin +
                             span * (n_receivers == 1 ? 0.5 : double(r) / (n_receivers - 1)));
    return a;
  }

  /// Snap every position to its nearest node on `g`.
  [[nodiscard]] SourceReceiverLayout on_grid(const RegularGrid2D& g) const {
    auto node = [&](double x, double z) {
      const int ix = std::clamp(static_cast<int>(std::lround(x / g.hx)), 0, g.nx - 1);
      const int iy = std::clamp(static_cast<int>(std::lround(z / g.hy)), 0, g.ny - 1);
      return g.index(ix, iy);
    };
    std::vector<std::size_t> src, rec;
    for (double x : source_x) src.push_back(node(x, source_depth));
    for (double x : receiver_x) rec.push_back(node(x, receiver_depth));
    return {g, std::move(src), std::move(rec)};
  }
};

}  // namespace wavekit
