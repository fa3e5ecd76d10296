#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wavekit/fwi/objective.hpp"

namespace wavekit::fwi {

/// Bounds on m from velocity bounds: m in [1 / v_max^2, 1 / v_min^2].
struct ModelBounds {
  double m_min = 0.0;
  double m_max = std::numeric_limits<double>::infinity();

  static ModelBounds from_velocity(double v_min, double v_max) {
    if (!(v_min > 0.0) || !(v_max >= v_min)) throw std::invalid_argument("bounds: need 0 < v_min <= v_max");
    return {1.0 / (v_max * v_max), 1.0 / (v_min * v_min)};
  }

  [[nodiscard]] double clamp(double m) const { return std::clamp(m, m_min, m_max); }
};

struct GnConfig {
  int cg_iterations = 5;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_trials = 8;
  ModelBounds bounds;

  void validate() const {
    if (cg_iterations < 1) throw std::invalid_argument("gn: cg_iterations must be >= 1");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw std::invalid_argument("gn: armijo_c must lie in (0, 1)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw std::invalid_argument("gn: backtrack must lie in (0, 1)");
    if (max_trials < 1) throw std::invalid_argument("gn: max_trials must be >= 1");
    if (!(bounds.m_min < bounds.m_max)) throw std::invalid_argument("gn: empty bounds");
  }
};

struct GnStepReport {
  double phi_before = 0.0;
  double phi_after = 0.0;
  double step = 0.0;  // accepted step length, 0 when stalled
  int cg_iterations = 0;
  int trials = 0;
  bool stalled = false;
  bool negative_curvature = false;
  SolveStats misfit, gradient, hessvec, line_search;
};

/// CG on H p = -g from p = 0, stopping after `iters` steps or at non-positive curvature.
template <class HessVec>
std::vector<double> truncated_cg(HessVec&& hv, const std::vector<double>& g, int iters, int* done = nullptr,
                                 bool* neg_curv = nullptr) {
  const std::size_t n = g.size();
  std::vector<double> p(n, 0.0), r(n), d(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = d[i] = -g[i];
  double rr = dot(std::span<const double>(r), std::span<const double>(r));
  const double rr0 = rr;
  int k = 0;
  if (neg_curv) *neg_curv = false;
  for (; k < iters && rr > 0.0 && rr > 1e-30 * rr0; ++k) {
    const std::vector<double> hd = hv(d);
    const double curv = dot(std::span<const double>(d), std::span<const double>(hd));
    if (!(curv > 0.0)) {
      if (neg_curv) *neg_curv = true;
      if (k == 0) p = d;
      break;
    }
    const double a = rr / curv;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] += a * d[i];
      r[i] -= a * hd[i];
    }
    const double rr_new = dot(std::span<const double>(r), std::span<const double>(r));
    const double b = rr_new / rr;
    for (std::size_t i = 0; i < n; ++i) d[i] = r[i] + b * d[i];
    rr = rr_new;
  }
  if (done) *done = k;
  return p;
}

/// One Gauss-Newton iteration with a fixed encoding: truncated CG for the direction, then
/// Armijo backtracking on the projected step. On a stall m is left unchanged.
inline GnStepReport gauss_newton_step(Objective& obj, SlownessSquaredField& m, const SimSourceEncoding& enc,
                                      const GnConfig& cfg) {
  cfg.validate();
  GnStepReport rep;
  rep.phi_before = obj.evaluate(m, enc, &rep.misfit);
  const std::vector<double> g = obj.gradient(&rep.gradient);
  if (norm2(std::span<const double>(g)) == 0.0) {
    rep.phi_after = rep.phi_before;
    return rep;
  }
  std::vector<double> p = truncated_cg([&](const std::vector<double>& v) { return obj.hessian_vec(v, &rep.hessvec); },
                                       g, cfg.cg_iterations, &rep.cg_iterations, &rep.negative_curvature);
  if (!(dot(std::span<const double>(g), std::span<const double>(p)) < 0.0)) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = -g[i];
  }
  double t = 1.0;
  SlownessSquaredField trial = m;
  for (int k = 0; k < cfg.max_trials; ++k, t *= cfg.backtrack) {
    double slope = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      trial.values[i] = cfg.bounds.clamp(m.values[i] + t * p[i]);
      slope += g[i] * (trial.values[i] - m.values[i]);
    }
    ++rep.trials;
    const double phi = obj.evaluate(trial, enc, &rep.line_search);
    if (std::isfinite(phi) && phi < rep.phi_before && phi <= rep.phi_before + cfg.armijo_c * slope) {
      m = trial;
      rep.phi_after = phi;
      rep.step = t;
      return rep;
    }
  }
  rep.stalled = true;
  rep.phi_after = rep.phi_before;
  return rep;
}

}  // namespace wavekit::fwi
