#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace wavekit::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int decay_every = 40;  // epochs; 0 disables decay
  double decay_factor = 0.5;

  void validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw std::invalid_argument("adam: betas must lie in [0, 1)");
    if (decay_every < 0 || !(decay_factor > 0.0)) throw std::invalid_argument("adam: invalid decay schedule");
  }

  /// Learning rate in effect during `epoch` (0-based).
  [[nodiscard]] double lr_at(int epoch) const {
    if (decay_every <= 0) return lr;
    return lr * std::pow(decay_factor, epoch / decay_every);
  }
};

/// First and second moments for a list of parameter groups sharing one step counter.
template <class T>
struct AdamState {
  AdamConfig cfg;
  long step = 0;
  std::vector<std::vector<double>> m, v;

  AdamState() = default;
  AdamState(const AdamConfig& c, std::initializer_list<std::size_t> sizes) : cfg(c) {
    cfg.validate();
    for (std::size_t n : sizes) {
      m.emplace_back(n, 0.0);
      v.emplace_back(n, 0.0);
    }
  }

  void update(std::initializer_list<std::span<T>> params, std::initializer_list<std::span<const T>> grads,
              double lr) {
    if (params.size() != m.size() || grads.size() != m.size())
      throw std::invalid_argument("adam: parameter group count mismatch");
    ++step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    std::size_t gi = 0;
    auto gp = grads.begin();
    for (std::span<T> p : params) {
      std::span<const T> g = *gp++;
      auto& mg = m[gi];
      auto& vg = v[gi];
      if (p.size() != mg.size() || g.size() != mg.size())
        throw std::invalid_argument("adam: parameter group size mismatch");
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gr = g[i];
        mg[i] = cfg.beta1 * mg[i] + (1.0 - cfg.beta1) * gr;
        vg[i] = cfg.beta2 * vg[i] + (1.0 - cfg.beta2) * gr * gr;
        const double mhat = mg[i] / c1, vhat = vg[i] / c2;
        p[i] = static_cast<T>(p[i] - lr * mhat / (std::sqrt(vhat) + cfg.eps));
      }
      ++gi;
    }
  }
};

}  // namespace wavekit::nn
