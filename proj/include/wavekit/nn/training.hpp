#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavekit/data/training_data.hpp"
#include "wavekit/nn/adam.hpp"
#include "wavekit/nn/encoder_solver.hpp"
#include "wavekit/nn/preconditioner.hpp"

namespace wavekit::nn {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int epochs = 40;
  int batch_size = 16;
  std::uint64_t seed = 7;

  void validate() const {
    if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  }
};

/// Network-unit view of one sample: solver input, target and medium key.
template <class T>
struct PreparedSample {
  Tensor<T> input;
  Tensor<T> target;
  const SlownessSquaredField* medium = nullptr;
};

template <class T>
PreparedSample<T> prepare(const Dataset& ds, const TrainingSample& s) {
  const double scale = norm_inf(s.r.values);
  return {residual_tensor<T>(ds.grid, s.r.values, ds.gamma, scale), error_target<T>(ds.grid, s.e_true.values, scale),
          s.m.get()};
}

/// Mean squared error per component between output and target; writes dL/dout scaled by `weight`.
template <class T>
double mse_and_grad(const Tensor<T>& out, const Tensor<T>& target, double weight, Tensor<T>* d_out) {
  double sum = 0.0;
  const double n = static_cast<double>(out.size());
  if (d_out) *d_out = zeros_like(out);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double diff = static_cast<double>(out.v[i]) - static_cast<double>(target.v[i]);
    sum += diff * diff;
    if (d_out) d_out->v[i] = static_cast<T>(weight * 2.0 * diff / n);
  }
  return sum / n;
}

/// Mean loss and parameter gradients over a batch of prepared samples. Samples sharing a
/// medium share one encoder forward/backward.
template <class T>
double batch_loss_and_grad(const EncoderSolver<T>& net, const Dataset& ds, const std::vector<PreparedSample<T>>& data,
                           std::span<const std::size_t> batch, std::vector<T>& g_e, std::vector<T>& g_s) {
  std::fill(g_e.begin(), g_e.end(), T(0));
  std::fill(g_s.begin(), g_s.end(), T(0));
  const double weight = 1.0 / static_cast<double>(batch.size());
  std::vector<const SlownessSquaredField*> order;
  std::map<const SlownessSquaredField*, std::vector<std::size_t>> groups;
  for (std::size_t idx : batch) {
    auto [it, fresh] = groups.try_emplace(data[idx].medium);
    if (fresh) order.push_back(data[idx].medium);
    it->second.push_back(idx);
  }
  double loss = 0.0;
  for (const SlownessSquaredField* m : order) {
    UNetTape<T> etape;
    UNetOutput<T> efwd;
    const Context<T> ctx = net.encode(medium_tensor<T>(HelmholtzProblem(*m, ds.gamma, ds.omega)), &etape, &efwd);
    std::vector<Tensor<T>> dctx;
    for (std::size_t idx : groups[m]) {
      UNetTape<T> stape;
      UNetOutput<T> sfwd;
      const Tensor<T> out = net.solve(data[idx].input, ctx, &stape, &sfwd);
      Tensor<T> d_out;
      loss += weight * mse_and_grad(out, data[idx].target, weight, &d_out);
      std::vector<Tensor<T>> d = net.solve_backward(stape, sfwd, d_out, g_s);
      if (dctx.empty()) {
        dctx = std::move(d);
      } else {
        for (std::size_t l = 0; l < d.size(); ++l) add_inplace(dctx[l], d[l]);
      }
    }
    net.encode_backward(etape, efwd, std::move(dctx), g_e);
  }
  return loss;
}

/// Batches for one epoch: samples are shuffled within each medium, media are shuffled, and
/// the concatenation is cut into batches so that batch members mostly share a medium.
inline std::vector<std::vector<std::size_t>> epoch_batches(const std::vector<const SlownessSquaredField*>& medium_of,
                                                           int batch_size, std::mt19937_64& rng) {
  std::vector<const SlownessSquaredField*> keys;
  std::map<const SlownessSquaredField*, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < medium_of.size(); ++i) {
    auto [it, fresh] = groups.try_emplace(medium_of[i]);
    if (fresh) keys.push_back(medium_of[i]);
    it->second.push_back(i);
  }
  std::vector<std::size_t> media(keys.size());
  std::iota(media.begin(), media.end(), 0);
  std::shuffle(media.begin(), media.end(), rng);
  std::vector<std::size_t> seq;
  for (std::size_t k : media) {
    auto& g = groups[keys[k]];
    std::shuffle(g.begin(), g.end(), rng);
    seq.insert(seq.end(), g.begin(), g.end());
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < seq.size(); i += static_cast<std::size_t>(batch_size))
    batches.emplace_back(seq.begin() + static_cast<std::ptrdiff_t>(i),
                         seq.begin() + static_cast<std::ptrdiff_t>(std::min(seq.size(), i + batch_size)));
  return batches;
}

/// Mean MSE of the network over a dataset (network units).
template <class T>
double evaluate_mse(const EncoderSolver<T>& net, const Dataset& ds) {
  if (ds.size() == 0) return 0.0;
  std::map<const SlownessSquaredField*, Context<T>> ctx;
  double sum = 0.0;
  for (const auto& s : ds.samples) {
    auto it = ctx.find(s.m.get());
    if (it == ctx.end())
      it = ctx.emplace(s.m.get(), net.encode(medium_tensor<T>(HelmholtzProblem(*s.m, ds.gamma, ds.omega)))).first;
    const PreparedSample<T> ps = prepare<T>(ds, s);
    sum += mse_and_grad(net.solve(ps.input, it->second), ps.target, 1.0, static_cast<Tensor<T>*>(nullptr));
  }
  return sum / static_cast<double>(ds.size());
}

/// Called after every epoch with (epoch index, mean training loss); may append to the dataset.
using EpochHook = std::function<void(int, double)>;

/// Minimises the batch-mean MSE with ADAM. Returns the mean training loss of every epoch.
/// `epoch_offset` selects the learning-rate schedule position when training is resumed.
template <class T>
std::vector<double> train(EncoderSolver<T>& net, AdamState<T>& adam, const Dataset& ds, const TrainConfig& cfg,
                          const EpochHook& after_epoch = {}, int epoch_offset = 0) {
  cfg.validate();
  if (ds.size() == 0) throw std::invalid_argument("train: empty dataset");
  std::mt19937_64 rng(cfg.seed);
  std::vector<T> g_e(net.encoder_params().size()), g_s(net.solver_params().size());
  std::vector<double> history;
  std::vector<PreparedSample<T>> data;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = data.size(); i < ds.size(); ++i) data.push_back(prepare<T>(ds, ds.samples[i]));
    std::vector<const SlownessSquaredField*> medium_of(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) medium_of[i] = data[i].medium;
    const double lr = adam.cfg.lr_at(epoch + epoch_offset);
    double total = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : epoch_batches(medium_of, cfg.batch_size, rng)) {
      const double loss = batch_loss_and_grad(net, ds, data, batch, g_e, g_s);
      if (!std::isfinite(loss)) {
        throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) + " after " +
                            std::to_string(seen) + " samples");
      }
      adam.update({std::span<T>(net.encoder_params()), std::span<T>(net.solver_params())},
                  {std::span<const T>(g_e), std::span<const T>(g_s)}, lr);
      total += loss * static_cast<double>(batch.size());
      seen += batch.size();
    }
    history.push_back(total / static_cast<double>(seen));
    if (after_epoch) after_epoch(epoch, history.back());
  }
  return history;
}

inline void write_loss_csv(std::ostream& os, const std::vector<double>& history) {
  os << "epoch,mse\n";
  char buf[64];
  for (std::size_t i = 0; i < history.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9e\n", i + 1, history[i]);
    os << buf;
  }
}

}  // namespace wavekit::nn
