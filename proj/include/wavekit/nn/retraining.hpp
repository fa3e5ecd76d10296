#pragma once

#include <chrono>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "wavekit/data/training_data.hpp"
#include "wavekit/nn/training.hpp"

namespace wavekit::nn {

struct RetrainConfig {
  int epochs = 30;
  int data_epochs = 3;
  int initial_size = 128;
  int final_size = 1024;
  int batch_size = 16;
  double lr = 1e-4;
  int stride = 1;  // retrain on every stride-th window; 0 disables
  std::uint64_t seed = 11;
  int min_iter = 1;
  int max_iter = 10;
  VCycleConfig vcycle;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("retrain: epochs must be >= 1");
    if (data_epochs < 0 || data_epochs > epochs)
      throw std::invalid_argument("retrain: data_epochs must lie in [0, epochs]");
    if (initial_size < 1) throw std::invalid_argument("retrain: initial_size must be >= 1");
    if (data_epochs >= 31 || (static_cast<long long>(initial_size) << data_epochs) != final_size)
      throw std::invalid_argument("retrain: final_size must equal initial_size * 2^data_epochs");
    if (batch_size < 1) throw std::invalid_argument("retrain: batch_size must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("retrain: lr must be positive");
    if (stride < 0) throw std::invalid_argument("retrain: stride must be >= 0");
    if (min_iter < 1 || max_iter < min_iter) throw std::invalid_argument("retrain: need 1 <= min_iter <= max_iter");
    vcycle.validate();
  }
};

/// Windows are counted from 1.
inline bool should_retrain(int window, int stride) {
  if (stride <= 0) return false;
  return window % stride == 0;
}

struct RetrainReport {
  int window_id = 0;
  double omega_max = 0.0;
  std::size_t dataset_final = 0;
  int epochs_run = 0;
  double initial_mse = 0.0;  // mean training loss of the first epoch
  double final_mse = 0.0;    // mean training loss of the last epoch
  double seconds = 0.0;
  bool reverted = false;
  std::vector<std::size_t> dataset_trace;  // dataset size during each epoch
  std::vector<double> loss_history;
};

/// One spawned pair: e_new = net(r), e~ = one V-cycle FGMRES step on H x = r from e_new,
/// r~ = H e~. The pair satisfies H e~ = r~ by construction.
inline TrainingSample spawn_sample(const EncoderSolver<float>& net, const Context<float>& ctx,
                                   const HelmholtzProblem& p, const ShiftedLaplacianVCycle& vc,
                                   const TrainingSample& s) {
  const StencilOperator h = helmholtz_operator(p);
  TrainingSample out;
  out.e_true = solver_forward(net, ctx, p.gamma, s.r);
  for (const cplx& z : out.e_true.values)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw TrainingError("retrain: non-finite network output");
  fixed_iterations(h, as_preconditioner(vc), s.r.values, out.e_true.values, 1);
  out.r = ComplexField(p.grid());
  h.apply(out.e_true.values, out.r.values);
  out.m = s.m;
  return out;
}

/// Initial retraining set: `count` samples for the single medium m.
inline Dataset medium_dataset(const HelmholtzProblem& p, const ShiftedLaplacianVCycle& vc, int count,
                              std::uint64_t seed, int min_iter, int max_iter, int threads = 1) {
  Dataset ds;
  ds.grid = p.grid();
  ds.omega = p.omega;
  ds.gamma = p.gamma;
  auto m = std::make_shared<const SlownessSquaredField>(p.m);
  ds.samples.resize(static_cast<std::size_t>(count));
  parallel_for(ds.samples.size(), threads, [&](std::size_t i) {
    auto rng = indexed_rng(seed, i, 3);
    ds.samples[i] = generate_sample(p, vc, m, rng, min_iter, max_iter);
  });
  return ds;
}

/// Light-weight retraining on the current iterate m. On a non-finite loss or network output
/// the weights are restored and the report is flagged.
inline RetrainReport retrain(EncoderSolver<float>& net, const HelmholtzProblem& p, const RetrainConfig& cfg,
                             int window_id = 0, int threads = 1) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RetrainReport rep;
  rep.window_id = window_id;
  rep.omega_max = p.omega;
  const EncoderSolver<float> saved = net;
  const ShiftedLaplacianVCycle vc(p, cfg.vcycle);
  Dataset ds = medium_dataset(p, vc, cfg.initial_size, cfg.seed, cfg.min_iter, cfg.max_iter, threads);

  AdamConfig ac;
  ac.lr = cfg.lr;
  ac.decay_every = 0;
  AdamState<float> adam(ac, {net.encoder_params().size(), net.solver_params().size()});
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.seed = cfg.seed;

  auto grow = [&](int epoch, double loss) {
    rep.dataset_trace.push_back(ds.size());
    rep.loss_history.push_back(loss);
    if (epoch >= cfg.data_epochs) return;
    const Context<float> ctx = encoder_forward(net, p);
    const std::size_t n = ds.size();
    std::vector<TrainingSample> spawned(n);
    parallel_for(n, threads, [&](std::size_t i) { spawned[i] = spawn_sample(net, ctx, p, vc, ds.samples[i]); });
    for (auto& s : spawned) ds.samples.push_back(std::move(s));
  };
  try {
    train(net, adam, ds, tc, grow);
  } catch (const TrainingError&) {
    net = saved;
    rep.reverted = true;
  }
  rep.epochs_run = static_cast<int>(rep.loss_history.size());
  rep.dataset_final = ds.size();
  if (!rep.loss_history.empty()) {
    rep.initial_mse = rep.loss_history.front();
    rep.final_mse = rep.loss_history.back();
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline void write_retrain_csv_header(std::ostream& os) {
  os << "window_id,omega_max,dataset_final,epochs_run,final_mse,seconds\n";
}

/// `timing` false writes 0 seconds so that reruns are byte-identical.
inline void write_retrain_csv_row(std::ostream& os, const RetrainReport& r, bool timing = true) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d,%.9e,%zu,%d,%.9e,%.6f\n", r.window_id, r.omega_max, r.dataset_final,
                r.epochs_run, r.final_mse, timing ? r.seconds : 0.0);
  os << buf;
}

}  // namespace wavekit::nn
