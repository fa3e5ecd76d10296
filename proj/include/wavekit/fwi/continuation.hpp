#pragma once

#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "wavekit/data/training_data.hpp"
#include "wavekit/fwi/gauss_newton.hpp"
#include "wavekit/nn/retraining.hpp"

namespace wavekit::fwi {

/// One sweep over windows i_start..i_end (1-based frequency indices).
struct CycleSpec {
  int i_start = 1;
  int i_end = 1;
  RegularizerKind regularizer = RegularizerKind::SplineSmoothing;
  double reg_fraction = 0.0;  // alpha is chosen so that alpha R ~ reg_fraction * data misfit
};

struct FcSchedule {
  std::vector<CycleSpec> cycles;
  int window_size = 1;
  int gn_iterations = 5;
  int cg_iterations = 5;
  int encoding_p = 16;  // 0 selects the identity encoding

  void validate(int n_freq) const {
    if (cycles.empty()) throw std::invalid_argument("schedule: no cycles");
    for (const auto& c : cycles) {
      if (c.i_start < 1 || c.i_start > c.i_end || c.i_end > n_freq)
        throw std::invalid_argument("schedule: cycle range must satisfy 1 <= i_start <= i_end <= " +
                                    std::to_string(n_freq));
      if (!(c.reg_fraction >= 0.0)) throw std::invalid_argument("schedule: reg_fraction must be >= 0");
    }
    if (window_size < 1) throw std::invalid_argument("schedule: window_size must be >= 1");
    if (gn_iterations < 1) throw std::invalid_argument("schedule: gn_iterations must be >= 1");
    if (cg_iterations < 1) throw std::invalid_argument("schedule: cg_iterations must be >= 1");
    if (encoding_p < 0) throw std::invalid_argument("schedule: encoding_p must be >= 0");
  }

  /// 0-based frequency indices of window i (1-based): max(i - ws, 1) .. i.
  [[nodiscard]] std::vector<std::size_t> window(int i) const {
    std::vector<std::size_t> f;
    for (int j = std::max(i - window_size, 1); j <= i; ++j) f.push_back(static_cast<std::size_t>(j - 1));
    return f;
  }
};

struct HistoryRow {
  int cycle = 0;
  int window = 0;
  int gn_iter = 0;
  std::string phase;
  std::string omega_set;
  long fgmres_iterations = 0;
  double seconds = 0.0;
  double misfit = 0.0;
};

struct WindowRecord {
  int cycle = 0;
  int window = 0;  // counted from 1 across all cycles
  int frequency = 0;
  double omega_max = 0.0;
  double alpha = 0.0;
  double phi_start = 0.0;
  double phi_end = 0.0;
  int stalls = 0;
  SolveStats totals;
  std::vector<GnStepReport> steps;
  std::optional<nn::RetrainReport> retrain;
};

struct FcResult {
  SlownessSquaredField m;  // on the grid of the last window
  std::vector<HistoryRow> history;
  std::vector<WindowRecord> windows;
  SolveStats totals;
};

/// Called before a window with the current model on the window grid and the window's top
/// frequency. May replace the preconditioner used by later solver factories.
using RetrainHook =
    std::function<std::optional<nn::RetrainReport>(const SlownessSquaredField&, const FrequencyData&, int window)>;
using WindowCallback = std::function<void(const WindowRecord&, const SlownessSquaredField&)>;

struct FcOptions {
  GnConfig gn;
  SolverFactory factory;
  RetrainHook retrain;
  int retrain_stride = 1;
  WindowCallback on_window;
  int threads = 1;
  std::uint64_t seed = 7;
  ObjectiveTolerances tol;
};

inline std::string omega_set(const Survey& s, const std::vector<std::size_t>& freqs) {
  std::string out;
  char buf[32];
  for (std::size_t q = 0; q < freqs.size(); ++q) {
    std::snprintf(buf, sizeof buf, "%.6f", s.freqs[freqs[q]].omega);
    if (q) out += ';';
    out += buf;
  }
  return out;
}

/// Sliding-window frequency continuation with Gauss-Newton on each window. m0 is the starting
/// model and the fixed regularization reference.
inline FcResult frequency_continuation(const SlownessSquaredField& m0, const Survey& survey, const FcSchedule& schedule,
                                       const FcOptions& opt) {
  schedule.validate(static_cast<int>(survey.freqs.size()));
  if (!opt.factory) throw std::invalid_argument("continuation: no solver factory");
  GnConfig gn = opt.gn;
  gn.cg_iterations = schedule.cg_iterations;
  gn.validate();

  FcResult res;
  res.m = m0;
  std::uint64_t gn_counter = 0;
  int window_id = 0;
  const int ns = static_cast<int>(survey.sources());

  for (std::size_t c = 0; c < schedule.cycles.size(); ++c) {
    const CycleSpec& cyc = schedule.cycles[c];
    for (int i = cyc.i_start; i <= cyc.i_end; ++i) {
      ++window_id;
      const FrequencyData& top = survey.freqs[static_cast<std::size_t>(i - 1)];
      const RegularGrid2D& g = top.grid();
      SlownessSquaredField m = resample(res.m, g);
      for (double& v : m.values) v = gn.bounds.clamp(v);

      WindowRecord rec;
      rec.cycle = static_cast<int>(c) + 1;
      rec.window = window_id;
      rec.frequency = i;
      rec.omega_max = top.omega;
      if (opt.retrain && nn::should_retrain(window_id, opt.retrain_stride))
        rec.retrain = opt.retrain(m, top, window_id);

      const auto freqs = schedule.window(i);
      const std::string oset = omega_set(survey, freqs);
      const SlownessSquaredField m_ref = resample(m0, g);
      Objective obj(survey, freqs, g, Regularizer(cyc.regularizer, m_ref, 0.0), opt.factory, opt.threads, opt.tol);

      auto encoding = [&]() {
        if (schedule.encoding_p == 0) return SimSourceEncoding::identity(ns);
        auto rng = indexed_rng(opt.seed, gn_counter, 5);
        return SimSourceEncoding::rademacher(ns, schedule.encoding_p, rng);
      };
      auto row = [&](int it, const char* phase, const SolveStats& st, double phi) {
        res.history.push_back({rec.cycle, rec.window, it, phase, oset, st.iterations, st.seconds, phi});
        rec.totals += st;
      };

      for (int it = 1; it <= schedule.gn_iterations; ++it, ++gn_counter) {
        const SimSourceEncoding enc = encoding();
        if (it == 1 && cyc.reg_fraction > 0.0) {
          SolveStats st;
          const double data = obj.evaluate(m, enc, &st);
          row(0, "misfit", st, data);
          double scale = 0.0;
          for (double v : m_ref.values) scale += v;
          scale /= static_cast<double>(m_ref.values.size());
          rec.alpha = cyc.reg_fraction * data / regularizer_unit(cyc.regularizer, g, scale);
          obj.set_regularizer(Regularizer(cyc.regularizer, m_ref, rec.alpha));
        }
        GnStepReport step = gauss_newton_step(obj, m, enc, gn);
        if (it == 1) rec.phi_start = step.phi_before;
        rec.phi_end = step.phi_after;
        if (step.stalled) ++rec.stalls;
        row(it, "misfit", step.misfit, step.phi_before);
        row(it, "gradient", step.gradient, step.phi_before);
        row(it, "hessvec", step.hessvec, step.phi_before);
        row(it, "misfit", step.line_search, step.phi_after);
        rec.steps.push_back(std::move(step));
      }
      res.totals += rec.totals;
      res.m = m;
      if (opt.on_window) opt.on_window(rec, m);
      res.windows.push_back(std::move(rec));
    }
  }
  return res;
}

inline void write_history_csv_header(std::ostream& os) {
  os << "cycle,window,gn_iter,phase,omega_set,fgmres_iters_total,seconds,misfit_value\n";
}

inline void write_history_csv_row(std::ostream& os, const HistoryRow& r, bool timing = true) {
  char buf[128];
  std::snprintf(buf, sizeof buf, ",%ld,%.6f,%.9e\n", r.fgmres_iterations, timing ? r.seconds : 0.0, r.misfit);
  os << r.cycle << ',' << r.window << ',' << r.gn_iter << ',' << r.phase << ',' << r.omega_set << buf;
}

}  // namespace wavekit::fwi
