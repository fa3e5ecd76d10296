#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "wavekit/app/config.hpp"
#include "wavekit/nn/checkpoint.hpp"

namespace wavekit::app {

namespace fs = std::filesystem;

enum class Mode { Retrain, Frozen, VCycleOnly };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Retrain: return "retrain";
    case Mode::Frozen: return "frozen";
    default: return "vcycle_only";
  }
}

inline Mode parse_mode(const std::string& s) {
  if (s == "retrain") return Mode::Retrain;
  if (s == "frozen") return Mode::Frozen;
  if (s == "vcycle_only") return Mode::VCycleOnly;
  throw ConfigError("mode: expected retrain, frozen or vcycle_only, got '" + s + "'");
}

/// Exit codes of the command-line runner.
enum ExitCode { kOk = 0, kConfigError = 2, kSolverFailure = 3, kCapsHit = 4 };

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// 8-bit binary PGM with min/max normalisation; a constant field maps to mid grey.
inline void write_pgm(const std::string& path, const RealField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error(path + ": cannot write");
  const auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
  const double span = *hi - *lo;
  os << "P5\n" << f.grid.nx << ' ' << f.grid.ny << "\n255\n";
  for (double v : f.values) {
    const int level = span > 0 ? static_cast<int>(std::lround(255.0 * (v - *lo) / span)) : 128;
    os.put(static_cast<char>(static_cast<unsigned char>(level)));
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error(path + ": cannot write");
  os << text;
}

inline double rms_difference(const RealField& a, const RealField& b) {
  require_same_grid(a.grid, b.grid, "rms_difference");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
  return std::sqrt(s / static_cast<double>(a.values.size()));
}

using Log = std::function<void(const std::string&)>;

// ---------------------------------------------------------------------------------------------
// train

struct TrainOutcome {
  nn::EncoderSolver<float> net;
  std::vector<double> loss;
  double seconds = 0.0;
};

inline DatasetSpec training_spec(const ExperimentConfig& c) {
  DatasetSpec s;
  s.count = c.training.samples;
  s.grid = grid_for_frequency(c.training_hz(), c.v_min, c.extent);
  s.omega = angular_frequency(c.training_hz());
  s.v_top = c.training.v_top;
  s.v_bottom = c.training.v_bottom;
  s.seed = c.seed;
  s.samples_per_medium = c.training.samples_per_medium;
  s.abl_thickness = c.abl_thickness;
  s.min_iter = c.training.min_iter;
  s.max_iter = c.training.max_iter;
  return s;
}

/// Builds the initial dataset and trains a fresh encoder-solver.
inline TrainOutcome train_network(const ExperimentConfig& c, int threads = 1, const Log& log = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const DatasetSpec spec = training_spec(c);
  const Dataset ds = build_dataset(spec, threads);
  if (log) log("dataset: " + std::to_string(ds.size()) + " samples on " + describe(spec.grid));
  TrainOutcome out;
  auto rng = indexed_rng(c.seed, 0, 6);
  out.net.init(rng);
  nn::AdamConfig ac;
  ac.lr = c.training.lr;
  nn::AdamState<float> adam(ac, {out.net.encoder_params().size(), out.net.solver_params().size()});
  nn::TrainConfig tc;
  tc.epochs = c.training.epochs;
  tc.batch_size = c.training.batch_size;
  tc.seed = c.seed;
  out.loss = nn::train(out.net, adam, ds, tc, [&](int e, double l) {
    if (!log) return;
    char buf[96];
    std::snprintf(buf, sizeof buf, "epoch %d loss %.6e", e + 1, l);
    log(buf);
  });
  out.seconds = seconds_since(t0);
  return out;
}

inline void write_config_copy(const ExperimentConfig& c, const std::string& dir, const json& extra) {
  json j = c.source;
  j["seed"] = c.seed;
  j["run"] = extra;
  write_text((fs::path(dir) / "config.json").string(), j.dump(2) + "\n");
}

inline int cmd_train(const ExperimentConfig& c, int threads = 1, const Log& log = {}) {
  fs::create_directories(c.out_dir);
  write_config_copy(c, c.out_dir, {{"command", "train"}, {"threads", threads}});
  const TrainOutcome r = train_network(c, threads, log);
  nn::save_checkpoint((fs::path(c.out_dir) / "checkpoint.wkw").string(), r.net);
  std::ofstream loss((fs::path(c.out_dir) / "train_loss.csv").string(), std::ios::binary);
  nn::write_loss_csv(loss, r.loss);
  json s = {{"samples", c.training.samples},
            {"epochs", c.training.epochs},
            {"final_loss", r.loss.empty() ? 0.0 : r.loss.back()},
            {"seconds", c.timing ? r.seconds : 0.0}};
  write_text((fs::path(c.out_dir) / "train_summary.json").string(), s.dump(2) + "\n");
  return kOk;
}

// ---------------------------------------------------------------------------------------------
// invert

struct InvertOutcome {
  fwi::FcResult result;
  std::vector<nn::RetrainReport> retrains;
  double rms_initial = 0.0;
  double rms_final = 0.0;
  double seconds = 0.0;
  double retrain_seconds = 0.0;
  int exit_code = kOk;
};

inline fwi::Survey build_survey(const ExperimentConfig& c) {
  const Acquisition acq = Acquisition::surface_line(c.extent.x, c.sources, c.depth, c.margin, c.receivers);
  return fwi::make_survey(acq, c.extent, c.frequencies_hz, c.v_min, c.abl_thickness);
}

/// Simulates observations from the true model and runs frequency continuation in `mode`.
/// `net` is required unless mode is VCycleOnly. Window snapshots go to `dir` when non-empty.
inline InvertOutcome run_inversion(const ExperimentConfig& c, Mode mode, const nn::EncoderSolver<float>* net,
                                   int threads = 1, const std::string& dir = {}, const Log& log = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  if (mode != Mode::VCycleOnly && !net) throw ConfigError("training.checkpoint: required for mode " + std::string(to_string(mode)));
  InvertOutcome out;
  fwi::Survey survey = build_survey(c);
  const RegularGrid2D fine = c.finest_grid();
  const SlownessSquaredField m_true = build_model(c.true_model, fine);
  const SlownessSquaredField m0 = build_model(c.initial_model, fine);
  auto noise_rng = indexed_rng(c.seed, 0, 4);
  fwi::simulate_observations(m_true, survey, c.noise_fraction, noise_rng, fwi::krylov_factory(nullptr, 20 * c.max_fgmres, false),
                             1e-8, threads);
  if (log) log("observations simulated for " + std::to_string(survey.freqs.size()) + " frequencies");

  std::shared_ptr<const nn::EncoderSolver<float>> snapshot;
  nn::EncoderSolver<float> working;
  if (net) {
    working = *net;
    snapshot = std::make_shared<const nn::EncoderSolver<float>>(working);
  }
  const bool allow_cap = mode == Mode::Frozen;
  fwi::FcOptions opt;
  opt.factory = fwi::krylov_factory(mode == Mode::VCycleOnly ? nullptr : &snapshot, c.max_fgmres, allow_cap);
  opt.gn.bounds = fwi::ModelBounds::from_velocity(c.v_lower, c.v_upper);
  opt.threads = threads;
  opt.seed = c.seed;
  if (mode == Mode::Retrain) {
    opt.retrain_stride = c.retrain.stride;
    opt.retrain = [&](const SlownessSquaredField& m, const fwi::FrequencyData& f, int window) {
      nn::RetrainConfig rc = c.retrain;
      rc.seed = c.seed + 1000003ULL * static_cast<std::uint64_t>(window);
      const nn::RetrainReport rep = nn::retrain(working, HelmholtzProblem(m, f.gamma, f.omega), rc, window, threads);
      snapshot = std::make_shared<const nn::EncoderSolver<float>>(working);
      out.retrains.push_back(rep);
      out.retrain_seconds += rep.seconds;
      if (log) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "window %d: retrained on %zu samples, loss %.4e -> %.4e%s", window,
                      rep.dataset_final, rep.initial_mse, rep.final_mse, rep.reverted ? " (reverted)" : "");
        log(buf);
      }
      return std::optional<nn::RetrainReport>(rep);
    };
  }
  opt.on_window = [&](const fwi::WindowRecord& w, const SlownessSquaredField& m) {
    if (log) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "cycle %d window %d (f%d): misfit %.4e -> %.4e, fgmres %ld, stalls %d", w.cycle,
                    w.window, w.frequency, w.phi_start, w.phi_end, w.totals.iterations, w.stalls);
      log(buf);
    }
    if (dir.empty()) return;
    char name[32];
    std::snprintf(name, sizeof name, "window_%02d", w.window);
    save_field((fs::path(dir) / "models" / (std::string(name) + ".wkf")).string(), m);
    if (c.images) write_pgm((fs::path(dir) / "images" / (std::string(name) + ".pgm")).string(), m);
  };
  if (!dir.empty()) {
    fs::create_directories(fs::path(dir) / "models");
    if (c.images) fs::create_directories(fs::path(dir) / "images");
  }
  out.result = fwi::frequency_continuation(m0, survey, c.schedule, opt);
  const SlownessSquaredField m_final = resample(out.result.m, fine);
  out.rms_initial = rms_difference(m0, m_true);
  out.rms_final = rms_difference(m_final, m_true);
  out.seconds = seconds_since(t0);
  if (mode == Mode::Frozen && out.result.totals.capped > 0) out.exit_code = kCapsHit;
  if (!dir.empty()) {
    save_field((fs::path(dir) / "models" / "true.wkf").string(), m_true);
    save_field((fs::path(dir) / "models" / "initial.wkf").string(), m0);
    save_field((fs::path(dir) / "models" / "final.wkf").string(), m_final);
    if (c.images) {
      write_pgm((fs::path(dir) / "images" / "true.pgm").string(), m_true);
      write_pgm((fs::path(dir) / "images" / "initial.pgm").string(), m0);
      write_pgm((fs::path(dir) / "images" / "final.pgm").string(), m_final);
    }
    if (mode == Mode::Retrain) nn::save_checkpoint((fs::path(dir) / "retrained.wkw").string(), working);
  }
  return out;
}

inline void write_windows_csv(std::ostream& os, const fwi::FcResult& r, const fwi::Survey& s,
                              const fwi::FcSchedule& sch, bool timing) {
  os << "cycle,window,frequency,omega_set,fgmres_iters,solves,capped,seconds,misfit_start,misfit_end,stalls,alpha,"
        "retrained\n";
  for (const auto& w : r.windows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, ",%ld,%d,%d,%.6f,%.9e,%.9e,%d,%.9e,%d\n", w.totals.iterations, w.totals.solves,
                  w.totals.capped, timing ? w.totals.seconds : 0.0, w.phi_start, w.phi_end, w.stalls, w.alpha,
                  w.retrain ? 1 : 0);
    os << w.cycle << ',' << w.window << ',' << w.frequency << ',' << fwi::omega_set(s, sch.window(w.frequency)) << buf;
  }
}

inline int cmd_invert(const ExperimentConfig& c, Mode mode, int threads = 1, const Log& log = {}) {
  std::unique_ptr<nn::EncoderSolver<float>> net;
  if (mode != Mode::VCycleOnly) {
    if (c.training.checkpoint.empty()) throw ConfigError("training.checkpoint: required for mode " + std::string(to_string(mode)));
    if (!fs::exists(c.training.checkpoint)) throw ConfigError("training.checkpoint: " + c.training.checkpoint + " does not exist");
    net = std::make_unique<nn::EncoderSolver<float>>(nn::load_checkpoint<float>(c.training.checkpoint));
  }
  fs::create_directories(c.out_dir);
  write_config_copy(c, c.out_dir, {{"command", "invert"}, {"mode", to_string(mode)}, {"threads", threads}});
  if (net) nn::save_checkpoint((fs::path(c.out_dir) / "initial.wkw").string(), *net);
  const InvertOutcome r = run_inversion(c, mode, net.get(), threads, c.out_dir, log);
  const fs::path d(c.out_dir);
  {
    std::ofstream os((d / "history.csv").string(), std::ios::binary);
    fwi::write_history_csv_header(os);
    for (const auto& row : r.result.history) fwi::write_history_csv_row(os, row, c.timing);
  }
  {
    std::ofstream os((d / "windows.csv").string(), std::ios::binary);
    write_windows_csv(os, r.result, build_survey(c), c.schedule, c.timing);
  }
  if (mode == Mode::Retrain) {
    std::ofstream os((d / "retrain.csv").string(), std::ios::binary);
    nn::write_retrain_csv_header(os);
    for (const auto& rep : r.retrains) nn::write_retrain_csv_row(os, rep, c.timing);
  }
  int stalls = 0;
  for (const auto& w : r.result.windows) stalls += w.stalls;
  json s = {{"mode", to_string(mode)},
            {"seed", c.seed},
            {"windows", r.result.windows.size()},
            {"total_fgmres_iterations", r.result.totals.iterations},
            {"total_solves", r.result.totals.solves},
            {"capped_solves", r.result.totals.capped},
            {"solve_seconds", c.timing ? r.result.totals.seconds : 0.0},
            {"retrain_seconds", c.timing ? r.retrain_seconds : 0.0},
            {"wall_seconds", c.timing ? r.seconds : 0.0},
            {"stalls", stalls},
            {"rms_error_initial", r.rms_initial},
            {"rms_error_final", r.rms_final},
            {"rms_reduction", r.rms_initial > 0 ? 1.0 - r.rms_final / r.rms_initial : 0.0},
            {"exit_code", r.exit_code}};
  write_text((d / "summary.json").string(), s.dump(2) + "\n");
  return r.exit_code;
}

// ---------------------------------------------------------------------------------------------
// report

struct RunWindow {
  std::string key;  // cycle,window,frequency,omega_set
  double iterations = 0.0;
  double seconds = 0.0;
};

struct RunSummary {
  std::string dir;
  std::string mode;
  std::vector<RunWindow> windows;
};

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline RunSummary read_run(const std::string& dir) {
  RunSummary r;
  r.dir = dir;
  std::ifstream sj((fs::path(dir) / "summary.json").string());
  if (!sj) throw ConfigError(dir + ": no summary.json (not an invert run directory)");
  json s;
  try {
    sj >> s;
    r.mode = s.at("mode").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(dir + "/summary.json: " + e.what());
  }
  std::ifstream wc((fs::path(dir) / "windows.csv").string());
  if (!wc) throw ConfigError(dir + ": no windows.csv");
  std::string line;
  std::getline(wc, line);
  while (std::getline(wc, line)) {
    const auto f = split_csv(line);
    if (f.size() < 8) throw ConfigError(dir + "/windows.csv: malformed row '" + line + "'");
    r.windows.push_back({f[0] + "," + f[1] + "," + f[2] + "," + f[3], std::stod(f[4]), std::stod(f[7])});
  }
  return r;
}

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    for (double x : v) m.stddev += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(m.stddev / static_cast<double>(v.size() - 1));
  }
  return m;
}

struct ModeTotals {
  std::string mode;
  int runs = 0;
  MeanStd iterations, seconds;
  double iter_speedup_pct = 0.0;
  double time_speedup_pct = 0.0;
};

struct Report {
  std::string reference;
  std::vector<ModeTotals> modes;
  std::string csv;
  std::string text;
};

/// Per-window mean and standard deviation of iterations and seconds for each mode, and
/// speed-ups 1 - total(mode) / total(reference). The reference is frozen when present,
/// otherwise the mode of the first run.
inline Report build_report(const std::vector<RunSummary>& runs) {
  if (runs.empty()) throw ConfigError("report: no run directories");
  for (const auto& r : runs) {
    bool same = r.windows.size() == runs[0].windows.size();
    for (std::size_t i = 0; same && i < r.windows.size(); ++i) same = r.windows[i].key == runs[0].windows[i].key;
    if (!same) throw ConfigError("report: " + r.dir + " has a different schedule than " + runs[0].dir);
  }
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunSummary*>> by_mode;
  for (const auto& r : runs) {
    if (!by_mode.count(r.mode)) order.push_back(r.mode);
    by_mode[r.mode].push_back(&r);
  }
  Report rep;
  rep.reference = by_mode.count("frozen") ? "frozen" : order.front();
  std::ostringstream csv, txt;
  csv << "mode,window_key,runs,iters_mean,iters_std,seconds_mean,seconds_std\n";
  char buf[256];
  std::map<std::string, ModeTotals> totals;
  for (const auto& mode : order) {
    const auto& rs = by_mode[mode];
    std::vector<double> it_tot(rs.size(), 0.0), s_tot(rs.size(), 0.0);
    for (std::size_t w = 0; w < runs[0].windows.size(); ++w) {
      std::vector<double> it, sec;
      for (std::size_t k = 0; k < rs.size(); ++k) {
        it.push_back(rs[k]->windows[w].iterations);
        sec.push_back(rs[k]->windows[w].seconds);
        it_tot[k] += it.back();
        s_tot[k] += sec.back();
      }
      const MeanStd a = mean_std(it), b = mean_std(sec);
      std::snprintf(buf, sizeof buf, ",\"%s\",%zu,%.6e,%.6e,%.6e,%.6e\n", runs[0].windows[w].key.c_str(), rs.size(), a.mean,
                    a.stddev, b.mean, b.stddev);
      csv << mode << buf;
    }
    ModeTotals t;
    t.mode = mode;
    t.runs = static_cast<int>(rs.size());
    t.iterations = mean_std(it_tot);
    t.seconds = mean_std(s_tot);
    totals[mode] = t;
  }
  const ModeTotals& ref = totals[rep.reference];
  csv << "\nmode,reference,runs,total_iters_mean,total_iters_std,total_seconds_mean,total_seconds_std,iter_speedup_pct,"
         "time_speedup_pct\n";
  txt << "reference mode: " << rep.reference << "\n";
  std::snprintf(buf, sizeof buf, "%-12s %5s %16s %14s %12s %12s\n", "mode", "runs", "fgmres_iters", "seconds",
                "iter_speedup", "time_speedup");
  txt << buf;
  for (const auto& mode : order) {
    ModeTotals& t = totals[mode];
    t.iter_speedup_pct = ref.iterations.mean > 0 ? 100.0 * (1.0 - t.iterations.mean / ref.iterations.mean) : 0.0;
    t.time_speedup_pct = ref.seconds.mean > 0 ? 100.0 * (1.0 - t.seconds.mean / ref.seconds.mean) : 0.0;
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%.6e,%.6e,%.6e,%.6e,%.2f,%.2f\n", mode.c_str(), rep.reference.c_str(),
                  t.runs, t.iterations.mean, t.iterations.stddev, t.seconds.mean, t.seconds.stddev, t.iter_speedup_pct,
                  t.time_speedup_pct);
    csv << buf;
    std::snprintf(buf, sizeof buf, "%-12s %5d %16.1f %14.2f %11.2f%% %11.2f%%\n", mode.c_str(), t.runs,
                  t.iterations.mean, t.seconds.mean, t.iter_speedup_pct, t.time_speedup_pct);
    txt << buf;
    rep.modes.push_back(t);
  }
  rep.csv = csv.str();
  rep.text = txt.str();
  return rep;
}

inline int cmd_report(const std::vector<std::string>& dirs, const std::string& out_dir, std::ostream& os) {
  std::vector<RunSummary> runs;
  for (const auto& d : dirs) runs.push_back(read_run(d));
  const Report r = build_report(runs);
  os << r.text;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text((fs::path(out_dir) / "report.csv").string(), r.csv);
    write_text((fs::path(out_dir) / "report.txt").string(), r.text);
  }
  return kOk;
}

}  // namespace wavekit::app
