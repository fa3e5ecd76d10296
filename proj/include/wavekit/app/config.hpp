#pragma once

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavekit/core/field_io.hpp"
#include "wavekit/core/transfer.hpp"
#include "wavekit/data/training_data.hpp"
#include "wavekit/fwi/continuation.hpp"
#include "wavekit/nn/retraining.hpp"

namespace wavekit::app {

using json = nlohmann::json;

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Typed access to one JSON object with dotted field paths in every error.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  [[nodiscard]] std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) const {
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key) + ": wrong type (" + j_.at(key).dump() + ")");
    }
  }

  template <class T>
  T require(const std::string& key) const {
    if (!j_.contains(key)) throw ConfigError(field(key) + ": missing");
    return get<T>(key, T{});
  }

  [[nodiscard]] Section sub(const std::string& key) const {
    static const json empty = json::object();
    return j_.contains(key) ? Section(j_.at(key), field(key)) : Section(empty, field(key));
  }

  [[nodiscard]] const json& raw(const std::string& key) const { return j_.at(key); }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!ok.count(it.key())) throw ConfigError(field(it.key()) + ": unknown field");
  }

  void check(bool ok, const std::string& key, const std::string& what) const {
    if (!ok) throw ConfigError(field(key) + ": " + what);
  }

 private:
  const json& j_;
  std::string path_;
};

/// Built-in or file-backed medium. Velocities in m/s, positions in meters (depth down).
struct ModelSpec {
  std::string kind = "ramp";  // layered | salt_blob | ramp | file
  double v_top = 1800.0;
  double v_bottom = 3000.0;
  std::vector<double> velocities{1800.0, 2300.0, 2900.0};
  double blob_x = -1.0;  // -1: centre of the extent
  double blob_z = -1.0;
  double blob_radius = 200.0;
  double blob_velocity = 4000.0;
  std::string path;
};

/// Velocity of a built-in medium at (x, z).
inline double model_velocity(const ModelSpec& s, Extent e, double x, double z) {
  const double t = z / e.y;
  const double ramp = s.v_top + (s.v_bottom - s.v_top) * t;
  if (s.kind == "ramp") return ramp;
  if (s.kind == "layered") {
    const std::size_t n = s.velocities.size();
    return s.velocities[std::min(n - 1, static_cast<std::size_t>(t * static_cast<double>(n)))];
  }
  const double cx = s.blob_x < 0 ? 0.5 * e.x : s.blob_x, cz = s.blob_z < 0 ? 0.5 * e.y : s.blob_z;
  const double r2 = ((x - cx) * (x - cx) + (z - cz) * (z - cz)) / (s.blob_radius * s.blob_radius);
  return ramp + (s.blob_velocity - ramp) * std::exp(-0.5 * r2);
}

inline SlownessSquaredField build_model(const ModelSpec& s, const RegularGrid2D& g) {
  if (s.kind == "file") {
    const AnyField f = load_field(s.path);
    if (!std::holds_alternative<RealField>(f)) throw ConfigError(s.path + ": expected a real field of m");
    const auto& r = std::get<RealField>(f);
    return resample(SlownessSquaredField(r.grid, r.values), g);
  }
  std::vector<double> v(g.size());
  const Extent e{g.extent_x(), g.extent_y()};
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) v[g.index(ix, iy)] = model_velocity(s, e, ix * g.hx, iy * g.hy);
  return SlownessSquaredField::from_velocity(g, v);
}

struct TrainingSection {
  int samples = 2000;
  int epochs = 40;
  int batch_size = 16;
  double lr = 1e-3;
  int samples_per_medium = 4;
  double frequency_hz = -1.0;  // -1: highest survey frequency
  VelocityRange v_top{1500.0, 2500.0};
  VelocityRange v_bottom{2500.0, 4500.0};
  int min_iter = 1;
  int max_iter = 10;
  std::string checkpoint;  // weights used by invert; required unless the mode is vcycle_only
};

struct ExperimentConfig {
  Extent extent{1920.0, 960.0};
  double v_min = 1500.0;
  int abl_thickness = -1;

  int sources = 8;
  int receivers = 64;
  double depth = 30.0;
  double margin = 60.0;
  double noise_fraction = 0.01;
  ModelSpec true_model{"layered"};
  ModelSpec initial_model{"ramp"};
  double v_lower = 1400.0;
  double v_upper = 5000.0;

  std::vector<double> frequencies_hz{2.0, 2.5, 3.0, 3.5, 4.0, 5.0};
  fwi::FcSchedule schedule;
  int max_fgmres = 1000;

  nn::RetrainConfig retrain;
  TrainingSection training;

  std::string out_dir = "run";
  bool timing = true;
  bool images = true;

  std::uint64_t seed = 1;
  std::filesystem::path base_dir;  // relative paths resolve against the config file
  json source = json::object();

  [[nodiscard]] double training_hz() const {
    return training.frequency_hz > 0 ? training.frequency_hz : frequencies_hz.back();
  }
  [[nodiscard]] RegularGrid2D finest_grid() const { return grid_for_frequency(frequencies_hz.back(), v_min, extent); }
  [[nodiscard]] std::string resolve(const std::string& p) const {
    if (p.empty()) return p;
    const std::filesystem::path q(p);
    return q.is_absolute() || base_dir.empty() ? p : (base_dir / q).string();
  }
};

inline ModelSpec parse_model(const Section& s) {
  s.allow({"kind", "v_top", "v_bottom", "velocities", "blob_x", "blob_z", "blob_radius", "blob_velocity", "path"});
  ModelSpec m;
  m.kind = s.get<std::string>("kind", m.kind);
  s.check(m.kind == "layered" || m.kind == "salt_blob" || m.kind == "ramp" || m.kind == "file", "kind",
          "expected layered, salt_blob, ramp or file");
  m.v_top = s.get("v_top", m.v_top);
  m.v_bottom = s.get("v_bottom", m.v_bottom);
  m.velocities = s.get("velocities", m.velocities);
  m.blob_x = s.get("blob_x", m.blob_x);
  m.blob_z = s.get("blob_z", m.blob_z);
  m.blob_radius = s.get("blob_radius", m.blob_radius);
  m.blob_velocity = s.get("blob_velocity", m.blob_velocity);
  m.path = s.get<std::string>("path", "");
  s.check(m.v_top > 0 && m.v_bottom > 0, "v_top", "velocities must be positive");
  s.check(!m.velocities.empty(), "velocities", "need at least one layer");
  for (double v : m.velocities) s.check(v > 0, "velocities", "velocities must be positive");
  s.check(m.blob_radius > 0 && m.blob_velocity > 0, "blob_radius", "blob radius and velocity must be positive");
  s.check(m.kind != "file" || !m.path.empty(), "path", "required for kind file");
  return m;
}

inline VelocityRange parse_range(const Section& s, const std::string& key, VelocityRange def) {
  if (!s.has(key)) return def;
  const auto v = s.get<std::vector<double>>(key, {});
  s.check(v.size() == 2 && v[0] > 0 && v[1] >= v[0], key, "expected [lo, hi] with 0 < lo <= hi");
  return {v[0], v[1]};
}

/// Parses and validates an experiment description. `base_dir` anchors relative paths.
inline ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  c.source = j;
  c.base_dir = base_dir;
  const Section root(j, "");
  root.allow({"grid", "survey", "frequencies", "schedule", "retrain", "training", "output", "seed"});
  c.seed = root.get<std::uint64_t>("seed", c.seed);

  const Section g = root.sub("grid");
  g.allow({"extent_x", "extent_y", "v_min", "abl_thickness"});
  c.extent.x = g.get("extent_x", c.extent.x);
  c.extent.y = g.get("extent_y", c.extent.y);
  c.v_min = g.get("v_min", c.v_min);
  c.abl_thickness = g.get("abl_thickness", c.abl_thickness);
  g.check(c.extent.x > 0 && c.extent.y > 0, "extent_x", "extent must be positive");
  g.check(c.v_min > 0, "v_min", "must be positive");

  const Section s = root.sub("survey");
  s.allow({"sources", "receivers", "depth", "margin", "noise_fraction", "true_model", "initial_model", "velocity_bounds"});
  c.sources = s.get("sources", c.sources);
  c.receivers = s.get("receivers", c.receivers);
  c.depth = s.get("depth", c.depth);
  c.margin = s.get("margin", c.margin);
  c.noise_fraction = s.get("noise_fraction", c.noise_fraction);
  s.check(c.sources >= 1, "sources", "must be >= 1");
  s.check(c.receivers >= 1, "receivers", "must be >= 1");
  s.check(c.depth >= 0 && c.depth <= c.extent.y, "depth", "must lie inside the extent");
  s.check(c.margin >= 0 && 2 * c.margin < c.extent.x, "margin", "must leave a positive aperture");
  s.check(c.noise_fraction >= 0, "noise_fraction", "must be >= 0");
  if (s.has("true_model")) c.true_model = parse_model(s.sub("true_model"));
  if (s.has("initial_model")) c.initial_model = parse_model(s.sub("initial_model"));
  c.true_model.path = c.resolve(c.true_model.path);
  c.initial_model.path = c.resolve(c.initial_model.path);
  const VelocityRange b = parse_range(s, "velocity_bounds", {c.v_lower, c.v_upper});
  c.v_lower = b.lo;
  c.v_upper = b.hi;

  if (root.has("frequencies")) {
    c.frequencies_hz = root.get<std::vector<double>>("frequencies", {});
    root.check(!c.frequencies_hz.empty(), "frequencies", "need at least one frequency");
    for (std::size_t i = 0; i < c.frequencies_hz.size(); ++i) {
      root.check(c.frequencies_hz[i] > 0, "frequencies", "must be positive");
      root.check(i == 0 || c.frequencies_hz[i] > c.frequencies_hz[i - 1], "frequencies", "must be strictly increasing");
    }
  }
  const int nf = static_cast<int>(c.frequencies_hz.size());

  const Section sc = root.sub("schedule");
  sc.allow({"cycles", "window_size", "gn_iterations", "cg_iterations", "encoding_p", "max_fgmres"});
  c.schedule.window_size = sc.get("window_size", 1);
  c.schedule.gn_iterations = sc.get("gn_iterations", 5);
  c.schedule.cg_iterations = sc.get("cg_iterations", 5);
  c.schedule.encoding_p = sc.get("encoding_p", 16);
  c.max_fgmres = sc.get("max_fgmres", c.max_fgmres);
  sc.check(c.max_fgmres >= 1, "max_fgmres", "must be >= 1");
  if (sc.has("cycles")) {
    const json& cy = sc.raw("cycles");
    sc.check(cy.is_array() && !cy.empty(), "cycles", "expected a non-empty array");
    for (std::size_t k = 0; k < cy.size(); ++k) {
      const Section e(cy[k], sc.field("cycles") + "[" + std::to_string(k) + "]");
      e.allow({"start", "end", "regularizer", "reg_fraction"});
      fwi::CycleSpec cs;
      cs.i_start = e.require<int>("start");
      cs.i_end = e.require<int>("end");
      try {
        cs.regularizer = fwi::parse_regularizer(e.get<std::string>("regularizer", "spline"));
      } catch (const std::invalid_argument& ex) {
        throw ConfigError(e.field("regularizer") + ": " + ex.what());
      }
      cs.reg_fraction = e.get("reg_fraction", 0.05);
      e.check(1 <= cs.i_start && cs.i_start <= cs.i_end && cs.i_end <= nf, "start",
              "need 1 <= start <= end <= " + std::to_string(nf));
      e.check(cs.reg_fraction >= 0, "reg_fraction", "must be >= 0");
      c.schedule.cycles.push_back(cs);
    }
  } else {
    c.schedule.cycles = {{1, nf, fwi::RegularizerKind::SplineSmoothing, 0.05}};
  }
  try {
    c.schedule.validate(nf);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const Section r = root.sub("retrain");
  r.allow({"epochs", "data_epochs", "initial_size", "final_size", "batch_size", "lr", "stride", "min_iter", "max_iter"});
  c.retrain.epochs = r.get("epochs", c.retrain.epochs);
  c.retrain.data_epochs = r.get("data_epochs", c.retrain.data_epochs);
  c.retrain.initial_size = r.get("initial_size", c.retrain.initial_size);
  c.retrain.final_size = r.get("final_size", c.retrain.final_size);
  c.retrain.batch_size = r.get("batch_size", c.retrain.batch_size);
  c.retrain.lr = r.get("lr", c.retrain.lr);
  c.retrain.stride = r.get("stride", c.retrain.stride);
  c.retrain.min_iter = r.get("min_iter", c.retrain.min_iter);
  c.retrain.max_iter = r.get("max_iter", c.retrain.max_iter);
  try {
    c.retrain.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("retrain: ") + e.what());
  }

  const Section t = root.sub("training");
  t.allow({"samples", "epochs", "batch_size", "lr", "samples_per_medium", "frequency_hz", "v_top", "v_bottom",
           "min_iter", "max_iter", "checkpoint"});
  auto& tr = c.training;
  tr.samples = t.get("samples", tr.samples);
  tr.epochs = t.get("epochs", tr.epochs);
  tr.batch_size = t.get("batch_size", tr.batch_size);
  tr.lr = t.get("lr", tr.lr);
  tr.samples_per_medium = t.get("samples_per_medium", tr.samples_per_medium);
  tr.frequency_hz = t.get("frequency_hz", tr.frequency_hz);
  tr.v_top = parse_range(t, "v_top", tr.v_top);
  tr.v_bottom = parse_range(t, "v_bottom", tr.v_bottom);
  tr.min_iter = t.get("min_iter", tr.min_iter);
  tr.max_iter = t.get("max_iter", tr.max_iter);
  tr.checkpoint = c.resolve(t.get<std::string>("checkpoint", ""));
  t.check(tr.samples >= 1, "samples", "must be >= 1");
  t.check(tr.epochs >= 0, "epochs", "must be >= 0");
  t.check(tr.batch_size >= 1, "batch_size", "must be >= 1");
  t.check(tr.lr > 0, "lr", "must be positive");
  t.check(tr.samples_per_medium >= 1, "samples_per_medium", "must be >= 1");
  t.check(1 <= tr.min_iter && tr.min_iter <= tr.max_iter, "min_iter", "need 1 <= min_iter <= max_iter");

  const Section o = root.sub("output");
  o.allow({"dir", "timing", "images"});
  c.out_dir = c.resolve(o.get<std::string>("dir", c.out_dir));
  c.timing = o.get("timing", c.timing);
  c.images = o.get("images", c.images);

  try {
    (void)grid_for_frequency(c.frequencies_hz.back(), c.v_min, c.extent);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j, std::filesystem::path(path).parent_path());
}

}  // namespace wavekit::app
