#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wavekit/app/runs.hpp"

namespace wk = wavekit;
namespace app = wavekit::app;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wavekit_test_app_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Desk-top sized experiment that runs in a few seconds.
json tiny_config(const fs::path& out) {
  return {{"grid", {{"extent_x", 480.0}, {"extent_y", 240.0}, {"v_min", 1500.0}}},
          {"survey",
           {{"sources", 2},
            {"receivers", 9},
            {"depth", 30.0},
            {"margin", 60.0},
            {"noise_fraction", 0.01},
            {"true_model", {{"kind", "salt_blob"}, {"blob_radius", 80.0}, {"blob_velocity", 2600.0}}},
            {"initial_model", {{"kind", "ramp"}}},
            {"velocity_bounds", {1400.0, 4000.0}}}},
          {"frequencies", {2.5, 5.0}},
          {"schedule",
           {{"cycles", json::array({{{"start", 1}, {"end", 2}, {"regularizer", "spline"}, {"reg_fraction", 0.01}}})},
            {"window_size", 1},
            {"gn_iterations", 2},
            {"cg_iterations", 2},
            {"encoding_p", 2}}},
          {"retrain", {{"epochs", 2}, {"data_epochs", 1}, {"initial_size", 2}, {"final_size", 4}, {"batch_size", 2}}},
          {"training", {{"samples", 8}, {"epochs", 1}, {"batch_size", 4}}},
          {"output", {{"dir", out.string()}, {"timing", false}}},
          {"seed", 5}};
}

std::string config_error(const json& j) {
  try {
    app::parse_config(j);
  } catch (const app::ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsDescribeTheDeskExperiment) {
  const auto c = app::parse_config(json::object());
  EXPECT_EQ(c.frequencies_hz.size(), 6u);
  EXPECT_EQ(c.finest_grid().nx, 65);
  EXPECT_EQ(c.finest_grid().ny, 33);
  EXPECT_EQ(c.training.samples, 2000);
  EXPECT_EQ(c.training.epochs, 40);
  EXPECT_EQ(c.schedule.cg_iterations, 5);
  EXPECT_EQ(c.schedule.encoding_p, 16);
  EXPECT_EQ(c.retrain.final_size, 1024);
  EXPECT_DOUBLE_EQ(c.noise_fraction, 0.01);
}

TEST(Config, ShippedDeskConfigParses) {
  const auto c = app::load_config(WAVEKIT_SOURCE_DIR "/tools/configs/desk.json");
  ASSERT_EQ(c.schedule.cycles.size(), 2u);
  EXPECT_EQ(c.schedule.cycles[1].regularizer, wk::fwi::RegularizerKind::Diffusion);
  EXPECT_EQ(c.schedule.encoding_p, 4);
  EXPECT_EQ(c.sources, 8);
  EXPECT_DOUBLE_EQ(c.training.lr, 1e-3);
  EXPECT_EQ(c.finest_grid().nx, 65);
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(config_error({{"survey", {{"sources", 0}}}}).rfind("survey.sources:", 0), 0u);
  EXPECT_EQ(config_error({{"grid", {{"v_min", "fast"}}}}).rfind("grid.v_min: wrong type", 0), 0u);
  EXPECT_EQ(config_error({{"output", {{"colour", true}}}}).rfind("output.colour: unknown field", 0), 0u);
  EXPECT_EQ(config_error({{"frequencies", {3.0, 2.0}}}).rfind("frequencies:", 0), 0u);
  EXPECT_EQ(config_error({{"schedule", {{"cycles", json::array({{{"start", 1}, {"end", 9}}})}}}}).rfind(
                "schedule.cycles[0].start:", 0),
            0u);
  EXPECT_EQ(config_error({{"schedule", {{"cycles", json::array({{{"end", 1}}})}}}}), "schedule.cycles[0].start: missing");
  EXPECT_EQ(config_error({{"survey", {{"true_model", {{"kind", "marmousi"}}}}}}).rfind("survey.true_model.kind:", 0), 0u);
  EXPECT_EQ(config_error({{"retrain", {{"final_size", 100}}}}).rfind("retrain:", 0), 0u);
  EXPECT_EQ(config_error({{"schedule", {{"cycles", json::array({{{"start", 1}, {"end", 1}, {"regularizer", "tv"}}})}}}})
                .rfind("schedule.cycles[0].regularizer:", 0),
            0u);
}

TEST(Config, RelativePathsResolveAgainstConfigFile) {
  const fs::path d = scratch("paths");
  std::ofstream(d / "c.json") << R"({"training": {"checkpoint": "w.wkw"}, "output": {"dir": "out"}})";
  const auto c = app::load_config((d / "c.json").string());
  EXPECT_EQ(fs::path(c.training.checkpoint), d / "w.wkw");
  EXPECT_EQ(fs::path(c.out_dir), d / "out");
  std::ofstream(d / "bad.json") << "{ not json";
  EXPECT_THROW(app::load_config((d / "bad.json").string()), app::ConfigError);
}

TEST(Media, BuiltInModels) {
  const wk::RegularGrid2D g(33, 17, 30.0, 30.0);
  app::ModelSpec ramp;
  const auto r = app::build_model(ramp, g);
  EXPECT_DOUBLE_EQ(r.values[g.index(5, 0)], 1.0 / (1800.0 * 1800.0));
  EXPECT_DOUBLE_EQ(r.values[g.index(5, 16)], 1.0 / (3000.0 * 3000.0));

  app::ModelSpec layers{"layered"};
  layers.velocities = {1500.0, 2000.0};
  const auto l = app::build_model(layers, g);
  EXPECT_DOUBLE_EQ(l.values[g.index(0, 7)], 1.0 / (1500.0 * 1500.0));
  EXPECT_DOUBLE_EQ(l.values[g.index(0, 9)], 1.0 / (2000.0 * 2000.0));

  app::ModelSpec blob{"salt_blob"};
  blob.blob_velocity = 4500.0;
  blob.blob_radius = 100.0;
  const auto b = app::build_model(blob, g);
  EXPECT_NEAR(1.0 / std::sqrt(b.values[g.index(16, 8)]), 4500.0, 1e-9);
  EXPECT_NEAR(b.values[g.index(0, 8)], r.values[g.index(0, 8)], 1e-3 * r.values[g.index(0, 8)]);
}

TEST(Media, FileModelIsResampled) {
  const fs::path d = scratch("media");
  const wk::RegularGrid2D coarse(5, 3, 120.0, 120.0), fine(9, 5, 60.0, 60.0);
  wk::save_field((d / "m.wkf").string(), wk::SlownessSquaredField(coarse, 2e-7));
  app::ModelSpec f{"file"};
  f.path = (d / "m.wkf").string();
  const auto m = app::build_model(f, fine);
  EXPECT_EQ(m.grid, fine);
  for (double v : m.values) EXPECT_DOUBLE_EQ(v, 2e-7);
}

TEST(Images, PgmHeaderAndScaling) {
  const fs::path d = scratch("pgm");
  const wk::RegularGrid2D g(3, 3, 1.0, 1.0);
  app::write_pgm((d / "a.pgm").string(), wk::RealField(g, {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 8.0}));
  const std::string s = slurp(d / "a.pgm");
  ASSERT_EQ(s.substr(0, 11), "P5\n3 3\n255\n");
  ASSERT_EQ(s.size(), 20u);
  EXPECT_EQ(static_cast<unsigned char>(s[11]), 0);
  EXPECT_EQ(static_cast<unsigned char>(s[15]), 128);
  EXPECT_EQ(static_cast<unsigned char>(s[19]), 255);
  app::write_pgm((d / "b.pgm").string(), wk::RealField(g, std::vector<double>(9, 1.0)));
  EXPECT_EQ(static_cast<unsigned char>(slurp(d / "b.pgm")[11]), 128);
}

TEST(Report, SelfComparisonIsZeroAndSpeedupSign) {
  app::RunSummary a{"a", "frozen", {{"1,1,1,x", 100.0, 2.0}, {"1,2,2,y", 300.0, 4.0}}};
  app::RunSummary b{"b", "retrain", {{"1,1,1,x", 50.0, 1.0}, {"1,2,2,y", 150.0, 3.0}}};
  const auto self = app::build_report({a, a});
  ASSERT_EQ(self.modes.size(), 1u);
  EXPECT_EQ(self.modes[0].iter_speedup_pct, 0.0);
  EXPECT_EQ(self.modes[0].iterations.stddev, 0.0);
  const auto cmp = app::build_report({b, a});
  EXPECT_EQ(cmp.reference, "frozen");
  EXPECT_DOUBLE_EQ(cmp.modes[0].iter_speedup_pct, 50.0);
  EXPECT_DOUBLE_EQ(cmp.modes[0].time_speedup_pct, 100.0 * (1.0 - 4.0 / 6.0));
  app::RunSummary c = b;
  c.windows.pop_back();
  EXPECT_THROW(app::build_report({a, c}), app::ConfigError);
  c = b;
  c.windows[1].key = "1,2,2,z";
  EXPECT_THROW(app::build_report({a, c}), app::ConfigError);
}

TEST(Runs, TrainInvertReportAreReproducible) {
  const fs::path d = scratch("runs");
  json j = tiny_config(d / "train");
  auto cfg = app::parse_config(j);
  ASSERT_EQ(app::cmd_train(cfg), app::kOk);
  ASSERT_TRUE(fs::exists(d / "train" / "checkpoint.wkw"));
  const std::string loss = slurp(d / "train" / "train_loss.csv");
  cfg.out_dir = (d / "train2").string();
  ASSERT_EQ(app::cmd_train(cfg), app::kOk);
  EXPECT_EQ(slurp(d / "train2" / "train_loss.csv"), loss);

  j["training"]["checkpoint"] = (d / "train" / "checkpoint.wkw").string();
  for (const char* mode : {"retrain", "frozen", "vcycle_only"}) {
    for (int rep = 0; rep < 2; ++rep) {
      auto c = app::parse_config(j);
      c.out_dir = (d / (std::string(mode) + std::to_string(rep))).string();
      const int rc = app::cmd_invert(c, app::parse_mode(mode));
      EXPECT_TRUE(rc == app::kOk || (rc == app::kCapsHit && std::string(mode) == "frozen")) << mode;
    }
    const fs::path r0 = d / (std::string(mode) + "0"), r1 = d / (std::string(mode) + "1");
    for (const char* f : {"history.csv", "windows.csv", "summary.json"})
      EXPECT_EQ(slurp(r0 / f), slurp(r1 / f)) << mode << " " << f;
    EXPECT_TRUE(fs::exists(r0 / "models" / "window_02.wkf"));
    EXPECT_TRUE(fs::exists(r0 / "images" / "final.pgm"));
  }
  EXPECT_EQ(slurp(d / "retrain0" / "retrain.csv"), slurp(d / "retrain1" / "retrain.csv"));
  EXPECT_FALSE(fs::exists(d / "frozen0" / "retrain.csv"));

  std::ostringstream os;
  ASSERT_EQ(app::cmd_report({(d / "frozen0").string(), (d / "retrain0").string(), (d / "frozen1").string()},
                            (d / "report").string(), os),
            app::kOk);
  EXPECT_NE(os.str().find("reference mode: frozen"), std::string::npos);
  EXPECT_TRUE(fs::exists(d / "report" / "report.csv"));

  auto no_ckpt = app::parse_config(tiny_config(d / "x"));
  EXPECT_THROW(app::cmd_invert(no_ckpt, app::Mode::Frozen), app::ConfigError);
  EXPECT_THROW(app::parse_mode("turbo"), app::ConfigError);
  EXPECT_THROW(app::read_run((d / "train").string()), app::ConfigError);
}

#ifdef WAVEKIT_CLI
TEST(Cli, ExitCodes) {
  const fs::path d = scratch("cli");
  const std::string cli = WAVEKIT_CLI;
  auto run = [&](const std::string& args) {
    const int s = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  std::ofstream(d / "bad.json") << R"({"survey": {"sources": -1}})";
  EXPECT_EQ(run("invert --config " + (d / "bad.json").string()), app::kConfigError);
  EXPECT_EQ(run("invert --config " + (d / "missing.json").string()), app::kConfigError);
  EXPECT_EQ(run("invert --mode turbo --config " + (d / "bad.json").string()), app::kConfigError);
  std::ofstream(d / "nock.json") << tiny_config(d / "out").dump();
  EXPECT_EQ(run("invert --mode frozen --config " + (d / "nock.json").string()), app::kConfigError);
  EXPECT_EQ(run("report " + d.string()), app::kConfigError);
  EXPECT_EQ(run("--help"), 0);
}
#endif
