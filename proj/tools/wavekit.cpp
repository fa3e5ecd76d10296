#include <CLI11.hpp>

#include <iostream>

#include "wavekit/app/runs.hpp"

namespace app = wavekit::app;

int main(int argc, char** argv) {
  CLI::App cli{"wavekit: frequency-domain FWI with a learned Helmholtz preconditioner"};
  cli.require_subcommand(1);

  std::string config_path, mode = "retrain", out, checkpoint;
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<std::string> runs;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "output directory (overrides output.dir)");
  };
  CLI::App* train = cli.add_subcommand("train", "build the initial dataset and train the network");
  common(train);
  CLI::App* invert = cli.add_subcommand("invert", "simulate data and run frequency continuation");
  common(invert);
  invert->add_option("--checkpoint", checkpoint, "network weights (overrides training.checkpoint)");
  invert->add_option("--mode", mode, "preconditioner mode")->check(CLI::IsMember({"retrain", "frozen", "vcycle_only"}));
  CLI::App* report = cli.add_subcommand("report", "compare iteration counts across run directories");
  report->add_option("runs", runs, "invert run directories")->required();
  report->add_option("--out", out, "directory for report.csv");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : app::kConfigError;
  }

  const app::Log log = [](const std::string& s) { std::cerr << s << std::endl; };
  try {
    if (report->parsed()) return app::cmd_report(runs, out, std::cout);
    app::ExperimentConfig cfg = app::load_config(config_path);
    if (seed != 0) cfg.seed = seed;
    if (!out.empty()) cfg.out_dir = out;
    if (!checkpoint.empty()) cfg.training.checkpoint = checkpoint;
    if (train->parsed()) return app::cmd_train(cfg, threads, log);
    const int rc = app::cmd_invert(cfg, app::parse_mode(mode), threads, log);
    if (rc == app::kCapsHit) std::cerr << "frozen run completed with capped solves" << std::endl;
    return rc;
  } catch (const app::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return app::kConfigError;
  } catch (const wavekit::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << std::endl;
    return app::kSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
