#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "midcast/pipeline.hpp"

using namespace midcast;

int main(int argc, char** argv) {
  CLI::App app{"midterm stock prediction pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = -1;
  std::string out_dir;

  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--seed", seed, "override the config seed")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_option("--jobs", jobs, "worker pool size (0 = all cores)");
  app.add_option("--out", out_dir, "override the output directory");

  auto* synth = app.add_subcommand("synth", "emit the synthetic CSV");
  auto* train = app.add_subcommand("train", "train per-stock models");
  auto* predict = app.add_subcommand("predict", "run full-sequence predictions");
  auto* evaluate = app.add_subcommand("evaluate", "compute accuracy metrics");
  auto* allocate = app.add_subcommand("allocate", "portfolio allocation + backtest");
  auto* backtest = app.add_subcommand("backtest", "portfolio allocation + backtest");
  auto* report = app.add_subcommand("report", "print a summary of prior runs");
  auto* all = app.add_subcommand("all", "full pipeline");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig config = load_run_config(config_path);
    if (seed_set) config.seed = seed;
    if (jobs >= 0) config.jobs = jobs;
    if (!out_dir.empty()) config.output_dir = out_dir;

    if (all->parsed()) return run_pipeline(config);
    if (synth->parsed()) stage_synth(config);
    if (train->parsed()) stage_train(config);
    if (predict->parsed()) stage_predict(config);
    if (evaluate->parsed()) stage_evaluate(config);
    if (allocate->parsed() || backtest->parsed()) stage_backtest(config);
    if (report->parsed()) stage_report(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
