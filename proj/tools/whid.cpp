#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "whid/commands.hpp"

int main(int argc, char** argv) {
  using namespace whid;

  CLI::App app{"Wiener-Hammerstein channel identification experiments"};
  app.require_subcommand(1);

  std::string config_path;
  cli::RunOptions run;
  std::string out_dir = "out";
  std::uint64_t seed = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI experiment configuration")->required();
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "master seed (overrides run.seed)");
    sub->add_option("--jobs", run.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_flag("--gnuplot", run.gnuplot, "also write gnuplot scripts next to the CSV files");
  };

  auto* design = app.add_subcommand("design-pilot", "write x1, x2, x3 and a budget report");
  auto* identify = app.add_subcommand("identify", "run the three-step estimator and score it");
  auto* volterra = app.add_subcommand("volterra", "reduced-kernel Volterra baseline");
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over one plan parameter");
  for (auto* sub : {design, identify, volterra, sweep}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kUsage;
  }

  return cli::guarded(std::cerr, [&] {
    const ExperimentConfig cfg = load_config(config_path);
    run.out = out_dir;
    for (auto* sub : {design, identify, volterra, sweep})
      if (sub->count("--seed") > 0) run.seed = seed;
    if (*design) cli::design_pilot(cfg, run);
    if (*identify) cli::identify(cfg, run);
    if (*volterra) cli::volterra(cfg, run);
    if (*sweep) cli::sweep(cfg, run);
  });
}
