#include <CLI11.hpp>
#include <iostream>

#include "bmap_lab/cli.hpp"

namespace {

const char* describe(bmap::cli::Command c) {
  using bmap::cli::Command;
  switch (c) {
    case Command::spectral_report: return "lambda, theta*, critical speed and extinction vector";
    case Command::simulate: return "Simulate replicas and record counts, minima, W and Z";
    case Command::velocity: return "Leftmost-particle speed against the critical speed";
    case Command::martingales: return "Additive and derivative martingale means";
    case Command::many_to_one: return "Many-to-one identity for the test function catalog";
    case Command::spine_speed: return "Speed of the spine under the tilted measure";
    case Command::fkpp_front: return "FKPP front speed from step or exp_tail data";
    case Command::wave_compare: return "Monte Carlo travelling wave, martingale-problem check and PDE comparison";
    case Command::representation_check: return "Branching product expectation against the FKPP solution";
    case Command::plot_data: return "Reshape results in --out into long-format plot CSVs";
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace bmap::cli;
  CLI::App app{"bmap-lab: branching Markov additive process experiments"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  for (int k = 0; k < argc; ++k) cfg.argv.emplace_back(argv[k]);

  for (Command cmd : all_commands()) {
    auto* sub = app.add_subcommand(std::string(command_name(cmd)), describe(cmd));
    sub->callback([&cfg, cmd] { cfg.command = cmd; });
    sub->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
    if (cmd == Command::plot_data) continue;
    sub->add_option("--model", cfg.model_path, "Model JSON file")->required();
    sub->add_option("--theta", cfg.theta, "Tilt parameter");
    sub->add_option("--horizon", cfg.horizon, "Time horizon");
    sub->add_option("--replicas", cfg.replicas, "Monte Carlo replicas");
    sub->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
    sub->add_option("--grid", cfg.grid, "Grid as xmin,xmax,n");
    sub->add_option("--dt", cfg.dt, "PDE time step");
    sub->add_option("--dx", cfg.dx, "PDE grid spacing");
    sub->add_option("--workers", cfg.workers, "Worker threads")->envname("BMAP_LAB_WORKERS")->capture_default_str();
    sub->add_flag("--gate", cfg.gate, "Exit with status 3 when the acceptance gate fails");
    sub->add_option("--init", cfg.init, "Initial data: step or exp_tail")->capture_default_str();
    sub->add_option("--g", cfg.functions, "Many-to-one test function ids (one, type:<j>, exp-abs)");
    sub->add_option("--times", cfg.times, "Observation or check times");
    sub->add_option("--t1", cfg.t1, "Start of the front fit window");
    sub->add_option("--t2", cfg.t2, "End of the front fit window / PDE horizon");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << R"({"error":"validation","message":")" << e.what() << "\"}\n";
    return kValidation;
  }
  return run(cfg, std::cout, std::cerr);
}
