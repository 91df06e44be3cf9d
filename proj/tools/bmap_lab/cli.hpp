#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace bmap::cli {

enum class Command {
  spectral_report,
  simulate,
  velocity,
  martingales,
  many_to_one,
  spine_speed,
  fkpp_front,
  wave_compare,
  representation_check,
  plot_data,
};

std::string_view command_name(Command c);
std::optional<Command> parse_command(std::string_view name);
const std::vector<Command>& all_commands();

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2, kGateFailed = 3 };

struct ExperimentConfig {
  Command command = Command::spectral_report;
  std::filesystem::path model_path;
  std::optional<double> theta;
  std::optional<double> horizon;
  std::optional<std::size_t> replicas;
  std::uint64_t seed = 1;
  std::optional<std::string> grid;  // "xmin,xmax,n"
  std::optional<double> dt;
  std::optional<double> dx;
  std::filesystem::path out_dir = "bmap-out";
  std::size_t workers = 1;
  bool gate = false;
  std::string init = "step";           // step | exp_tail
  std::vector<std::string> functions;  // many-to-one test function ids; empty = catalog
  std::vector<double> times;           // observation / check times
  std::optional<double> t1;
  std::optional<double> t2;
  std::vector<std::string> argv;       // recorded in the manifest
};

// Runs one experiment, writing artifacts plus manifest.json into out_dir.
// Errors are reported on `err` as one JSON object per line.
int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

// Reshapes results found in `dir` into long-format plot_*.csv files and
// returns the paths written. Throws if nothing usable is present.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& dir);

}  // namespace bmap::cli
