#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "bmap/errors.hpp"
#include "bmap_lab/cli.hpp"
#include "bmap_lab/csv.hpp"

namespace bmap::cli {
namespace {

namespace fs = std::filesystem;

void plot_martingales(const fs::path& dir, std::vector<fs::path>& written) {
  const CsvTable t = read_csv(dir / "martingales.csv");
  const std::size_t ct = t.column("t"), cr = t.column("replica"), cw = t.column("W"), cz = t.column("Z");
  const fs::path out = dir / "plot_martingales.csv";
  CsvWriter csv(out, {"t", "replica", "W", "Z"});
  for (const auto& row : t.rows) csv.cell(row[ct]).cell(row[cr]).cell(row[cw]).cell(row[cz]).end_row();
  written.push_back(out);
}

void plot_front(const fs::path& dir, std::vector<fs::path>& written) {
  const CsvTable t = read_csv(dir / "front.csv");
  std::ifstream in(dir / "fkpp_front.json");
  if (!in) throw ValidationError("front.csv present but fkpp_front.json missing");
  const auto doc = nlohmann::json::parse(in);
  std::vector<std::pair<double, double>> fit;  // (slope, intercept) per type
  for (const auto& f : doc.at("fits")) fit.emplace_back(f.at("speed").get<double>(), f.at("intercept").get<double>());
  const std::size_t ct = t.column("t"), cty = t.column("type"), cx = t.column("front_x");
  const fs::path out = dir / "plot_front.csv";
  CsvWriter csv(out, {"t", "type", "front_x", "fit_line"});
  for (const auto& row : t.rows) {
    const std::size_t type = std::stoul(row[cty]);
    if (type >= fit.size()) throw ValidationError("front.csv type without a fit");
    const double time = std::stod(row[ct]);
    csv.cell(row[ct]).cell(row[cty]).cell(row[cx]).cell(fit[type].second + fit[type].first * time).end_row();
  }
  written.push_back(out);
}

void plot_wave(const fs::path& dir, std::vector<fs::path>& written) {
  const CsvTable t = read_csv(dir / "wave_compare.csv");
  const std::size_t cx = t.column("x"), cty = t.column("type"), cm = t.column("phi_mc"), cp = t.column("phi_pde_shifted");
  const fs::path out = dir / "plot_wave.csv";
  CsvWriter csv(out, {"x", "type", "phi_mc", "phi_pde_shifted"});
  for (const auto& row : t.rows) csv.cell(row[cx]).cell(row[cty]).cell(row[cm]).cell(row[cp]).end_row();
  written.push_back(out);
}

}  // namespace

std::vector<fs::path> emit_plot_data(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("results directory " + dir.string() + " does not exist");
  std::vector<fs::path> written;
  if (fs::exists(dir / "martingales.csv")) plot_martingales(dir, written);
  if (fs::exists(dir / "front.csv")) plot_front(dir, written);
  if (fs::exists(dir / "wave_compare.csv")) plot_wave(dir, written);
  if (written.empty())
    throw ValidationError("no martingales.csv, front.csv or wave_compare.csv in " + dir.string());
  return written;
}

}  // namespace bmap::cli
