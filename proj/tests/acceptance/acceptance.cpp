// Runs every acceptance criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion. Exits non-zero if any criterion fails.

#include <bmap/errors.hpp>
#include <bmap/fkpp.hpp>
#include <bmap/simulator.hpp>
#include <bmap/spectral.hpp>
#include <bmap/spine.hpp>
#include <bmap_lab/cli.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "support/test_support.hpp"

using namespace bmap;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const fs::path& work_root() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "bmap_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

std::string config_path(const std::string& name) { return std::string(BMAP_CONFIG_DIR) + "/" + name + ".json"; }

cli::ExperimentConfig command(cli::Command cmd, const std::string& model, const std::string& tag) {
  cli::ExperimentConfig cfg;
  cfg.command = cmd;
  cfg.model_path = config_path(model);
  cfg.out_dir = work_root() / tag;
  cfg.seed = 20240611;
  return cfg;
}

struct CliRun {
  int status = 0;
  std::string err;
  json manifest;
};

CliRun run_cli(const cli::ExperimentConfig& cfg) {
  std::ostringstream out, err;
  CliRun r;
  r.status = cli::run(cfg, out, err);
  r.err = err.str();
  std::ifstream f(cfg.out_dir / "manifest.json");
  if (f) f >> r.manifest;
  return r;
}

json read_json(const fs::path& p) {
  std::ifstream f(p);
  return json::parse(f);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool gate_passed(const CliRun& r) {
  return r.status == cli::kOk && r.manifest.contains("gate") && r.manifest["gate"].value("passed", false);
}

double theta_star_or(const ModelSpec& m, double fallback) {
  try {
    return theta_star(m);
  } catch (const AssumptionError&) {
    return fallback;
  }
}

// --- spectral ---------------------------------------------------------------

Verdict closed_form_agreement() {
  Rng rng(20240611);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const ModelSpec m = test::random_model(rng, 2, true, false);
    for (int a = 0; a < 10; ++a) {
      const double th = -2.0 + 4.0 * a / 9.0;
      double f[2];
      for (std::size_t i = 0; i < 2; ++i)
        f[i] = laplace_exponent(m.types[i].motion, th) + m.q(i, i) +
               m.types[i].branch_rate * (offspring_mean(m.types[i].offspring) - 1.0);
      const double closed = 0.5 * (f[0] + f[1] + std::sqrt((f[0] - f[1]) * (f[0] - f[1]) + 4.0 * m.q(0, 1) * m.q(1, 0)));
      worst = std::max(worst, std::abs(pf_eigenvalue(m, th) - closed) / (1.0 + std::abs(closed)));
    }
  }
  return {worst <= 1e-10, fmt("max |diff|/(1+|lambda|) = %.2e over 1000 cases", worst)};
}

Verdict lambda_prime_identity() {
  double worst = 0.0;
  const double h = 1e-5;
  for (const auto& name : test::catalog_names()) {
    const ModelSpec m = test::config(name);
    for (double th : {0.3, 0.8, 1.3, 1.9}) {
      const double eig = lambda_prime(m, th);
      const double fd = (pf_eigenvalue(m, th + h) - pf_eigenvalue(m, th - h)) / (2.0 * h);
      worst = std::max(worst, std::abs(eig - fd) / std::abs(fd));
    }
  }
  return {worst <= 1e-5, fmt("max relative error %.2e", worst)};
}

Verdict theta_star_fixed_point() {
  double worst = 0.0;
  std::size_t n = 0;
  for (const auto& name : test::catalog_names()) {
    const ModelSpec m = test::config(name);
    const double ts = theta_star(m);
    const SpectralReport s = spectral_report(m, ts);
    worst = std::max(worst, std::abs(s.lambda - ts * s.lambda_prime) / std::max(1.0, std::abs(s.lambda)));
    ++n;
  }
  const ModelSpec bbm = test::config("bbm");
  const double dt = std::abs(theta_star(bbm) - std::sqrt(2.0));
  const double dv = std::abs(regime_report(bbm).critical_speed - std::sqrt(2.0));
  return {worst <= 1e-8 && dt <= 1e-8 && dv <= 1e-8,
          fmt("max scaled residual %.2e over %zu models; BBM |theta*-sqrt2| = %.1e, |speed-sqrt2| = %.1e", worst, n, dt, dv)};
}

Verdict extinction_vector_check() {
  const ModelSpec m =
      ModelSpec::single_type({{1.0, 0.0, 0.0, {}}, 1.0, DiscreteLaw{{{0.0, 0.25}, {2.0, 0.75}}}});
  const double q = extinction_vector(m).q[0];
  SimConfig cfg;
  cfg.horizon = 25.0;
  cfg.observation_times = {25.0};
  cfg.replicas = 10000;
  cfg.master_seed = 20240611;
  const ExtinctionEstimate e = extinction_frequency(m, {}, cfg);
  const double z = (e.frequency - 1.0 / 3.0) / e.std_error;
  return {std::abs(q - 1.0 / 3.0) <= 1e-10 && std::abs(z) <= 4.0,
          fmt("|q - 1/3| = %.1e; MC frequency %.4f +- %.4f (z = %.2f)", std::abs(q - 1.0 / 3.0), e.frequency, e.std_error, z)};
}

// --- simulation ---------------------------------------------------------------

Verdict census_identity() {
  double worst = 0.0;
  std::size_t entries = 0;
  const std::vector<double> thetas{0.0, 0.5};
  for (const std::string name : {"champneys", "jumpy"}) {
    const ModelSpec m = test::config(name);
    SimConfig cfg;
    cfg.horizon = 2.0;
    cfg.observation_times = {0.5, 1.0, 2.0};
    cfg.replicas = 10000;
    cfg.master_seed = 20240611;
    const CensusEstimate est = census_moments(m, thetas, cfg);
    for (std::size_t a = 0; a < thetas.size(); ++a)
      for (std::size_t k = 0; k < cfg.observation_times.size(); ++k) {
        const Matrix want = matrix_exp(matrix_exponent(m, thetas[a]), cfg.observation_times[k]);
        for (std::size_t i = 0; i < m.d; ++i)
          for (std::size_t j = 0; j < m.d; ++j) {
            const double se = est.se[a][k](i, j);
            const double diff = std::abs(est.mean[a][k](i, j) - want(i, j));
            worst = std::max(worst, se > 0 ? diff / se : (diff == 0.0 ? 0.0 : INFINITY));
            ++entries;
          }
      }
  }
  return {worst <= 4.0, fmt("max |z| = %.2f over %zu matrix entries", worst, entries)};
}

Verdict martingale_means() {
  double worst = 0.0;
  bool ok = true;
  for (const std::string name : {"champneys", "jumpy"}) {
    cli::ExperimentConfig cfg = command(cli::Command::martingales, name, "martingales_" + name);
    cfg.replicas = 10000;
    cfg.times = {0.5, 1.0};
    const CliRun r = run_cli(cfg);
    ok = ok && gate_passed(r);
    if (r.status != cli::kOk) return {false, r.err};
    const json doc = read_json(cfg.out_dir / "martingales.json");
    for (const auto& s : doc["summaries"])
      worst = std::max({worst, std::abs(s["W_z"].get<double>()), std::abs(s["Z_z"].get<double>())});
  }
  return {ok && worst <= 4.0, fmt("max |z| = %.2f (W and Z, two models, t in {0.5, 1})", worst)};
}

Verdict many_to_one() {
  double worst = 0.0;
  bool ok = true;
  std::size_t n = 0;
  for (const std::string name : {"champneys", "jumpy"}) {
    cli::ExperimentConfig cfg = command(cli::Command::many_to_one, name, "many_to_one_" + name);
    cfg.replicas = 10000;
    const CliRun r = run_cli(cfg);
    if (r.status != cli::kOk) return {false, r.err};
    ok = ok && gate_passed(r);
    const json doc = read_json(cfg.out_dir / "many_to_one.json");
    for (const auto& row : doc["results"]) {
      worst = std::max(worst, std::abs(row["z_score"].get<double>()));
      ++n;
    }
  }
  return {ok && worst <= 4.0 && n >= 6, fmt("max |z| = %.2f over %zu function/model pairs", worst, n)};
}

Verdict spectral_shift() {
  std::vector<double> alphas;
  for (int k = 0; k <= 10; ++k) alphas.push_back(-1.0 + 0.2 * k);
  double worst = 0.0;
  for (const auto& name : test::catalog_names()) {
    const ModelSpec m = test::config(name);
    const double th = 0.5 * theta_star_or(m, 1.0);
    worst = std::max(worst, tilted_spectral_check(m, th, alphas));
  }
  return {worst <= 1e-9, fmt("max deviation %.2e on the catalog", worst)};
}

Verdict spine_speed() {
  double worst = 0.0;
  bool ok = true;
  for (const std::string name : {"champneys", "jumpy"})
    for (double th : {0.5, 1.0}) {
      cli::ExperimentConfig cfg = command(cli::Command::spine_speed, name, fmt("spine_%s_%.1f", name.c_str(), th));
      cfg.theta = th;
      cfg.horizon = 50.0;
      cfg.replicas = 500;
      const CliRun r = run_cli(cfg);
      if (r.status != cli::kOk) return {false, r.err};
      ok = ok && gate_passed(r);
      worst = std::max(worst, std::abs(read_json(cfg.out_dir / "spine_speed.json")["z"].get<double>()));
    }
  return {ok && worst <= 4.0, fmt("max |z| = %.2f over 2 models x 2 theta", worst)};
}

Verdict leftmost_velocity() {
  cli::ExperimentConfig cfg = command(cli::Command::velocity, "bbm", "velocity");
  cfg.horizon = 30.0;
  cfg.replicas = 200;
  const CliRun r = run_cli(cfg);
  if (r.status != cli::kOk) {
    json e = json::parse(r.err, nullptr, false);
    const std::string msg = e.is_object() ? e.value("message", r.err) : r.err;
    return {false, "not attainable by exact simulation: " + msg};
  }
  const json v = read_json(cfg.out_dir / "velocity.json");
  const bool enough = v["surviving"].get<std::size_t>() >= 200;
  return {enough && gate_passed(r), fmt("min/t = %.4f against %.4f (relative error %.1f%%, %zu surviving)",
                                        v["speed_hat"].get<double>(), v["expected"].get<double>(),
                                        100.0 * v["relative_error"].get<double>(), v["surviving"].get<std::size_t>())};
}

// --- FKPP ---------------------------------------------------------------------

Verdict fkpp_fixed_points() {
  const Grid1D grid{-20.0, 20.0, 401};
  double worst = 0.0;
  std::size_t clamps = 0;
  for (const std::string name : {"jumpy", "champneys", "three_type"}) {
    const ModelSpec m = test::config(name);
    FkppSolver solver(m, grid);
    const double dt = 0.9 * solver.max_stable_dt();
    for (const Vector& level : {Vector(m.d, 1.0), solver.extinction()}) {
      FkppField f;
      f.grid = grid;
      for (double v : level) f.values.emplace_back(grid.n, v);
      for (int s = 0; s < 10000; ++s) {
        const FkppField before = f;
        solver.step(f, dt);
        for (std::size_t i = 0; i < m.d; ++i)
          for (std::size_t k = 0; k < grid.n; ++k) worst = std::max(worst, std::abs(f.values[i][k] - before.values[i][k]));
      }
    }
    clamps += solver.clamp_count();
  }
  return {worst <= 1e-12 && clamps == 0, fmt("max per-step change %.1e over 1e4 steps (3 models, u = 1 and u = q)", worst)};
}

Verdict front_speeds() {
  struct Case {
    std::string model, init;
    double theta;
  };
  const std::vector<Case> cases{{"bbm", "step", 0.0}, {"bbm", "exp_tail", 1.0}, {"champneys", "step", 0.0}};
  std::string detail;
  bool ok = true;
  for (const auto& c : cases) {
    cli::ExperimentConfig cfg = command(cli::Command::fkpp_front, c.model, "front_" + c.model + "_" + c.init);
    cfg.init = c.init;
    if (c.init == "exp_tail") cfg.theta = c.theta;
    cfg.dx = 0.05;
    cfg.t1 = 20.0;
    cfg.t2 = 40.0;
    const CliRun r = run_cli(cfg);
    if (r.status != cli::kOk) return {false, r.err};
    ok = ok && gate_passed(r);
    const json j = read_json(cfg.out_dir / "fkpp_front.json");
    double rel = 0.0;
    for (const auto& f : j["fits"]) rel = std::max(rel, f["relative_error"].get<double>());
    ok = ok && rel <= 0.08;
    detail += fmt("%s%s/%s: %.4f vs %.4f (%.2f%%)", detail.empty() ? "" : "; ", c.model.c_str(), c.init.c_str(),
                  j["fits"][0]["speed"].get<double>(), j["predicted_speed"].get<double>(), 100.0 * rel);
  }
  return {ok, detail};
}

Verdict representation() {
  cli::ExperimentConfig cfg = command(cli::Command::representation_check, "champneys", "representation");
  cfg.init = "exp_tail";
  cfg.horizon = 1.0;
  cfg.replicas = 10000;
  cfg.grid = "-2,2,5";
  const CliRun r = run_cli(cfg);
  if (r.status != cli::kOk) return {false, r.err};
  const json j = read_json(cfg.out_dir / "representation.json");
  double worst_ratio = 0.0;
  for (const auto& row : j["rows"])
    worst_ratio = std::max(worst_ratio, row["gap"].get<double>() / std::max(0.02, 4.0 * row["se"].get<double>()));
  return {gate_passed(r) && worst_ratio <= 1.0,
          fmt("max gap %.4f; max gap / max(0.02, 4 SE) = %.2f at 5 probes", j["max_gap"].get<double>(), worst_ratio)};
}

Verdict martingale_problem() {
  cli::ExperimentConfig cfg = command(cli::Command::wave_compare, "bbm", "wave_compare");
  cfg.theta = 0.5;
  cfg.replicas = 10000;
  cfg.times = {0.5, 1.0, 2.0};
  const CliRun r = run_cli(cfg);
  if (r.status != cli::kOk) return {false, r.err};
  const json j = read_json(cfg.out_dir / "wave_compare.json");
  double worst = 0.0, control = 0.0;
  for (const auto& row : j["checks"]) worst = std::max(worst, std::abs(row["z"].get<double>()));
  for (const auto& row : j["negative_control"]) control = std::max(control, std::abs(row["z"].get<double>()));
  return {gate_passed(r) && worst <= 4.0 && control > 6.0,
          fmt("profile max |z| = %.2f; squared-profile control max |z| = %.1f", worst, control)};
}

// --- reproducibility --------------------------------------------------------------

Verdict reproducibility() {
  struct Case {
    cli::Command cmd;
    std::string model, csv;
    std::function<void(cli::ExperimentConfig&)> tune;
  };
  const std::vector<Case> cases{
      {cli::Command::simulate, "jumpy", "simulate.csv", [](auto& c) { c.replicas = 200; c.horizon = 3.0; }},
      {cli::Command::martingales, "champneys", "martingales.csv", [](auto& c) { c.replicas = 500; }},
      {cli::Command::representation_check, "jumpy", "representation.csv", [](auto& c) { c.replicas = 500; c.dx = 0.05; }},
      {cli::Command::wave_compare, "bbm", "wave_compare.csv",
       [](auto& c) { c.theta = 0.5; c.replicas = 200; c.horizon = 4.0; c.grid = "-4,8,13"; c.t2 = 4.0; }},
      {cli::Command::fkpp_front, "champneys", "front.csv", [](auto& c) { c.t1 = 2.0; c.t2 = 4.0; c.dx = 0.1; }},
  };
  std::size_t compared = 0;
  for (const auto& c : cases) {
    std::string reference;
    int run_index = 0;
    for (std::size_t workers : {1, 4, 1, 3}) {
      cli::ExperimentConfig cfg = command(c.cmd, c.model, fmt("repro_%s_%d", c.csv.c_str(), run_index++));
      c.tune(cfg);
      cfg.workers = workers;
      const CliRun r = run_cli(cfg);
      if (r.status != cli::kOk) return {false, r.err};
      const std::string bytes = slurp(cfg.out_dir / c.csv);
      if (reference.empty()) reference = bytes;
      if (bytes != reference || bytes.empty())
        return {false, fmt("%s differs between runs (workers = %zu)", c.csv.c_str(), workers)};
      ++compared;
    }
  }
  return {true, fmt("%zu runs of 5 commands byte-identical across worker counts 1, 3, 4", compared)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  Verdict (*check)();
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "spectral closed form", 5, closed_form_agreement},
      {2, "lambda' eigen identity", 5, lambda_prime_identity},
      {3, "theta* fixed point", 1, theta_star_fixed_point},
      {4, "extinction vector", 120, extinction_vector_check},
      {5, "census identity", 300, census_identity},
      {6, "martingale means", 180, martingale_means},
      {7, "many-to-one", 300, many_to_one},
      {8, "spine spectral shift", 5, spectral_shift},
      {9, "spine speed", 120, spine_speed},
      {10, "leftmost-particle velocity", 600, leftmost_velocity},
      {11, "FKPP fixed points", 60, fkpp_fixed_points},
      {12, "FKPP front speeds", 600, front_speeds},
      {13, "probabilistic representation", 600, representation},
      {14, "martingale problem", 600, martingale_problem},
      {15, "reproducibility", 60, reproducibility},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = v.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s %2d %-30s %s [%.1fs / %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs,
                c.budget_seconds, in_time ? "" : " over budget");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
