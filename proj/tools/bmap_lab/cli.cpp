#include "bmap_lab/cli.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "bmap/errors.hpp"
#include "bmap/fkpp.hpp"
#include "bmap/json.hpp"
#include "bmap/model_io.hpp"
#include "bmap/parallel.hpp"
#include "bmap/rng.hpp"
#include "bmap/simulator.hpp"
#include "bmap/spectral.hpp"
#include "bmap/spine.hpp"
#include "bmap_lab/csv.hpp"

#ifndef BMAP_GIT_REVISION
#define BMAP_GIT_REVISION "unknown"
#endif

namespace bmap::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::array<std::pair<Command, std::string_view>, 10> kNames{{
    {Command::spectral_report, "spectral-report"},
    {Command::simulate, "simulate"},
    {Command::velocity, "velocity"},
    {Command::martingales, "martingales"},
    {Command::many_to_one, "many-to-one"},
    {Command::spine_speed, "spine-speed"},
    {Command::fkpp_front, "fkpp-front"},
    {Command::wave_compare, "wave-compare"},
    {Command::representation_check, "representation-check"},
    {Command::plot_data, "plot-data"},
}};

// Per-run state shared by the command implementations.
struct Context {
  const ExperimentConfig& cfg;
  ModelSpec model;
  json params = json::object();
  json gate = json::object();
  std::vector<std::string> outputs;
  std::ostream& out;

  fs::path path(const std::string& name) {
    outputs.push_back(name);
    return cfg.out_dir / name;
  }

  void write_json(const std::string& name, const json& doc) {
    std::ofstream f(path(name), std::ios::binary);
    if (!f) throw Error("cannot write " + (cfg.out_dir / name).string());
    f << doc.dump(2) << '\n';
  }

  void set_gate(bool passed, const std::string& criterion) {
    gate = {{"passed", passed}, {"criterion", criterion}};
  }
};

std::size_t replicas_or(const Context& c, std::size_t fallback) {
  const std::size_t r = c.cfg.replicas.value_or(fallback);
  if (r == 0) throw ValidationError("--replicas must be >= 1");
  return r;
}

double positive(std::optional<double> v, double fallback, const char* flag) {
  const double x = v.value_or(fallback);
  if (!(x > 0.0) || !std::isfinite(x)) throw ValidationError(std::string(flag) + " must be positive");
  return x;
}

// Explicit --theta, else a fraction of theta*.
double theta_or_fraction(const Context& c, double fraction) {
  if (c.cfg.theta) {
    if (!(*c.cfg.theta > 0.0)) throw ValidationError("--theta must be positive");
    return *c.cfg.theta;
  }
  return fraction * theta_star(c.model);
}

std::vector<double> observation_times(const Context& c, double horizon, std::size_t points) {
  if (!c.cfg.times.empty()) {
    std::vector<double> t = c.cfg.times;
    std::sort(t.begin(), t.end());
    if (t.front() < 0.0 || t.back() > horizon) throw ValidationError("--times must lie within [0, horizon]");
    return t;
  }
  std::vector<double> t;
  for (std::size_t k = 0; k <= points; ++k)
    t.push_back(horizon * static_cast<double>(k) / static_cast<double>(points));
  return t;
}

InitSpec init_spec(const Context& c, double theta) {
  if (c.cfg.init == "step") return InitSpec::step();
  if (c.cfg.init == "exp_tail") return InitSpec::exp_tail(theta);
  throw ValidationError("--init must be step or exp_tail");
}

void cmd_spectral_report(Context& c) {
  json doc;
  const RegimeReport regime = regime_report(c.model);
  doc["regime"] = regime;
  doc["theta_star"] = regime.theta_star;
  doc["critical_speed"] = regime.critical_speed;
  doc["extinction"] = regime.extinction;
  const SpectralReport at_star = spectral_report(c.model, regime.theta_star);
  doc["spectral_at_theta_star"] = at_star;
  const double residual = std::abs(at_star.lambda - regime.theta_star * at_star.lambda_prime);
  doc["theta_star_residual"] = residual;
  if (c.cfg.theta) {
    doc["spectral"] = spectral_report(c.model, *c.cfg.theta);
    doc["regime_at_theta"] = std::string(to_string(regime.regime_of(*c.cfg.theta)));
    c.params["theta"] = *c.cfg.theta;
  }
  c.write_json("spectral_report.json", doc);
  c.out << doc.dump(2) << '\n';
  c.set_gate(residual <= 1e-8 * std::max(1.0, std::abs(at_star.lambda)), "|lambda - theta* lambda'| <= 1e-8 max(1,|lambda|)");
}

double default_simulation_theta(const Context& c) {
  if (c.cfg.theta) {
    if (!(*c.cfg.theta > 0.0)) throw ValidationError("--theta must be positive");
    return *c.cfg.theta;
  }
  try {
    return theta_star(c.model);
  } catch (const AssumptionError&) {
    return 1.0;
  }
}

void cmd_simulate(Context& c) {
  const double horizon = positive(c.cfg.horizon, 5.0, "--horizon");
  const std::size_t replicas = replicas_or(c, 100);
  const double theta = default_simulation_theta(c);
  const SpectralReport spectral = spectral_report(c.model, theta);
  const Vector vp = v_prime(c.model, theta);

  SimConfig sim_cfg;
  sim_cfg.horizon = horizon;
  sim_cfg.observation_times = observation_times(c, horizon, 10);
  sim_cfg.master_seed = c.cfg.seed;
  sim_cfg.replicas = replicas;
  sim_cfg.workers = c.cfg.workers;
  sim_cfg.check();
  c.params.update({{"theta", theta}, {"horizon", horizon}, {"replicas", replicas}, {"times", sim_cfg.observation_times}});

  struct Row {
    std::vector<std::size_t> counts;
    double min_position, w, z;
  };
  const Simulator sim(c.model);
  const auto runs = run_replicas(replicas, c.cfg.workers, [&](std::size_t r) {
    std::vector<Row> rows;
    sim.run({0.0, 0}, sim_cfg, r, [&](std::size_t, double t, std::span<const Particle> ps) {
      const PopulationSnapshot snap(t, c.model.d, ps);
      rows.push_back({snap.counts_by_type, snap.min_position, additive_martingale(ps, t, spectral),
                      derivative_martingale(ps, t, spectral, vp)});
    });
    return rows;
  });

  std::vector<std::string> header{"replica", "t"};
  for (std::size_t i = 0; i < c.model.d; ++i) header.push_back("count_" + std::to_string(i));
  for (const char* h : {"min_position", "W", "Z"}) header.emplace_back(h);
  CsvWriter csv(c.path("simulate.csv"), header);
  const std::size_t n_obs = sim_cfg.observation_times.size();
  std::vector<std::vector<double>> w(n_obs), z(n_obs), total(n_obs);
  for (std::size_t r = 0; r < replicas; ++r)
    for (std::size_t k = 0; k < n_obs; ++k) {
      const Row& row = runs[r][k];
      csv.cell(r).cell(sim_cfg.observation_times[k]);
      std::size_t n = 0;
      for (std::size_t cnt : row.counts) {
        csv.cell(cnt);
        n += cnt;
      }
      csv.cell(row.min_position).cell(row.w).cell(row.z).end_row();
      w[k].push_back(row.w);
      z[k].push_back(row.z);
      total[k].push_back(static_cast<double>(n));
    }

  json summary = json::array();
  for (std::size_t k = 0; k < n_obs; ++k) {
    const MeanSe mw = mean_se(w[k]), mz = mean_se(z[k]), mn = mean_se(total[k]);
    const Quantiles qw = summary_quantiles(w[k]);
    summary.push_back({{"t", sim_cfg.observation_times[k]},
                       {"population_mean", mn.mean},
                       {"population_se", mn.se},
                       {"W_mean", mw.mean},
                       {"W_se", mw.se},
                       {"W_q10", qw.q10},
                       {"W_median", qw.median},
                       {"W_q90", qw.q90},
                       {"Z_mean", mz.mean},
                       {"Z_se", mz.se}});
  }
  c.write_json("simulate_summary.json", {{"theta", theta}, {"observations", summary}});
  c.set_gate(true, "none");
}

void cmd_velocity(Context& c) {
  SimConfig sim_cfg;
  sim_cfg.horizon = positive(c.cfg.horizon, 30.0, "--horizon");
  sim_cfg.replicas = replicas_or(c, 200);
  sim_cfg.master_seed = c.cfg.seed;
  sim_cfg.workers = c.cfg.workers;
  c.params.update({{"horizon", sim_cfg.horizon}, {"replicas", sim_cfg.replicas}});
  const RegimeReport regime = regime_report(c.model);
  const VelocityEstimate v = velocity_estimate(c.model, {}, sim_cfg);
  const double expected = -regime.critical_speed;
  const double rel = std::abs(v.speed_hat - expected) / std::abs(expected);
  c.write_json("velocity.json", {{"speed_hat", v.speed_hat},
                                 {"std_error", v.std_error},
                                 {"surviving", v.surviving},
                                 {"replicas", v.replicas},
                                 {"expected", expected},
                                 {"relative_error", rel}});
  c.set_gate(rel <= 0.15, "relative error of min/t against -lambda(theta*)/theta* <= 15%");
}

void cmd_martingales(Context& c) {
  const double theta = theta_or_fraction(c, 0.5);
  const double horizon = positive(c.cfg.horizon, 1.0, "--horizon");
  SimConfig sim_cfg;
  sim_cfg.horizon = horizon;
  sim_cfg.observation_times = observation_times(c, horizon, 2);
  sim_cfg.replicas = replicas_or(c, 10000);
  sim_cfg.master_seed = c.cfg.seed;
  sim_cfg.workers = c.cfg.workers;
  c.params.update({{"theta", theta}, {"horizon", horizon}, {"replicas", sim_cfg.replicas}, {"times", sim_cfg.observation_times}});
  const SpectralReport spectral = spectral_report(c.model, theta);
  const Vector vp = v_prime(c.model, theta);
  const MartingaleTrajectory traj = martingale_trajectory(c.model, {}, spectral, vp, sim_cfg);

  CsvWriter csv(c.path("martingales.csv"), {"replica", "t", "W", "Z"});
  for (std::size_t r = 0; r < traj.w.size(); ++r)
    for (std::size_t k = 0; k < traj.times.size(); ++k)
      csv.cell(r).cell(traj.times[k]).cell(traj.w[r][k]).cell(traj.z[r][k]).end_row();

  const double w0 = spectral.v_right[0];
  const double z0 = -vp[0];
  bool ok = true;
  json rows = json::array();
  for (const auto& s : traj.summaries) {
    const double zw = s.w.se > 0 ? (s.w.mean - w0) / s.w.se : 0.0;
    const double zz = s.z.se > 0 ? (s.z.mean - z0) / s.z.se : 0.0;
    ok = ok && std::abs(zw) <= 4.0 && std::abs(zz) <= 4.0;
    rows.push_back({{"t", s.time},
                    {"W_mean", s.w.mean},
                    {"W_se", s.w.se},
                    {"W_z", zw},
                    {"Z_mean", s.z.mean},
                    {"Z_se", s.z.se},
                    {"Z_z", zz},
                    {"W_median", s.w_quantiles.median},
                    {"W_median_surviving", s.w_median_surviving},
                    {"Z_median_surviving", s.z_median_surviving}});
  }
  c.write_json("martingales.json", {{"theta", theta}, {"W0", w0}, {"Z0", z0}, {"summaries", rows}});
  c.set_gate(ok, "martingale means within 4 SE of W(0), Z(0)");
}

void cmd_many_to_one(Context& c) {
  const double theta = theta_or_fraction(c, 0.5);
  const double t = positive(c.cfg.horizon, 1.0, "--horizon");
  const std::size_t replicas = replicas_or(c, 10000);
  std::vector<TestFunction> fns;
  if (c.cfg.functions.empty())
    fns = test_function_catalog(c.model.d);
  else
    for (const auto& id : c.cfg.functions) fns.push_back(TestFunction::parse(id));
  c.params.update({{"theta", theta}, {"horizon", t}, {"replicas", replicas}});

  json results = json::array();
  bool ok = true;
  for (std::size_t k = 0; k < fns.size(); ++k) {
    const ManyToOneResult r =
        many_to_one_check(c.model, theta, t, fns[k], replicas, derive_seed(c.cfg.seed, k), {}, c.cfg.workers);
    ok = ok && std::abs(r.z_score) <= 4.0;
    results.push_back(r);
  }
  c.write_json("many_to_one.json", {{"catalog_version", kTestFunctionCatalogVersion},
                                    {"theta", theta},
                                    {"t", t},
                                    {"results", results}});
  c.set_gate(ok, "|z| <= 4 for every test function");
}

void cmd_spine_speed(Context& c) {
  const double theta = theta_or_fraction(c, 0.5);
  const double horizon = positive(c.cfg.horizon, 50.0, "--horizon");
  const std::size_t replicas = replicas_or(c, 500);
  c.params.update({{"theta", theta}, {"horizon", horizon}, {"replicas", replicas}});
  const SpectralReport spectral = spectral_report(c.model, theta);
  const SpeedEstimate s = spine_speed(tilt_model(c.model, spectral), {}, horizon, replicas, c.cfg.seed, c.cfg.workers);
  const double expected = -spectral.lambda_prime;
  const double z = s.std_error > 0 ? (s.speed_hat - expected) / s.std_error : 0.0;
  c.write_json("spine_speed.json",
               {{"theta", theta}, {"speed_hat", s.speed_hat}, {"std_error", s.std_error}, {"expected", expected}, {"z", z}});
  c.set_gate(std::abs(z) <= 4.0, "spine speed within 4 SE of -lambda'(theta)");
}

void cmd_fkpp_front(Context& c) {
  FrontSpeedOptions opt;
  if (c.cfg.grid) opt.dx = Grid1D::parse(*c.cfg.grid).dx();
  if (c.cfg.dx) opt.dx = positive(c.cfg.dx, 0.05, "--dx");
  if (c.cfg.dt) opt.dt = positive(c.cfg.dt, 0.0, "--dt");
  opt.t1 = c.cfg.t1.value_or(20.0);
  opt.t2 = c.cfg.t2.value_or(40.0);
  const double theta = c.cfg.init == "exp_tail" ? positive(c.cfg.theta, 1.0, "--theta") : 0.0;
  const InitSpec init = init_spec(c, theta);
  const FrontSpeedResult r = front_speed(c.model, init, opt);
  c.params.update({{"init", c.cfg.init}, {"theta", theta}, {"dx", opt.dx}, {"dt", r.dt}, {"t1", opt.t1}, {"t2", opt.t2}});

  CsvWriter csv(c.path("front.csv"), {"t", "type", "front_x"});
  for (const auto& s : r.trajectory)
    for (std::size_t i = 0; i < s.front.size(); ++i) csv.cell(s.t).cell(i).cell(s.front[i]).end_row();

  json fits = json::array();
  bool ok = r.clamp_count == 0;
  for (std::size_t i = 0; i < r.speed.size(); ++i) {
    double mt = 0.0, mx = 0.0;
    std::size_t n = 0;
    for (const auto& s : r.trajectory)
      if (s.t >= opt.t1 - 1e-9) {
        mt += s.t;
        mx += s.front[i];
        ++n;
      }
    const double intercept = mx / static_cast<double>(n) - r.speed[i] * mt / static_cast<double>(n);
    const double rel = std::abs(r.speed[i] - r.predicted) / std::abs(r.predicted);
    ok = ok && rel <= 0.08;
    fits.push_back({{"type", i}, {"speed", r.speed[i]}, {"intercept", intercept}, {"residual", r.residual[i]}, {"relative_error", rel}});
  }
  c.write_json("fkpp_front.json", {{"predicted_speed", r.predicted},
                                   {"grid", r.grid},
                                   {"dt", r.dt},
                                   {"level", r.level},
                                   {"t1", opt.t1},
                                   {"t2", opt.t2},
                                   {"clamp_count", r.clamp_count},
                                   {"fits", fits}});
  c.set_gate(ok, "front speed within 8% of the predicted speed");
}

void cmd_wave_compare(Context& c) {
  const double theta = theta_or_fraction(c, 0.5);
  const Grid1D probes_grid = Grid1D::parse(c.cfg.grid.value_or("-8,12,81"));
  std::vector<double> probes;
  for (std::size_t k = 0; k < probes_grid.n; ++k) probes.push_back(probes_grid.x(k));
  WaveProfileOptions wopt;
  wopt.replicas = replicas_or(c, 10000);
  wopt.horizon = positive(c.cfg.horizon, 8.0, "--horizon");
  wopt.seed = c.cfg.seed;
  wopt.workers = c.cfg.workers;
  std::vector<double> times = c.cfg.times.empty() ? std::vector<double>{0.5, 1.0, 2.0} : c.cfg.times;
  c.params.update({{"theta", theta}, {"horizon", wopt.horizon}, {"replicas", wopt.replicas}, {"grid", probes_grid}, {"times", times}});

  const WaveProfile wave = wave_profile_mc(c.model, theta, probes, wopt);
  const FkppField profile = wave.as_field();
  FkppField profile_se = profile;
  profile_se.values = wave.se;

  std::vector<Start> starts;
  for (std::size_t i = 0; i < c.model.d; ++i) starts.push_back({profile_crossing(profile, i, 0.5), i});
  const auto rows = martingale_problem_check(c.model, theta, profile, times, starts, wopt.replicas,
                                             derive_seed(c.cfg.seed, 0xc4ec), c.cfg.workers, &profile_se);
  FkppField squared = profile, squared_se = profile_se;
  for (std::size_t i = 0; i < c.model.d; ++i)
    for (std::size_t k = 0; k < profile.grid.n; ++k) {
      squared.values[i][k] = profile.values[i][k] * profile.values[i][k];
      squared_se.values[i][k] = 2.0 * profile.values[i][k] * profile_se.values[i][k];
    }
  const auto control = martingale_problem_check(c.model, theta, squared, times, starts, wopt.replicas,
                                                derive_seed(c.cfg.seed, 0xc4ed), c.cfg.workers, &squared_se);

  // PDE side: exp_tail(theta) data relaxes to the wave; align by front matching.
  const double level = 0.5;
  const double t_pde = c.cfg.t2.value_or(10.0);
  const double dx = positive(c.cfg.dx, 0.05, "--dx");
  const double rho = pf_eigenvalue(c.model, theta) / theta;
  Grid1D g;
  g.x_min = std::floor((probes_grid.x_min - 10.0) / dx) * dx;
  g.x_max = std::ceil((probes_grid.x_max + 10.0 + rho * t_pde) / dx) * dx;
  g.n = static_cast<std::size_t>(std::llround((g.x_max - g.x_min) / dx)) + 1;
  FkppSolver solver(c.model, g);
  const double dt = c.cfg.dt.value_or(0.5 * solver.max_stable_dt());
  const SolveResult run = solve(solver, init_field(g, c.model, InitSpec::exp_tail(theta)), t_pde, dt, t_pde, level);
  const double shift = run.summaries.back().front[0] - profile_crossing(profile, 0, level);

  CsvWriter csv(c.path("wave_compare.csv"), {"x", "type", "phi_mc", "phi_mc_se", "phi_pde_shifted"});
  for (std::size_t i = 0; i < c.model.d; ++i)
    for (std::size_t k = 0; k < probes.size(); ++k)
      csv.cell(probes[k]).cell(i).cell(wave.value[i][k]).cell(wave.se[i][k])
          .cell(run.final_field.interpolate(i, probes[k] + shift)).end_row();

  bool ok = true, control_fails = false;
  for (const auto& r : rows) ok = ok && std::abs(r.z) <= 4.0;
  for (const auto& r : control) control_fails = control_fails || std::abs(r.z) > 6.0;
  c.write_json("wave_compare.json", {{"theta", theta},
                                     {"martingale", wave.derivative ? "Z" : "W"},
                                     {"stabilization", wave.stabilization},
                                     {"warning", wave.warning},
                                     {"pde_shift", shift},
                                     {"checks", rows},
                                     {"negative_control", control}});
  c.set_gate(ok && control_fails, "profile |z| <= 4 at every t and squared profile |z| > 6 somewhere");
}

void cmd_representation_check(Context& c) {
  const double theta = c.cfg.init == "exp_tail" ? theta_or_fraction(c, 0.5) : 1.0;
  const InitSpec u0 = init_spec(c, theta);
  const double t = c.cfg.horizon.value_or(1.0);
  if (!(t >= 0.0)) throw ValidationError("--horizon must be >= 0");
  const Grid1D probe_grid = Grid1D::parse(c.cfg.grid.value_or("-2,2,5"));
  std::vector<Start> probes;
  for (std::size_t k = 0; k < probe_grid.n; ++k) probes.push_back({probe_grid.x(k), k % c.model.d});
  RepresentationOptions opt;
  opt.replicas = replicas_or(c, 10000);
  opt.seed = c.cfg.seed;
  opt.workers = c.cfg.workers;
  if (c.cfg.dx) opt.dx = positive(c.cfg.dx, 0.02, "--dx");
  if (c.cfg.dt) opt.dt = positive(c.cfg.dt, 0.0, "--dt");
  c.params.update({{"init", c.cfg.init}, {"theta", theta}, {"horizon", t}, {"replicas", opt.replicas}, {"grid", probe_grid}, {"dx", opt.dx}});
  const RepresentationResult r = representation_check(c.model, u0, t, probes, opt);

  CsvWriter csv(c.path("representation.csv"), {"x", "type", "mc", "se", "pde", "gap"});
  for (const auto& row : r.rows)
    csv.cell(row.probe.x).cell(row.probe.type).cell(row.mc).cell(row.se).cell(row.pde).cell(row.gap).end_row();
  c.write_json("representation.json",
               {{"max_gap", r.max_gap}, {"pass", r.pass}, {"clamp_count", r.clamp_count}, {"rows", r.rows}});
  c.set_gate(r.pass, "gap <= max(0.02, 4 SE) at every probe");
}

void write_manifest(Context& c, double wall_seconds, int status) {
  json m;
  m["tool"] = "bmap-lab";
  m["command"] = std::string(command_name(c.cfg.command));
  m["argv"] = c.cfg.argv;
  m["model_path"] = c.cfg.model_path.string();
  if (c.cfg.command != Command::plot_data) m["model"] = model_to_json(c.model);
  m["seed"] = c.cfg.seed;
  m["workers"] = c.cfg.workers;
  m["params"] = c.params;
  m["gate"] = c.gate;
  m["outputs"] = c.outputs;
  m["git_revision"] = BMAP_GIT_REVISION;
  m["wall_time_seconds"] = wall_seconds;
  m["exit_status"] = status;
  std::ofstream f(c.cfg.out_dir / "manifest.json", std::ios::binary);
  f << m.dump(2) << '\n';
}

void report_error(std::ostream& err, const char* kind, const std::string& message, json extra = json::object()) {
  json e = {{"error", kind}, {"message", message}};
  e.update(extra);
  err << e.dump() << '\n';
}

}  // namespace

std::string_view command_name(Command c) {
  for (const auto& [cmd, name] : kNames)
    if (cmd == c) return name;
  return "unknown";
}

std::optional<Command> parse_command(std::string_view name) {
  for (const auto& [cmd, n] : kNames)
    if (n == name) return cmd;
  return std::nullopt;
}

const std::vector<Command>& all_commands() {
  static const std::vector<Command> cmds = [] {
    std::vector<Command> v;
    for (const auto& [cmd, _] : kNames) v.push_back(cmd);
    return v;
  }();
  return cmds;
}

int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  std::optional<Context> ctx;
  int status = kOk;
  try {
    if (config.workers == 0) throw ValidationError("--workers must be >= 1");
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw ValidationError("cannot create output directory " + config.out_dir.string());
    ModelSpec model;
    if (config.command != Command::plot_data) {
      if (config.model_path.empty()) throw ValidationError("--model is required");
      if (!fs::exists(config.model_path)) throw ValidationError("model file " + config.model_path.string() + " does not exist");
      model = load_model(config.model_path);
      require_valid(model);
    }
    ctx.emplace(Context{config, std::move(model), json::object(), json::object(), {}, out});
    Context& c = *ctx;
    switch (config.command) {
      case Command::spectral_report: cmd_spectral_report(c); break;
      case Command::simulate: cmd_simulate(c); break;
      case Command::velocity: cmd_velocity(c); break;
      case Command::martingales: cmd_martingales(c); break;
      case Command::many_to_one: cmd_many_to_one(c); break;
      case Command::spine_speed: cmd_spine_speed(c); break;
      case Command::fkpp_front: cmd_fkpp_front(c); break;
      case Command::wave_compare: cmd_wave_compare(c); break;
      case Command::representation_check: cmd_representation_check(c); break;
      case Command::plot_data:
        for (const auto& p : emit_plot_data(config.out_dir)) c.outputs.push_back(p.filename().string());
        c.set_gate(true, "none");
        break;
    }
    if (config.gate && c.gate.contains("passed") && !c.gate["passed"].get<bool>()) {
      status = kGateFailed;
      report_error(err, "gate", "acceptance gate failed: " + c.gate["criterion"].get<std::string>());
    }
  } catch (const ValidationError& e) {
    status = kValidation;
    report_error(err, "validation", e.what());
  } catch (const SimulationTruncated& e) {
    status = kRuntime;
    report_error(err, "runtime", e.what(), {{"time_reached", e.time()}, {"population", e.population()}});
  } catch (const std::exception& e) {
    status = kRuntime;
    report_error(err, "runtime", e.what());
  }
  if (ctx && fs::is_directory(config.out_dir)) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(*ctx, wall, status);
  }
  return status;
}

}  // namespace bmap::cli
