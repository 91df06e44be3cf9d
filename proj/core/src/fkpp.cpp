#include "bmap/fkpp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "bmap/errors.hpp"
#include "bmap/parallel.hpp"
#include "bmap/stats.hpp"

namespace bmap {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRoundingSlack = 1e-12;

double max_sigma2(const ModelSpec& model) {
  double s = 0.0;
  for (const auto& ty : model.types) s = std::max(s, ty.motion.sigma2);
  return s;
}

double max_abs_drift(const ModelSpec& model) {
  double a = 0.0;
  for (const auto& ty : model.types) a = std::max(a, std::abs(ty.motion.drift));
  return a;
}

double max_jump_atom(const ModelSpec& model) {
  double m = 0.0;
  for (std::size_t i = 0; i < model.d; ++i) {
    if (model.types[i].motion.jump_rate > 0.0) m = std::max(m, model.types[i].motion.jump_law.max_abs_value());
    for (std::size_t j = 0; j < model.d; ++j)
      if (j != i && model.q(i, j) > 0.0) m = std::max(m, model.u_laws[i][j].max_abs_value());
  }
  return m;
}

// First crossing of `level` from below; NaN if there is none.
double crossing(const Grid1D& grid, const Vector& u, double level) {
  if (u.empty() || u[0] >= level) return kNaN;
  for (std::size_t k = 1; k < u.size(); ++k) {
    if (u[k] < level) continue;
    if (u[k] == level) return grid.x(k);
    const double frac = (level - u[k - 1]) / (u[k] - u[k - 1]);
    return grid.x(k - 1) + frac * grid.dx();
  }
  return kNaN;
}

Grid1D padded_grid(double lo, double hi, double dx) {
  const double x_min = std::floor(lo / dx) * dx;
  const auto cells = static_cast<std::size_t>(std::ceil((hi - x_min) / dx - 1e-9));
  Grid1D g{x_min, x_min + static_cast<double>(cells) * dx, cells + 1};
  g.check();
  return g;
}

double default_dt(const FkppSolver& solver) {
  const double stable = solver.max_stable_dt();
  return std::isfinite(stable) ? 0.5 * stable : 0.01;
}

FieldSummary summarize(const FkppField& f, double level) {
  FieldSummary s;
  s.t = f.t;
  for (const auto& u : f.values) {
    s.front.push_back(crossing(f.grid, u, level));
    double mass = 0.0;
    for (std::size_t k = 0; k + 1 < u.size(); ++k) mass += std::abs(u[k + 1] - u[k]);
    s.gradient_mass.push_back(mass);
  }
  return s;
}

double monotonicity_violation(const FkppField& f) {
  double worst = 0.0;
  for (const auto& u : f.values)
    for (std::size_t k = 0; k + 1 < u.size(); ++k) worst = std::max(worst, u[k] - u[k + 1]);
  return worst;
}

double z_score(double diff, double se) {
  if (se > 0.0) return diff / se;
  return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
}

}  // namespace

void Grid1D::check() const {
  if (n < 3) throw ValidationError("grid needs at least 3 nodes");
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min))
    throw ValidationError("grid requires finite x_min < x_max");
}

Grid1D Grid1D::parse(const std::string& text) {
  std::istringstream in(text);
  Grid1D g;
  char c1 = 0, c2 = 0;
  long long n = 0;
  if (!(in >> g.x_min >> c1 >> g.x_max >> c2 >> n) || c1 != ',' || c2 != ',' || n < 0 || !(in >> std::ws).eof())
    throw ValidationError("grid must look like \"xmin,xmax,n\", got \"" + text + "\"");
  g.n = static_cast<std::size_t>(n);
  g.check();
  return g;
}

double FkppField::interpolate(std::size_t type, double x) const {
  const Vector& u = values.at(type);
  if (x <= grid.x_min) return u.front();
  if (x >= grid.x_max) return u.back();
  const double s = (x - grid.x_min) / grid.dx();
  const auto k = std::min(static_cast<std::size_t>(s), grid.n - 2);
  const double w = s - static_cast<double>(k);
  return (1.0 - w) * u[k] + w * u[k + 1];
}

InitialData::InitialData(const ModelSpec& model, const InitSpec& spec) : spec_(spec) {
  require_valid(model);
  q_ = extinction_vector(model).q;
  if (spec.kind == InitKind::exp_tail) {
    if (!(spec.theta > 0.0)) throw DomainError("exp_tail requires theta > 0");
    v_ = spectral_report(model, spec.theta).v_right;
  } else if (spec.kind == InitKind::wave_candidate) {
    throw DomainError("wave_candidate data has no closed form");
  }
}

double InitialData::operator()(double x, std::size_t type) const {
  if (spec_.kind == InitKind::exp_tail) return std::exp(-std::exp(-spec_.theta * x) * v_[type]);
  if (x < spec_.x0) return q_[type];
  if (x > spec_.x0) return 1.0;
  return 0.5 * (1.0 + q_[type]);
}

FkppField init_field(const Grid1D& grid, const ModelSpec& model, const InitSpec& spec) {
  grid.check();
  FkppField f;
  f.grid = grid;
  if (spec.kind == InitKind::wave_candidate) {
    if (spec.profile.size() != model.d) throw ValidationError("wave candidate must have one row per type");
    for (const auto& row : spec.profile) {
      if (row.size() != grid.n) throw ValidationError("wave candidate row length differs from grid size");
      for (double v : row)
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("wave candidate value outside [0, 1]");
    }
    f.values = spec.profile;
    return f;
  }
  const InitialData u0(model, spec);
  const double snap = 1e-9 * grid.dx();
  f.values.assign(model.d, Vector(grid.n));
  for (std::size_t i = 0; i < model.d; ++i) {
    for (std::size_t k = 0; k < grid.n; ++k) {
      double x = grid.x(k);
      if (spec.kind == InitKind::step && std::abs(x - spec.x0) < snap) x = spec.x0;
      f.values[i][k] = u0(x, i);
    }
    f.values[i].front() = u0.extinction()[i];
    f.values[i].back() = 1.0;
  }
  return f;
}

FkppSolver::FkppSolver(const ModelSpec& model, const Grid1D& grid, FkppOptions options)
    : grid_(grid), options_(options) {
  require_valid(model);
  grid_.check();
  if (!(options_.cfl > 0.0 && options_.cfl <= 0.5)) throw ValidationError("cfl factor must lie in (0, 0.5]");
  q_ = extinction_vector(model).q;
  const double dx = grid_.dx();
  const double half_width = 0.5 * (grid_.x_max - grid_.x_min);
  auto make_shift = [&](double y, double rate, std::size_t target, const char* what) {
    if (std::abs(y) > half_width) {
      std::ostringstream msg;
      msg << what << " atom " << y << " exceeds half the domain width " << half_width;
      throw DomainError(msg.str());
    }
    const double s = y / dx;
    Shift sh;
    sh.m = static_cast<std::ptrdiff_t>(std::floor(s));
    sh.w = s - std::floor(s);
    if (sh.w < 1e-12) sh.w = 0.0;
    if (sh.w > 1.0 - 1e-12) {
      sh.w = 0.0;
      ++sh.m;
    }
    sh.rate = rate;
    sh.target = target;
    return sh;
  };
  for (std::size_t i = 0; i < model.d; ++i) {
    const auto& ty = model.types[i];
    TypeTerms t;
    t.half_sigma2 = 0.5 * ty.motion.sigma2;
    t.drift = ty.motion.drift;
    if (ty.motion.jump_rate > 0.0)
      for (const auto& a : ty.motion.jump_law.atoms) {
        if (a.value == 0.0 || a.prob == 0.0) continue;
        t.shifts.push_back(make_shift(a.value, ty.motion.jump_rate * a.prob, i, "motion jump"));
        t.out_rate += ty.motion.jump_rate * a.prob;
      }
    for (std::size_t j = 0; j < model.d; ++j) {
      if (j == i || model.q(i, j) <= 0.0) continue;
      for (const auto& a : model.u_laws[i][j].atoms) {
        if (a.prob == 0.0) continue;
        t.shifts.push_back(make_shift(a.value, model.q(i, j) * a.prob, j, "switch jump"));
      }
      t.out_rate += model.q(i, j);
    }
    t.branch_rate = ty.branch_rate;
    t.offspring = offspring_coefficients(ty.offspring);
    terms_.push_back(std::move(t));
  }
}

double FkppSolver::max_stable_dt() const {
  const double dx = grid_.dx();
  double bound = std::numeric_limits<double>::infinity();
  for (const auto& t : terms_) {
    if (!options_.implicit_diffusion && t.half_sigma2 > 0.0)
      bound = std::min(bound, options_.cfl * dx * dx / (2.0 * t.half_sigma2));
    if (t.drift != 0.0) bound = std::min(bound, dx / std::abs(t.drift));
  }
  return bound;
}

double FkppSolver::shifted(const FkppField& f, const Shift& s, std::size_t k) const {
  const Vector& u = f.values[s.target];
  const auto n = static_cast<std::ptrdiff_t>(u.size());
  auto at = [&](std::ptrdiff_t idx) { return u[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, n - 1))]; };
  const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(k) + s.m;
  if (s.w == 0.0) return at(idx);
  return (1.0 - s.w) * at(idx) + s.w * at(idx + 1);
}

void FkppSolver::step(FkppField& field, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("time step must be positive");
  if (field.types() != terms_.size() || field.grid.n != grid_.n || field.grid.x_min != grid_.x_min ||
      field.grid.x_max != grid_.x_max)
    throw DomainError("field does not match the solver grid");
  if (dt > max_stable_dt() * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "CFL violation: dt = " << dt << " exceeds the stability bound " << max_stable_dt();
    throw DomainError(msg.str());
  }
  const std::size_t n = grid_.n;
  const double dx = grid_.dx();
  scratch_.resize(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const TypeTerms& tt = terms_[i];
    const Vector& u = field.values[i];
    Vector& out = scratch_[i];
    out.assign(n, 0.0);
    out.front() = u.front();
    out.back() = u.back();
    const double c_diff = options_.implicit_diffusion ? 0.0 : tt.half_sigma2 / (dx * dx);
    const double c_adv = tt.drift / dx;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      double rate = 0.0;
      if (c_diff != 0.0) rate += c_diff * (u[k + 1] - 2.0 * u[k] + u[k - 1]);
      if (c_adv > 0.0)
        rate += c_adv * (u[k + 1] - u[k]);
      else if (c_adv < 0.0)
        rate += c_adv * (u[k] - u[k - 1]);
      for (const auto& s : tt.shifts) rate += s.rate * shifted(field, s, k);
      rate -= tt.out_rate * u[k];
      if (tt.branch_rate > 0.0) rate += tt.branch_rate * (offspring_pgf(tt.offspring, u[k]) - u[k]);
      out[k] = u[k] + dt * rate;
    }
    if (options_.implicit_diffusion && tt.half_sigma2 > 0.0) {
      // (1 + 2c) x_k - c x_{k-1} - c x_{k+1} = rhs_k, Dirichlet ends (Thomas algorithm)
      const double c = dt * tt.half_sigma2 / (dx * dx);
      Vector cp(n, 0.0), dp(n, 0.0);
      dp[0] = out[0];
      for (std::size_t k = 1; k + 1 < n; ++k) {
        const double denom = 1.0 + 2.0 * c + c * cp[k - 1];
        cp[k] = -c / denom;
        dp[k] = (out[k] + c * dp[k - 1]) / denom;
      }
      for (std::size_t k = n - 2; k >= 1; --k) out[k] = dp[k] - cp[k] * out[k + 1];
    }
  }
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    Vector& out = scratch_[i];
    for (double& v : out) {
      const double violation = std::max(-v, v - 1.0);
      if (violation > 0.0) {
        max_violation_ = std::max(max_violation_, violation);
        if (violation > kRoundingSlack) ++clamp_count_;
        v = std::clamp(v, 0.0, 1.0);
      }
    }
    field.values[i].swap(out);
  }
  field.t += dt;
}

Vector front_position(const FkppField& field, double level) {
  Vector out;
  for (std::size_t i = 0; i < field.types(); ++i) {
    const double x = crossing(field.grid, field.values[i], level);
    if (std::isnan(x)) {
      std::ostringstream msg;
      msg << "type " << i << " has no crossing of level " << level << " on [" << field.grid.x_min << ", "
          << field.grid.x_max << "]; the domain is too small";
      throw FrontLostError(msg.str());
    }
    out.push_back(x);
  }
  return out;
}

double default_front_level(const Vector& q) {
  return 0.5 * (1.0 + *std::max_element(q.begin(), q.end()));
}

SolveResult solve(FkppSolver& solver, FkppField field, double t_end, double dt, double observe_every,
                  double level, std::span<const double> snapshot_times) {
  if (!(dt > 0.0)) throw DomainError("solve: dt must be positive");
  if (!(observe_every > 0.0)) throw DomainError("solve: observe_every must be positive");
  if (t_end < field.t) throw DomainError("solve: t_end precedes the field time");
  const std::size_t clamps_before = solver.clamp_count();
  const double t0 = field.t;
  const double span = t_end - t0;
  const auto steps = static_cast<std::size_t>(std::max(0.0, std::ceil(span / dt - 1e-9)));
  const auto every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(observe_every / dt)));

  SolveResult res;
  std::size_t next_snapshot = 0;
  auto record = [&] {
    while (next_snapshot < snapshot_times.size() && snapshot_times[next_snapshot] <= field.t + 0.5 * dt) {
      res.snapshots.push_back(field);
      ++next_snapshot;
    }
    res.summaries.push_back(summarize(field, level));
    res.max_monotonicity_violation = std::max(res.max_monotonicity_violation, monotonicity_violation(field));
  };
  record();
  for (std::size_t s = 1; s <= steps; ++s) {
    const double target = s == steps ? t_end : t0 + static_cast<double>(s) * dt;
    solver.step(field, target - field.t);
    field.t = target;
    if (s % every == 0 || s == steps) record();
  }
  res.clamp_count = solver.clamp_count() - clamps_before;
  res.final_field = std::move(field);
  return res;
}

std::pair<double, double> linear_fit(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size() || t.size() < 2) throw DomainError("linear_fit needs at least two points");
  const double n = static_cast<double>(t.size());
  double mt = 0.0, my = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    mt += t[k];
    my += y[k];
  }
  mt /= n;
  my /= n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    stt += (t[k] - mt) * (t[k] - mt);
    sty += (t[k] - mt) * (y[k] - my);
  }
  if (stt == 0.0) throw DomainError("linear_fit needs distinct times");
  const double slope = sty / stt;
  double rss = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double r = y[k] - (my + slope * (t[k] - mt));
    rss += r * r;
  }
  return {slope, std::sqrt(rss / n)};
}

FrontSpeedResult front_speed(const ModelSpec& model, const InitSpec& init, const FrontSpeedOptions& options) {
  if (init.kind == InitKind::wave_candidate) throw DomainError("front_speed takes step or exp_tail data");
  if (!(options.t2 > options.t1 && options.t1 >= 0.0)) throw DomainError("front_speed: need 0 <= t1 < t2");
  if (!(options.dx > 0.0)) throw DomainError("front_speed: dx must be positive");
  require_valid(model);
  const RegimeReport regime = regime_report(model);

  FrontSpeedResult res;
  res.predicted = regime.critical_speed;
  if (init.kind == InitKind::exp_tail && regime.regime_of(init.theta) == Regime::supercritical)
    res.predicted = pf_eigenvalue(model, init.theta) / init.theta;
  res.level = options.level.value_or(default_front_level(regime.extinction));
  if (!(res.level > *std::max_element(regime.extinction.begin(), regime.extinction.end()) && res.level < 1.0))
    throw DomainError("front level must lie in (max q, 1)");

  const double travel = std::abs(res.predicted) * options.t2;
  const double pad = 10.0 + max_jump_atom(model) + travel;
  double right = std::max(0.0, res.predicted) * options.t2 + pad;
  double left = std::min(0.0, res.predicted) * options.t2 - pad;
  if (init.kind == InitKind::exp_tail) right += 3.0 * std::sqrt(max_sigma2(model) * options.t2);
  left += init.x0;
  right += init.x0;
  res.grid = padded_grid(left, right, options.dx);

  FkppSolver solver(model, res.grid, {options.implicit_diffusion, 0.4});
  res.dt = options.dt > 0.0 ? options.dt : default_dt(solver);
  SolveResult run = solve(solver, init_field(res.grid, model, init), options.t2, res.dt, options.observe_every,
                          res.level);
  res.clamp_count = run.clamp_count;

  for (std::size_t i = 0; i < model.d; ++i) {
    std::vector<double> ts, xs;
    for (const auto& s : run.summaries) {
      if (s.t < options.t1 - 1e-9) continue;
      if (std::isnan(s.front[i])) throw FrontLostError("front left the domain during the fit window");
      ts.push_back(s.t);
      xs.push_back(s.front[i]);
    }
    const auto [slope, resid] = linear_fit(ts, xs);
    res.speed.push_back(slope);
    res.residual.push_back(resid);
    if (resid > options.max_fit_residual) {
      std::ostringstream msg;
      msg << "front fit residual " << resid << " for type " << i << " exceeds " << options.max_fit_residual;
      throw ConvergenceError(msg.str());
    }
  }
  res.trajectory = std::move(run.summaries);
  return res;
}

FkppField WaveProfile::as_field() const {
  if (probes.size() < 3) throw DomainError("profile needs at least three probes");
  Grid1D g{probes.front(), probes.back(), probes.size()};
  g.check();
  for (std::size_t k = 0; k < probes.size(); ++k)
    if (std::abs(probes[k] - g.x(k)) > 1e-9 * std::max(1.0, std::abs(probes[k])))
      throw DomainError("profile probes are not evenly spaced");
  FkppField f;
  f.grid = g;
  f.values = value;
  return f;
}

WaveProfile wave_profile_mc(const ModelSpec& model, double theta, std::span<const double> probes,
                            const WaveProfileOptions& options) {
  if (options.replicas < 2) throw DomainError("wave_profile_mc needs at least two replicas");
  if (!(options.horizon > 0.0)) throw DomainError("wave_profile_mc: horizon must be positive");
  const RegimeReport regime = regime_report(model);
  const Regime r = regime.regime_of(theta);
  if (r == Regime::subcritical) throw DomainError("wave_profile_mc: theta is subcritical, no travelling wave");

  WaveProfile out;
  out.theta = theta;
  out.derivative = r == Regime::critical;
  out.probes.assign(probes.begin(), probes.end());
  const SpectralReport spectral = spectral_report(model, theta);
  const Vector vp = out.derivative ? v_prime(model, theta) : Vector{};

  const Simulator sim(model);
  SimConfig cfg;
  cfg.horizon = options.horizon;
  cfg.observation_times = {0.5 * options.horizon, options.horizon};
  cfg.max_particles = options.max_particles;
  cfg.master_seed = options.seed;
  cfg.check();

  for (std::size_t i = 0; i < model.d; ++i) {
    const auto pairs = run_replicas(options.replicas, options.workers, [&](std::size_t rep) {
      std::array<double, 2> m{};
      sim.run({0.0, i}, cfg, i * options.replicas + rep, [&](std::size_t k, double t, std::span<const Particle> ps) {
        m[k] = out.derivative ? derivative_martingale(ps, t, spectral, vp) : additive_martingale(ps, t, spectral);
      });
      return m;
    });
    double change = 0.0, size = 0.0;
    for (const auto& m : pairs) {
      change += std::abs(m[1] - m[0]);
      size += std::abs(m[1]);
    }
    if (size > 0.0) out.stabilization = std::max(out.stabilization, change / size);

    Vector val, se;
    std::vector<double> sample(pairs.size());
    for (double x : probes) {
      const double scale = std::exp(-theta * x);
      for (std::size_t k = 0; k < pairs.size(); ++k) sample[k] = std::exp(-scale * pairs[k][1]);
      const MeanSe ms = mean_se(sample);
      val.push_back(ms.mean);
      se.push_back(ms.se);
    }
    out.value.push_back(std::move(val));
    out.se.push_back(std::move(se));
  }
  if (out.stabilization > options.stabilization_gate) {
    std::ostringstream msg;
    msg << "martingale not stabilized: relative change " << out.stabilization << " over the second half of the horizon exceeds "
        << options.stabilization_gate;
    out.warning = msg.str();
  }
  return out;
}

double profile_crossing(const FkppField& profile, std::size_t type, double level) {
  const double x = crossing(profile.grid, profile.values.at(type), level);
  if (std::isnan(x)) throw FrontLostError("profile never crosses the requested level");
  return x;
}

std::vector<MartingaleCheckRow> martingale_problem_check(const ModelSpec& model, double theta,
                                                         const FkppField& profile,
                                                         std::span<const double> t_list,
                                                         std::span<const Start> probes, std::size_t replicas,
                                                         std::uint64_t seed, std::size_t workers,
                                                         const FkppField* profile_se) {
  if (profile.types() != model.d) throw DomainError("profile must have one row per type");
  if (t_list.empty()) throw DomainError("martingale_problem_check needs at least one time");
  if (replicas < 2) throw DomainError("martingale_problem_check needs at least two replicas");
  std::vector<double> times(t_list.begin(), t_list.end());
  std::sort(times.begin(), times.end());
  if (times.front() <= 0.0) throw DomainError("check times must be positive");
  if (theta <= 0.0) throw DomainError("theta must be positive");
  const double rho = pf_eigenvalue(model, theta) / theta;

  const Simulator sim(model);
  SimConfig cfg;
  cfg.horizon = times.back();
  cfg.observation_times = times;
  cfg.master_seed = seed;
  cfg.check();

  std::vector<MartingaleCheckRow> rows;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const Start start = probes[p];
    if (start.type >= model.d) throw DomainError("probe type out of range");
    const auto products = run_replicas(replicas, workers, [&](std::size_t rep) {
      std::vector<double> prod(times.size(), 1.0);
      sim.run(start, cfg, p * replicas + rep, [&](std::size_t k, double t, std::span<const Particle> ps) {
        double v = 1.0;
        for (const auto& part : ps) v *= profile.interpolate(part.type, part.position + rho * t);
        prod[k] = v;
      });
      return prod;
    });
    for (std::size_t k = 0; k < times.size(); ++k) {
      std::vector<double> sample(replicas);
      for (std::size_t rep = 0; rep < replicas; ++rep) sample[rep] = products[rep][k];
      const MeanSe ms = mean_se(sample);
      MartingaleCheckRow row;
      row.t = times[k];
      row.start = start;
      row.mean = ms.mean;
      row.se = ms.se;
      row.target = profile.interpolate(start.type, start.x);
      row.target_se = profile_se ? profile_se->interpolate(start.type, start.x) : 0.0;
      row.z = z_score(row.mean - row.target, std::hypot(row.se, row.target_se));
      rows.push_back(row);
    }
  }
  return rows;
}

RepresentationResult representation_check(const ModelSpec& model, const InitSpec& u0, double t,
                                          std::span<const Start> probes, const RepresentationOptions& options) {
  if (!(t >= 0.0)) throw DomainError("representation_check: t must be >= 0");
  if (probes.empty()) throw DomainError("representation_check needs at least one probe");
  const InitialData data(model, u0);
  RepresentationResult res;
  res.pass = true;

  std::vector<double> mc(probes.size()), se(probes.size(), 0.0), pde(probes.size());
  if (t == 0.0) {
    for (std::size_t p = 0; p < probes.size(); ++p) mc[p] = pde[p] = data(probes[p].x, probes[p].type);
  } else {
    const Simulator sim(model);
    SimConfig cfg;
    cfg.horizon = t;
    cfg.observation_times = {t};
    cfg.master_seed = options.seed;
    cfg.check();
    for (std::size_t p = 0; p < probes.size(); ++p) {
      if (probes[p].type >= model.d) throw DomainError("probe type out of range");
      const auto sample = run_replicas(options.replicas, options.workers, [&](std::size_t rep) {
        double v = 1.0;
        sim.run(probes[p], cfg, p * options.replicas + rep, [&](std::size_t, double, std::span<const Particle> ps) {
          for (const auto& part : ps) v *= data(part.position, part.type);
        });
        return v;
      });
      const MeanSe ms = mean_se(sample);
      mc[p] = ms.mean;
      se[p] = ms.se;
    }

    double lo = probes[0].x, hi = probes[0].x;
    for (const auto& p : probes) {
      lo = std::min(lo, p.x);
      hi = std::max(hi, p.x);
    }
    const double pad = 10.0 + max_jump_atom(model) +
                       max_abs_drift(model) * t + 6.0 * std::sqrt(max_sigma2(model) * t);
    const Grid1D grid = padded_grid(std::min(lo, u0.x0) - pad, std::max(hi, u0.x0) + pad, options.dx);
    FkppSolver solver(model, grid);
    const double dt = options.dt > 0.0 ? options.dt : default_dt(solver);
    const double level = default_front_level(solver.extinction());
    const SolveResult run = solve(solver, init_field(grid, model, u0), t, dt, t, level);
    res.clamp_count = run.clamp_count;
    for (std::size_t p = 0; p < probes.size(); ++p) pde[p] = run.final_field.interpolate(probes[p].type, probes[p].x);
  }

  for (std::size_t p = 0; p < probes.size(); ++p) {
    RepresentationRow row{probes[p], mc[p], se[p], pde[p], std::abs(mc[p] - pde[p]), false};
    row.pass = row.gap <= std::max(options.abs_tol, 4.0 * row.se);
    res.pass = res.pass && row.pass;
    res.max_gap = std::max(res.max_gap, row.gap);
    res.rows.push_back(row);
  }
  return res;
}

}  // namespace bmap
