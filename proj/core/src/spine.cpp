#include "bmap/spine.hpp"

#include <cmath>
#include <limits>

#include "bmap/errors.hpp"
#include "bmap/parallel.hpp"
#include "bmap/rng.hpp"
#include "bmap/sampler.hpp"
#include "bmap/stats.hpp"

namespace bmap {
namespace {

// Reweights atoms by exp(-theta x); returns the normalized law and the factor
// sum_k p_k exp(-theta x_k).
std::pair<DiscreteLaw, double> exponential_tilt(const DiscreteLaw& law, double theta) {
  DiscreteLaw out;
  double total = 0.0;
  for (const auto& a : law.atoms) total += a.prob * std::exp(-theta * a.value);
  for (const auto& a : law.atoms) out.atoms.push_back({a.value, a.prob * std::exp(-theta * a.value) / total});
  return {out, total};
}

struct PathClock {
  double sigma = 0.0;
  double drift = 0.0;
  double switch_rate = 0.0;
  double jump_rate = 0.0;
  double fission_rate = 0.0;
  double total = 0.0;
  DiscreteSampler switch_target;
  std::vector<std::size_t> targets;
  std::vector<LawSampler> u_samplers;
  LawSampler jump;
  DiscreteSampler fission;
  std::vector<std::uint32_t> fission_values;
};

std::vector<PathClock> compile_clocks(const ModelSpec& map, std::span<const double> fission_rates,
                                      std::span<const DiscreteLaw> fission_laws) {
  std::vector<PathClock> clocks(map.d);
  for (std::size_t i = 0; i < map.d; ++i) {
    auto& c = clocks[i];
    const auto& mo = map.types[i].motion;
    c.sigma = std::sqrt(mo.sigma2);
    c.drift = mo.drift;
    c.switch_rate = map.switch_rate(i);
    c.jump_rate = mo.jump_rate;
    if (c.jump_rate > 0.0) c.jump = LawSampler(mo.jump_law);
    if (c.switch_rate > 0.0) {
      std::vector<double> w;
      for (std::size_t j = 0; j < map.d; ++j)
        if (j != i && map.q(i, j) > 0.0) {
          w.push_back(map.q(i, j));
          c.targets.push_back(j);
          c.u_samplers.emplace_back(map.u_laws[i][j]);
        }
      c.switch_target = DiscreteSampler(w);
    }
    if (!fission_rates.empty() && fission_rates[i] > 0.0) {
      c.fission_rate = fission_rates[i];
      c.fission = DiscreteSampler(fission_laws[i]);
      for (const auto& a : fission_laws[i].atoms) c.fission_values.push_back(static_cast<std::uint32_t>(a.value));
    }
    c.total = c.switch_rate + c.jump_rate + c.fission_rate;
  }
  return clocks;
}

SpinePath run_path(const std::vector<PathClock>& clocks, Start start, double horizon, Rng& rng) {
  if (start.type >= clocks.size()) throw DomainError("path simulation: start type out of range");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw DomainError("path simulation: bad horizon");
  SpinePath path;
  double t = 0.0, x = start.x;
  std::size_t type = start.type;
  auto push = [&](bool fission) {
    path.times.push_back(t);
    path.positions.push_back(x);
    path.types.push_back(type);
    path.fission_flags.push_back(fission);
  };
  push(false);
  for (;;) {
    const auto& c = clocks[type];
    const double dt = c.total > 0.0 ? rng.exponential(c.total) : std::numeric_limits<double>::infinity();
    const double step = std::min(dt, horizon - t);
    x += c.drift * step;
    if (c.sigma > 0.0 && step > 0.0) x += c.sigma * std::sqrt(step) * rng.normal();
    if (t + dt >= horizon) {
      t = horizon;
      if (path.times.back() != horizon) push(false);
      return path;
    }
    t += dt;
    const double e = rng.uniform() * c.total;
    if (e < c.switch_rate) {
      const std::size_t pos = c.switch_target.sample_index(rng);
      if (!c.u_samplers[pos].trivial_zero()) x += c.u_samplers[pos].sample(rng);
      type = c.targets[pos];
      push(false);
    } else if (e < c.switch_rate + c.jump_rate) {
      x += c.jump.sample(rng);
      push(false);
    } else {
      const std::uint32_t k = c.fission_values[c.fission.sample_index(rng)];
      path.fission_marks.push_back({t, k});
      push(true);
    }
  }
}

}  // namespace

ModelSpec TiltedModel::as_map_model() const {
  ModelSpec m;
  m.d = d;
  m.q = q_tilde;
  m.u_laws = u_tilde;
  for (std::size_t i = 0; i < d; ++i) m.types.push_back({motion_tilde[i], 0.0, DiscreteLaw::point_mass(1.0)});
  return m;
}

TiltedModel tilt_model(const ModelSpec& model, const SpectralReport& spectral) {
  const double theta = spectral.theta;
  if (!(theta > 0.0)) throw DomainError("tilt_model: theta must be positive");
  require_valid(model);
  const std::size_t d = model.d;
  if (spectral.v_right.size() != d) throw DomainError("tilt_model: spectral report missing or of wrong dimension");
  const Vector& v = spectral.v_right;
  const Matrix g = switch_transform(model, theta);

  TiltedModel t;
  t.theta = theta;
  t.d = d;
  t.q_tilde = Matrix(d, d);
  t.u_tilde.assign(d, std::vector<DiscreteLaw>(d, DiscreteLaw::point_mass(0.0)));
  for (std::size_t k = 0; k < d; ++k) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (j == k || model.q(k, j) == 0.0) continue;
      t.q_tilde(k, j) = model.q(k, j) * v[j] * g(k, j) / v[k];
      row += t.q_tilde(k, j);
      t.u_tilde[k][j] = exponential_tilt(model.u_laws[k][j], theta).first;
    }
    t.q_tilde(k, k) = -row;
  }
  for (std::size_t k = 0; k < d; ++k) {
    const auto& ty = model.types[k];
    MotionSpec mo;
    mo.sigma2 = ty.motion.sigma2;
    mo.drift = ty.motion.drift - theta * ty.motion.sigma2;
    if (ty.motion.jump_rate > 0.0) {
      auto [law, factor] = exponential_tilt(ty.motion.jump_law, theta);
      mo.jump_law = std::move(law);
      mo.jump_rate = ty.motion.jump_rate * factor;
    }
    t.motion_tilde.push_back(std::move(mo));
    const double m = offspring_mean(ty.offspring);
    const double rate = ty.branch_rate * m;
    t.spine_branch_rate.push_back(rate);
    t.spine_offspring.push_back(rate > 0.0 ? size_biased(ty.offspring) : DiscreteLaw{});
  }
  return t;
}

SpinePath simulate_spine(const TiltedModel& tilted, Start start, double horizon, std::uint64_t seed,
                         std::size_t replica) {
  const ModelSpec map = tilted.as_map_model();
  const auto clocks = compile_clocks(map, tilted.spine_branch_rate, tilted.spine_offspring);
  Rng rng(seed, replica);
  return run_path(clocks, start, horizon, rng);
}

SpinePath simulate_map_path(const ModelSpec& model, Start start, double horizon, std::uint64_t seed,
                            std::size_t replica) {
  require_valid(model);
  const auto clocks = compile_clocks(model, {}, {});
  Rng rng(seed, replica);
  return run_path(clocks, start, horizon, rng);
}

SpeedEstimate spine_speed(const TiltedModel& tilted, Start start, double horizon, std::size_t replicas,
                          std::uint64_t seed, std::size_t workers) {
  if (!(horizon > 0.0)) throw DomainError("spine_speed: horizon must be positive");
  if (replicas == 0) throw DomainError("spine_speed: replicas must be >= 1");
  const ModelSpec map = tilted.as_map_model();
  const auto clocks = compile_clocks(map, tilted.spine_branch_rate, tilted.spine_offspring);
  const auto speeds = run_replicas(replicas, workers, [&](std::size_t r) {
    Rng rng(seed, r);
    return (run_path(clocks, start, horizon, rng).end_position() - start.x) / horizon;
  });
  const MeanSe s = mean_se(speeds);
  return {s.mean, s.se};
}

double tilted_spectral_check(const ModelSpec& model, double theta, std::span<const double> alpha_grid) {
  const SpectralReport base = spectral_report(model, theta);
  const ModelSpec map = tilt_model(model, base).as_map_model();
  double worst = 0.0;
  for (double alpha : alpha_grid) {
    const double tilted = pf_eigenpair(matrix_exponent(map, alpha)).lambda;
    const double shifted = pf_eigenvalue(model, alpha + theta) - base.lambda;
    worst = std::max(worst, std::abs(tilted - shifted));
  }
  return worst;
}

double TestFunction::operator()(double x, std::size_t type) const {
  switch (kind) {
    case Kind::one: return 1.0;
    case Kind::type_indicator: return type == type_index ? 1.0 : 0.0;
    case Kind::exp_abs: return std::exp(-std::abs(x));
  }
  return 0.0;
}

std::string TestFunction::id() const {
  switch (kind) {
    case Kind::one: return "one";
    case Kind::type_indicator: return "type:" + std::to_string(type_index);
    case Kind::exp_abs: return "exp-abs";
  }
  return "unknown";
}

TestFunction TestFunction::parse(const std::string& id) {
  if (id == "one") return {Kind::one, 0};
  if (id == "exp-abs") return {Kind::exp_abs, 0};
  if (id.rfind("type:", 0) == 0) {
    try {
      return {Kind::type_indicator, static_cast<std::size_t>(std::stoul(id.substr(5)))};
    } catch (const std::exception&) {
    }
  }
  throw ValidationError("unknown test function '" + id + "' (expected one, type:<j>, exp-abs)");
}

std::vector<TestFunction> test_function_catalog(std::size_t d) {
  std::vector<TestFunction> out{{TestFunction::Kind::one, 0}};
  for (std::size_t j = 0; j < d; ++j) out.push_back({TestFunction::Kind::type_indicator, j});
  out.push_back({TestFunction::Kind::exp_abs, 0});
  return out;
}

ManyToOneResult many_to_one_check(const ModelSpec& model, double theta, double t, const TestFunction& g,
                                  std::size_t replicas, std::uint64_t seed, Start start,
                                  std::size_t workers) {
  if (!(t >= 0.0)) throw DomainError("many_to_one_check: t must be >= 0");
  if (g.kind == TestFunction::Kind::type_indicator && g.type_index >= model.d)
    throw DomainError("many_to_one_check: indicator type out of range");
  const SpectralReport spectral = spectral_report(model, theta);
  const TiltedModel tilted = tilt_model(model, spectral);

  ManyToOneResult out;
  out.function_id = g.id();

  const Simulator sim(model);
  SimConfig cfg;
  cfg.horizon = std::max(t, 1e-300);
  cfg.observation_times = {t};
  cfg.master_seed = seed;
  const double prefactor = std::exp(theta * start.x) / spectral.v_right[start.type];
  const auto lhs = run_replicas(replicas, workers, [&](std::size_t r) {
    double s = 0.0;
    sim.run(start, cfg, r, [&](std::size_t, double time, std::span<const Particle> ps) {
      for (const auto& p : ps)
        s += g(p.position, p.type) * std::exp(-theta * p.position - spectral.lambda * time) *
             spectral.v_right[p.type];
    });
    return prefactor * s;
  });

  const std::uint64_t spine_seed = derive_seed(seed, 0x5b1e);
  const auto rhs = run_replicas(replicas, workers, [&](std::size_t r) {
    const SpinePath path = simulate_spine(tilted, start, t, spine_seed, r);
    return g(path.end_position(), path.end_type());
  });

  const MeanSe l = mean_se(lhs), rr = mean_se(rhs);
  out.lhs = l.mean;
  out.lhs_se = l.se;
  out.rhs = rr.mean;
  out.rhs_se = rr.se;
  const double denom = std::hypot(l.se, rr.se);
  out.z_score = denom > 0.0 ? (l.mean - rr.mean) / denom
                            : (l.mean == rr.mean ? 0.0 : std::numeric_limits<double>::infinity());
  return out;
}

double tilt_weight(const SpinePath& path, const ModelSpec& model, const SpectralReport& spectral) {
  const std::size_t n = path.times.size();
  if (n == 0 || path.positions.size() != n || path.types.size() != n)
    throw DomainError("tilt_weight: misaligned path data");
  if (spectral.v_right.size() != model.d) throw DomainError("tilt_weight: spectral dimension mismatch");
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (path.types[k] >= model.d) throw DomainError("tilt_weight: type out of range");
    const auto& ty = model.types[path.types[k]];
    integral += (path.times[k + 1] - path.times[k]) * ty.branch_rate * (offspring_mean(ty.offspring) - 1.0);
  }
  const double elapsed = path.times.back() - path.times.front();
  const double dx = path.positions.back() - path.positions.front();
  return std::exp(-spectral.theta * dx - spectral.lambda * elapsed + integral) *
         spectral.v_right[path.types.back()] / spectral.v_right[path.types.front()];
}

}  // namespace bmap
