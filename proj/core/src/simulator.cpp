#include "bmap/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "bmap/errors.hpp"
#include "bmap/parallel.hpp"
#include "bmap/rng.hpp"

namespace bmap {

PopulationSnapshot::PopulationSnapshot(double t, std::size_t d, std::span<const Particle> ps)
    : time(t), counts_by_type(d, 0) {
  particles.reserve(ps.size());
  for (const auto& p : ps) add(p);
}

void PopulationSnapshot::add(const Particle& p) {
  if (p.type >= counts_by_type.size()) throw DomainError("PopulationSnapshot: type out of range");
  particles.push_back(p);
  ++counts_by_type[p.type];
  min_position = std::min(min_position, p.position);
}

void SimConfig::check() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon must be positive");
  if (max_particles == 0) throw ValidationError("max_particles must be positive");
  if (replicas == 0) throw ValidationError("replicas must be >= 1");
  for (std::size_t k = 0; k < observation_times.size(); ++k) {
    const double t = observation_times[k];
    if (!(t >= 0.0 && t <= horizon)) throw ValidationError("observation time outside [0, horizon]");
    if (k > 0 && t < observation_times[k - 1]) throw ValidationError("observation times not sorted");
  }
}

Simulator::Simulator(const ModelSpec& model) : model_(model) {
  require_valid(model_);
  const std::size_t d = model_.d;
  clocks_.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto& t = model_.types[i];
    auto& c = clocks_[i];
    c.sigma = std::sqrt(t.motion.sigma2);
    c.drift = t.motion.drift;
    c.branch_rate = t.branch_rate;
    c.switch_rate = model_.switch_rate(i);
    c.jump_rate = t.motion.jump_rate;
    c.total = c.branch_rate + c.switch_rate + c.jump_rate;
    c.offspring = DiscreteSampler(t.offspring);
    for (const auto& a : t.offspring.atoms) c.offspring_values.push_back(static_cast<std::uint32_t>(a.value));
    if (c.jump_rate > 0.0) c.jump = LawSampler(t.motion.jump_law);
    if (c.switch_rate > 0.0) {
      std::vector<double> w;
      for (std::size_t j = 0; j < d; ++j)
        if (j != i && model_.q(i, j) > 0.0) {
          w.push_back(model_.q(i, j));
          c.targets.push_back(j);
          c.u_samplers.emplace_back(model_.u_laws[i][j]);
        }
      c.switch_target = DiscreteSampler(w);
    }
  }
}

namespace {

struct Live {
  Particle p;
  double last_t = 0.0;
};

}  // namespace

void Simulator::run(Start start, const SimConfig& config, std::size_t replica,
                    const Observer& observe) const {
  config.check();
  const std::size_t d = model_.d;
  if (start.type >= d) throw DomainError("simulate: start type out of range");
  if (!std::isfinite(start.x)) throw DomainError("simulate: start position must be finite");

  Rng rng(config.master_seed, replica);
  std::vector<std::vector<Live>> buckets(d);
  buckets[start.type].push_back({Particle{0, 0, 0, 0, start.x, start.type, 0.0}, 0.0});
  std::size_t alive = 1;
  std::uint64_t next_id = 1;

  auto advance = [&](Live& l, double t) {
    const double dt = t - l.last_t;
    if (dt <= 0.0) return;
    const auto& c = clocks_[l.p.type];
    l.p.position += c.drift * dt;
    if (c.sigma > 0.0) l.p.position += c.sigma * std::sqrt(dt) * rng.normal();
    l.last_t = t;
  };

  std::vector<Particle> scratch;
  std::size_t next_obs = 0;
  const auto& obs = config.observation_times;
  auto record_until = [&](double t_limit) {
    while (next_obs < obs.size() && obs[next_obs] <= t_limit) {
      const double t_obs = obs[next_obs];
      scratch.clear();
      scratch.reserve(alive);
      for (auto& bucket : buckets)
        for (auto& l : bucket) {
          advance(l, t_obs);
          scratch.push_back(l.p);
        }
      observe(next_obs, t_obs, scratch);
      ++next_obs;
    }
  };

  double t = 0.0;
  for (;;) {
    double total_rate = 0.0;
    for (std::size_t i = 0; i < d; ++i) total_rate += static_cast<double>(buckets[i].size()) * clocks_[i].total;
    const double t_next = total_rate > 0.0 ? t + rng.exponential(total_rate)
                                           : std::numeric_limits<double>::infinity();
    if (t_next > config.horizon || alive == 0) {
      record_until(config.horizon);
      return;
    }
    record_until(t_next);
    t = t_next;

    // Which particle fires: type proportional to n_i * rate_i, then uniform.
    double u = rng.uniform() * total_rate;
    std::size_t i = 0;
    for (; i + 1 < d; ++i) {
      const double w = static_cast<double>(buckets[i].size()) * clocks_[i].total;
      if (u < w) break;
      u -= w;
    }
    while (buckets[i].empty()) i = (i + 1) % d;  // guards rounding at the end of the scan
    auto& bucket = buckets[i];
    const std::size_t k = std::min<std::size_t>(rng.below(bucket.size()), bucket.size() - 1);
    const auto& c = clocks_[i];
    advance(bucket[k], t);

    const double e = rng.uniform() * c.total;
    if (e < c.branch_rate) {
      const Live parent = bucket[k];
      bucket[k] = bucket.back();
      bucket.pop_back();
      --alive;
      const std::uint32_t children = c.offspring_values[c.offspring.sample_index(rng)];
      for (std::uint32_t ch = 0; ch < children; ++ch) {
        Particle p = parent.p;
        p.id = next_id++;
        p.parent = parent.p.id;
        p.child_index = ch;
        p.depth = parent.p.depth + 1;
        p.birth_time = t;
        bucket.push_back({p, t});
      }
      alive += children;
      if (alive > config.max_particles) throw SimulationTruncated(t, alive);
    } else if (e < c.branch_rate + c.switch_rate) {
      const std::size_t pos = c.switch_target.sample_index(rng);
      const std::size_t j = c.targets[pos];
      Live moved = bucket[k];
      bucket[k] = bucket.back();
      bucket.pop_back();
      if (!c.u_samplers[pos].trivial_zero()) moved.p.position += c.u_samplers[pos].sample(rng);
      moved.p.type = j;
      buckets[j].push_back(moved);
    } else {
      bucket[k].p.position += c.jump.sample(rng);
    }
  }
}

std::vector<PopulationSnapshot> simulate(const ModelSpec& model, Start start, const SimConfig& config,
                                         std::size_t replica_index) {
  const Simulator sim(model);
  std::vector<PopulationSnapshot> out;
  out.reserve(config.observation_times.size());
  sim.run(start, config, replica_index, [&](std::size_t, double t, std::span<const Particle> ps) {
    out.emplace_back(t, model.d, ps);
  });
  return out;
}

namespace {

void check_dims(const SpectralReport& spectral, std::size_t d_needed) {
  if (spectral.v_right.size() <= d_needed) throw DomainError("martingale: type index exceeds spectral dimension");
}

std::size_t max_type(std::span<const Particle> ps) {
  std::size_t m = 0;
  for (const auto& p : ps) m = std::max(m, p.type);
  return m;
}

}  // namespace

double additive_martingale(std::span<const Particle> particles, double time,
                           const SpectralReport& spectral) {
  if (particles.empty()) return 0.0;
  check_dims(spectral, max_type(particles));
  double w = 0.0;
  for (const auto& p : particles)
    w += std::exp(-(spectral.theta * p.position + spectral.lambda * time)) * spectral.v_right[p.type];
  return w;
}

double additive_martingale(const PopulationSnapshot& snapshot, const SpectralReport& spectral) {
  if (snapshot.counts_by_type.size() != spectral.v_right.size())
    throw DomainError("additive_martingale: dimension mismatch between snapshot and spectral report");
  return additive_martingale(snapshot.particles, snapshot.time, spectral);
}

double derivative_martingale(std::span<const Particle> particles, double time,
                             const SpectralReport& spectral, std::span<const double> v_prime) {
  if (v_prime.size() != spectral.v_right.size())
    throw DomainError("derivative_martingale: v_prime dimension mismatch");
  if (particles.empty()) return 0.0;
  check_dims(spectral, max_type(particles));
  double z = 0.0;
  for (const auto& p : particles) {
    const double weight = std::exp(-spectral.theta * p.position - spectral.lambda * time);
    z += weight * (spectral.v_right[p.type] * (p.position + spectral.lambda_prime * time) - v_prime[p.type]);
  }
  return z;
}

double derivative_martingale(const PopulationSnapshot& snapshot, const SpectralReport& spectral,
                             std::span<const double> v_prime) {
  if (snapshot.counts_by_type.size() != spectral.v_right.size())
    throw DomainError("derivative_martingale: dimension mismatch between snapshot and spectral report");
  return derivative_martingale(snapshot.particles, snapshot.time, spectral, v_prime);
}

VelocityEstimate velocity_estimate(const ModelSpec& model, Start start, const SimConfig& config) {
  config.check();
  const Simulator sim(model);
  SimConfig cfg = config;
  cfg.observation_times = {config.horizon};
  const auto mins = run_replicas(cfg.replicas, cfg.workers, [&](std::size_t r) {
    double m = std::numeric_limits<double>::infinity();
    sim.run(start, cfg, r, [&](std::size_t, double, std::span<const Particle> ps) {
      for (const auto& p : ps) m = std::min(m, p.position);
    });
    return m;
  });
  std::vector<double> speeds;
  for (double m : mins)
    if (std::isfinite(m)) speeds.push_back((m - start.x) / config.horizon);
  if (speeds.empty()) throw Error("velocity_estimate: every replica went extinct");
  const MeanSe s = mean_se(speeds);
  return {s.mean, s.se, speeds.size(), cfg.replicas};
}

MartingaleTrajectory martingale_trajectory(const ModelSpec& model, Start start,
                                           const SpectralReport& spectral,
                                           std::span<const double> v_prime, const SimConfig& config) {
  config.check();
  if (spectral.v_right.size() != model.d || v_prime.size() != model.d)
    throw DomainError("martingale_trajectory: spectral data dimension mismatch");
  const Simulator sim(model);
  const std::size_t n_obs = config.observation_times.size();

  struct Row {
    std::vector<double> w, z;
    bool survived = false;
  };
  const auto rows = run_replicas(config.replicas, config.workers, [&](std::size_t r) {
    Row row;
    row.w.assign(n_obs, 0.0);
    row.z.assign(n_obs, 0.0);
    sim.run(start, config, r, [&](std::size_t k, double t, std::span<const Particle> ps) {
      row.w[k] = additive_martingale(ps, t, spectral);
      row.z[k] = derivative_martingale(ps, t, spectral, v_prime);
      if (k + 1 == n_obs) row.survived = !ps.empty();
    });
    return row;
  });

  MartingaleTrajectory out;
  out.theta = spectral.theta;
  out.times = config.observation_times;
  for (const auto& row : rows) {
    out.w.push_back(row.w);
    out.z.push_back(row.z);
    out.survived.push_back(row.survived);
  }
  for (std::size_t k = 0; k < n_obs; ++k) {
    std::vector<double> w, z, ws, zs;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      w.push_back(rows[r].w[k]);
      z.push_back(rows[r].z[k]);
      if (rows[r].survived) {
        ws.push_back(rows[r].w[k]);
        zs.push_back(rows[r].z[k]);
      }
    }
    MartingaleSummary s;
    s.time = out.times[k];
    s.w = mean_se(w);
    s.z = mean_se(z);
    s.w_quantiles = summary_quantiles(w);
    s.z_quantiles = summary_quantiles(z);
    s.w_median_surviving = quantile(ws, 0.5);
    s.z_median_surviving = quantile(zs, 0.5);
    out.summaries.push_back(s);
  }
  return out;
}

ExtinctionEstimate extinction_frequency(const ModelSpec& model, Start start, const SimConfig& config,
                                        std::size_t survival_cap) {
  config.check();
  const Simulator sim(model);
  SimConfig cfg = config;
  cfg.observation_times = {config.horizon};
  cfg.max_particles = std::max<std::size_t>(survival_cap, 1);
  enum Outcome : int { extinct = 0, alive = 1, capped = 2 };
  const auto outcomes = run_replicas(cfg.replicas, cfg.workers, [&](std::size_t r) {
    int result = alive;
    try {
      sim.run(start, cfg, r, [&](std::size_t, double, std::span<const Particle> ps) {
        result = ps.empty() ? extinct : alive;
      });
    } catch (const SimulationTruncated&) {
      result = capped;
    }
    return result;
  });
  std::vector<double> dead;
  ExtinctionEstimate out;
  for (int o : outcomes) {
    dead.push_back(o == extinct ? 1.0 : 0.0);
    if (o == capped) ++out.cap_hits;
  }
  const MeanSe s = mean_se(dead);
  out.frequency = s.mean;
  out.std_error = s.se;
  return out;
}

CensusEstimate census_moments(const ModelSpec& model, std::span<const double> thetas,
                              const SimConfig& config) {
  config.check();
  const Simulator sim(model);
  const std::size_t d = model.d, nt = thetas.size(), no = config.observation_times.size();
  CensusEstimate out;
  out.thetas.assign(thetas.begin(), thetas.end());
  out.times = config.observation_times;
  out.mean.assign(nt, std::vector<Matrix>(no, Matrix(d, d)));
  out.se.assign(nt, std::vector<Matrix>(no, Matrix(d, d)));

  for (std::size_t i = 0; i < d; ++i) {
    // Replica streams for start type i are offset so rows stay independent.
    const auto samples = run_replicas(config.replicas, config.workers, [&](std::size_t r) {
      std::vector<double> acc(nt * no * d, 0.0);
      sim.run({0.0, i}, config, i * config.replicas + r,
              [&](std::size_t k, double, std::span<const Particle> ps) {
                for (const auto& p : ps)
                  for (std::size_t a = 0; a < nt; ++a)
                    acc[(a * no + k) * d + p.type] += std::exp(-thetas[a] * p.position);
              });
      return acc;
    });
    for (std::size_t a = 0; a < nt; ++a)
      for (std::size_t k = 0; k < no; ++k)
        for (std::size_t j = 0; j < d; ++j) {
          std::vector<double> xs;
          xs.reserve(samples.size());
          for (const auto& s : samples) xs.push_back(s[(a * no + k) * d + j]);
          const MeanSe ms = mean_se(xs);
          out.mean[a][k](i, j) = ms.mean;
          out.se[a][k](i, j) = ms.se;
        }
  }
  return out;
}

}  // namespace bmap
