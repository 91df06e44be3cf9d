#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "bmap/matrix.hpp"
#include "bmap/model.hpp"
#include "bmap/sampler.hpp"
#include "bmap/spectral.hpp"
#include "bmap/stats.hpp"

namespace bmap {

struct Start {
  double x = 0.0;
  std::size_t type = 0;
};

// Ulam-Harris style label: a per-replica unique id plus the parent's id and
// the child's index among its siblings. The root has parent == id == 0.
struct Particle {
  std::uint64_t id = 0;
  std::uint64_t parent = 0;
  std::uint32_t child_index = 0;
  std::uint32_t depth = 0;
  double position = 0.0;
  std::size_t type = 0;
  double birth_time = 0.0;
};

struct PopulationSnapshot {
  double time = 0.0;
  std::vector<Particle> particles;
  double min_position = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> counts_by_type;

  PopulationSnapshot() = default;
  PopulationSnapshot(double t, std::size_t d) : time(t), counts_by_type(d, 0) {}
  PopulationSnapshot(double t, std::size_t d, std::span<const Particle> ps);

  void add(const Particle& p);
  std::size_t size() const noexcept { return particles.size(); }
  bool extinct() const noexcept { return particles.empty(); }
};

struct SimConfig {
  double horizon = 1.0;
  std::vector<double> observation_times;  // sorted, within [0, horizon]
  std::size_t max_particles = 1'000'000;
  std::uint64_t master_seed = 0;
  std::size_t replicas = 1;
  std::size_t workers = 1;

  // Throws ValidationError on an inconsistent configuration.
  void check() const;
};

// Called once per observation time with the alive particles at that time.
using Observer = std::function<void(std::size_t obs_index, double time, std::span<const Particle>)>;

// Exact event-driven simulator of the branching MAP. Construction compiles the
// model's per-type clocks and samplers; run() is const and reentrant, so one
// instance can drive many replicas concurrently.
class Simulator {
 public:
  explicit Simulator(const ModelSpec& model);

  const ModelSpec& model() const noexcept { return model_; }

  // Replica stream is Rng(config.master_seed, replica). Throws
  // SimulationTruncated when the population exceeds config.max_particles.
  void run(Start start, const SimConfig& config, std::size_t replica, const Observer& observe) const;

 private:
  struct TypeClock {
    double sigma = 0.0;
    double drift = 0.0;
    double branch_rate = 0.0;
    double switch_rate = 0.0;
    double jump_rate = 0.0;
    double total = 0.0;
    DiscreteSampler offspring;
    std::vector<std::uint32_t> offspring_values;
    DiscreteSampler switch_target;
    std::vector<std::size_t> targets;
    std::vector<LawSampler> u_samplers;  // indexed by target position
    LawSampler jump;
  };

  ModelSpec model_;
  std::vector<TypeClock> clocks_;
};

std::vector<PopulationSnapshot> simulate(const ModelSpec& model, Start start, const SimConfig& config,
                                         std::size_t replica_index);

// W_theta(t) = sum_u exp(-(theta X_u + lambda t)) V_{J_u}.
double additive_martingale(const PopulationSnapshot& snapshot, const SpectralReport& spectral);
double additive_martingale(std::span<const Particle> particles, double time,
                           const SpectralReport& spectral);

// Z_theta(t) = sum_u exp(-theta X_u - lambda t) [V_J (X_u + lambda' t) - V'_J].
double derivative_martingale(const PopulationSnapshot& snapshot, const SpectralReport& spectral,
                             std::span<const double> v_prime);
double derivative_martingale(std::span<const Particle> particles, double time,
                             const SpectralReport& spectral, std::span<const double> v_prime);

struct VelocityEstimate {
  double speed_hat = 0.0;
  double std_error = 0.0;
  std::size_t surviving = 0;
  std::size_t replicas = 0;
};

// Mean of (min_u X_u(horizon) - x) / horizon over replicas alive at the horizon.
VelocityEstimate velocity_estimate(const ModelSpec& model, Start start, const SimConfig& config);

struct MartingaleSummary {
  double time = 0.0;
  MeanSe w;
  MeanSe z;
  Quantiles w_quantiles;         // all replicas
  Quantiles z_quantiles;
  double w_median_surviving = 0.0;
  double z_median_surviving = 0.0;
};

struct MartingaleTrajectory {
  double theta = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> w;  // [replica][obs]
  std::vector<std::vector<double>> z;
  std::vector<bool> survived;          // alive at the horizon
  std::vector<MartingaleSummary> summaries;
};

MartingaleTrajectory martingale_trajectory(const ModelSpec& model, Start start,
                                           const SpectralReport& spectral,
                                           std::span<const double> v_prime, const SimConfig& config);

struct ExtinctionEstimate {
  double frequency = 0.0;
  double std_error = 0.0;
  std::size_t cap_hits = 0;  // replicas stopped at the survival cap
};

// Fraction of replicas extinct by `config.horizon`. A replica whose population
// reaches `survival_cap` is counted as surviving; the error this introduces is
// at most max_i q_i^survival_cap per replica.
ExtinctionEstimate extinction_frequency(const ModelSpec& model, Start start, const SimConfig& config,
                                        std::size_t survival_cap = 200);

// Monte Carlo estimate of E_{0,i}[sum_u exp(-theta X_u(t)) 1{J_u(t) = j}] for
// each theta, observation time and (i, j), with standard errors.
struct CensusEstimate {
  std::vector<double> thetas;
  std::vector<double> times;
  std::vector<std::vector<Matrix>> mean;  // [theta][time](i, j)
  std::vector<std::vector<Matrix>> se;
};

CensusEstimate census_moments(const ModelSpec& model, std::span<const double> thetas,
                              const SimConfig& config);

}  // namespace bmap
