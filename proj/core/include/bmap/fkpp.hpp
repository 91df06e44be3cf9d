#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmap/matrix.hpp"
#include "bmap/model.hpp"
#include "bmap/simulator.hpp"
#include "bmap/spectral.hpp"

namespace bmap {

struct Grid1D {
  double x_min = 0.0;
  double x_max = 1.0;
  std::size_t n = 3;

  double dx() const { return (x_max - x_min) / static_cast<double>(n - 1); }
  double x(std::size_t k) const { return x_min + static_cast<double>(k) * dx(); }
  void check() const;

  // "xmin,xmax,n"
  static Grid1D parse(const std::string& text);
};

// u(t, x_k, i) stored as values[i][k].
struct FkppField {
  Grid1D grid;
  double t = 0.0;
  std::vector<Vector> values;

  std::size_t types() const noexcept { return values.size(); }
  // Linear interpolation, clamped to the end values outside the grid.
  double interpolate(std::size_t type, double x) const;
};

enum class InitKind { step, exp_tail, wave_candidate };

struct InitSpec {
  InitKind kind = InitKind::step;
  double theta = 1.0;                // exp_tail
  double x0 = 0.0;                   // step location
  std::vector<Vector> profile;       // wave_candidate, d x n

  static InitSpec step(double x0 = 0.0) { return {InitKind::step, 1.0, x0, {}}; }
  static InitSpec exp_tail(double theta) { return {InitKind::exp_tail, theta, 0.0, {}}; }
};

// Closed-form initial data for step and exp_tail specs. The step is centered:
// q_i left of x0, (1 + q_i)/2 at x0 and 1 right of it, so its crossing of the
// level (1 + q_i)/2 is exactly x0.
class InitialData {
 public:
  InitialData(const ModelSpec& model, const InitSpec& spec);
  double operator()(double x, std::size_t type) const;
  const Vector& extinction() const noexcept { return q_; }

 private:
  InitSpec spec_;
  Vector q_;
  Vector v_;
};

FkppField init_field(const Grid1D& grid, const ModelSpec& model, const InitSpec& spec);

struct FkppOptions {
  bool implicit_diffusion = false;
  double cfl = 0.4;  // explicit diffusion requires dt <= cfl * dx^2 / max sigma^2
};

// Method-of-lines discretization of the multitype FKPP system on a fixed grid
// with Dirichlet data q_i at x_min and 1 at x_max.
class FkppSolver {
 public:
  FkppSolver(const ModelSpec& model, const Grid1D& grid, FkppOptions options = {});

  const Grid1D& grid() const noexcept { return grid_; }
  const Vector& extinction() const noexcept { return q_; }
  double max_stable_dt() const;

  // Advances the field by dt in place. Values are clamped to [0, 1].
  void step(FkppField& field, double dt);

  std::size_t clamp_count() const noexcept { return clamp_count_; }
  double max_range_violation() const noexcept { return max_violation_; }

 private:
  struct Shift {
    std::ptrdiff_t m = 0;  // whole cells
    double w = 0.0;        // fraction of the next cell
    double rate = 0.0;
    std::size_t target = 0;
  };
  struct TypeTerms {
    double half_sigma2 = 0.0;
    double drift = 0.0;
    double out_rate = 0.0;  // motion-jump plus switching rate
    std::vector<Shift> shifts;
    double branch_rate = 0.0;
    Vector offspring;  // g_i coefficients
  };

  double shifted(const FkppField& f, const Shift& s, std::size_t k) const;

  Grid1D grid_;
  FkppOptions options_;
  Vector q_;
  std::vector<TypeTerms> terms_;
  std::size_t clamp_count_ = 0;
  double max_violation_ = 0.0;
  std::vector<Vector> scratch_;
};

// For each type, the first crossing of `level` from below, by linear
// interpolation. Throws FrontLostError if a type has no crossing.
Vector front_position(const FkppField& field, double level);

// (1 + max_i q_i) / 2
double default_front_level(const Vector& q);

struct FieldSummary {
  double t = 0.0;
  Vector front;          // NaN where the front has left the domain
  Vector gradient_mass;  // sum_k |u_{k+1} - u_k| per type
};

struct SolveResult {
  std::vector<FieldSummary> summaries;
  std::vector<FkppField> snapshots;  // at the requested times only
  FkppField final_field;
  double max_monotonicity_violation = 0.0;
  std::size_t clamp_count = 0;
};

// Steps to t_end (the last step is shortened if needed), summarizing every
// `observe_every` time units. `snapshot_times` selects full fields to keep.
SolveResult solve(FkppSolver& solver, FkppField field, double t_end, double dt, double observe_every,
                  double level, std::span<const double> snapshot_times = {});

struct FrontSpeedOptions {
  double dx = 0.05;
  double dt = 0.0;  // 0: half the explicit stability bound
  double t1 = 20.0;
  double t2 = 40.0;
  double observe_every = 0.25;
  std::optional<double> level;
  double max_fit_residual = 0.5;  // RMS of the linear fit
  bool implicit_diffusion = false;
};

struct FrontSpeedResult {
  Vector speed;     // per type
  Vector residual;  // RMS residual of the fit per type
  double predicted = 0.0;  // lambda(theta)/theta or the critical speed
  Grid1D grid;
  double dt = 0.0;
  double level = 0.0;
  std::size_t clamp_count = 0;
  std::vector<FieldSummary> trajectory;
};

// Solves from step or exp_tail data on an automatically padded domain and fits
// the front position over [t1, t2].
FrontSpeedResult front_speed(const ModelSpec& model, const InitSpec& init, const FrontSpeedOptions& options);

// Least-squares slope and RMS residual of y against t.
std::pair<double, double> linear_fit(std::span<const double> t, std::span<const double> y);

struct WaveProfile {
  double theta = 0.0;
  bool derivative = false;  // Z rather than W
  Vector probes;
  std::vector<Vector> value;  // [type][probe]
  std::vector<Vector> se;
  double stabilization = 0.0;  // relative change of mean |M| over the second half of the horizon
  std::string warning;

  FkppField as_field() const;  // requires evenly spaced probes
};

struct WaveProfileOptions {
  std::size_t replicas = 10000;
  double horizon = 8.0;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t max_particles = 1'000'000;
  double stabilization_gate = 0.05;
};

// Phi(x, i) = mean over replicas of exp(-e^{-theta x} M(horizon)) with
// M = W_theta, or Z_theta at the critical parameter.
WaveProfile wave_profile_mc(const ModelSpec& model, double theta, std::span<const double> probes,
                            const WaveProfileOptions& options);

struct MartingaleCheckRow {
  double t = 0.0;
  Start start;
  double mean = 0.0;
  double se = 0.0;
  double target = 0.0;
  double target_se = 0.0;
  double z = 0.0;
};

// E_{x,i}[prod_u Phi(X_u(t) + rho t, J_u(t))] against Phi(x, i) with
// rho = lambda(theta)/theta. `profile_se`, when given, enters the z-score.
std::vector<MartingaleCheckRow> martingale_problem_check(const ModelSpec& model, double theta,
                                                         const FkppField& profile,
                                                         std::span<const double> t_list,
                                                         std::span<const Start> probes, std::size_t replicas,
                                                         std::uint64_t seed, std::size_t workers = 1,
                                                         const FkppField* profile_se = nullptr);

// x where the profile of `type` first crosses `level`.
double profile_crossing(const FkppField& profile, std::size_t type, double level);

struct RepresentationRow {
  Start probe;
  double mc = 0.0;
  double se = 0.0;
  double pde = 0.0;
  double gap = 0.0;
  bool pass = false;
};

struct RepresentationResult {
  std::vector<RepresentationRow> rows;
  double max_gap = 0.0;
  bool pass = false;  // every gap <= max(abs_tol, 4 se)
  std::size_t clamp_count = 0;
};

struct RepresentationOptions {
  std::size_t replicas = 10000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  double dx = 0.02;
  double dt = 0.0;
  double abs_tol = 0.02;
};

RepresentationResult representation_check(const ModelSpec& model, const InitSpec& u0, double t,
                                          std::span<const Start> probes, const RepresentationOptions& options);

}  // namespace bmap
