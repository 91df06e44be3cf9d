#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bmap/matrix.hpp"
#include "bmap/model.hpp"
#include "bmap/simulator.hpp"
#include "bmap/spectral.hpp"

namespace bmap {

// Characteristics of the spine under the exponentially tilted measure at
// parameter theta: tilted switching, transitional jumps and motion, plus the
// spine's fission rate beta_i m_i and size-biased offspring law.
struct TiltedModel {
  double theta = 0.0;
  std::size_t d = 0;
  Matrix q_tilde;
  std::vector<std::vector<DiscreteLaw>> u_tilde;
  std::vector<MotionSpec> motion_tilde;
  Vector spine_branch_rate;
  std::vector<DiscreteLaw> spine_offspring;  // empty law where beta_i m_i = 0

  // The tilted MAP as a model without branching; its matrix exponent is the
  // tilted MAP exponent F~(alpha).
  ModelSpec as_map_model() const;
};

struct FissionMark {
  double time = 0.0;
  std::uint32_t children = 0;
};

// A single MAP trajectory. Entries are recorded at t = 0, after every event
// and at the horizon; between entries the type is constant.
struct SpinePath {
  std::vector<double> times;
  std::vector<double> positions;
  std::vector<std::size_t> types;
  std::vector<FissionMark> fission_marks;
  std::vector<bool> fission_flags;  // entry created by a fission event

  double end_time() const { return times.back(); }
  double end_position() const { return positions.back(); }
  std::size_t end_type() const { return types.back(); }
};

TiltedModel tilt_model(const ModelSpec& model, const SpectralReport& spectral);

// Event-driven simulation of the tilted MAP with a fission clock at rate
// beta_i m_i (marks only). Stream: Rng(seed, replica).
SpinePath simulate_spine(const TiltedModel& tilted, Start start, double horizon, std::uint64_t seed,
                         std::size_t replica = 0);

// Untilted MAP path of the model's motion and switching (no branching).
SpinePath simulate_map_path(const ModelSpec& model, Start start, double horizon, std::uint64_t seed,
                            std::size_t replica = 0);

struct SpeedEstimate {
  double speed_hat = 0.0;
  double std_error = 0.0;
};

// Mean of (X_xi(horizon) - x) / horizon over independent spines.
SpeedEstimate spine_speed(const TiltedModel& tilted, Start start, double horizon, std::size_t replicas,
                          std::uint64_t seed, std::size_t workers = 1);

// max over alpha of |PF(F~(alpha)) - (lambda(alpha + theta) - lambda(theta))|.
double tilted_spectral_check(const ModelSpec& model, double theta, std::span<const double> alpha_grid);

// Fixed, versioned catalog of test functions for the many-to-one identity.
inline constexpr const char* kTestFunctionCatalogVersion = "g-catalog-v1";

struct TestFunction {
  enum class Kind { one, type_indicator, exp_abs };
  Kind kind = Kind::one;
  std::size_t type_index = 0;  // for type_indicator

  double operator()(double x, std::size_t type) const;
  std::string id() const;  // "one", "type:<j>", "exp-abs"
  static TestFunction parse(const std::string& id);
};

std::vector<TestFunction> test_function_catalog(std::size_t d);

struct ManyToOneResult {
  std::string function_id;
  double lhs = 0.0;
  double lhs_se = 0.0;
  double rhs = 0.0;
  double rhs_se = 0.0;
  double z_score = 0.0;
};

// LHS: exp(theta x)/V_i * E[sum_u g(X_u,J_u) exp(-theta X_u - lambda t) V_{J_u}]
// over the branching system; RHS: E[g] at time t along independent spines.
ManyToOneResult many_to_one_check(const ModelSpec& model, double theta, double t, const TestFunction& g,
                                  std::size_t replicas, std::uint64_t seed, Start start = {},
                                  std::size_t workers = 1);

// Xi(t)/Xi(0) = exp(-theta (X_t - X_0) - lambda t + int_0^t beta(m-1)(J_s) ds) V_{J_t}/V_{J_0}
// evaluated on an untilted MAP path.
double tilt_weight(const SpinePath& path, const ModelSpec& model, const SpectralReport& spectral);

}  // namespace bmap
