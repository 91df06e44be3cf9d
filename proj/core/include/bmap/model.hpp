#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bmap/matrix.hpp"

namespace bmap {

// Probability and row-sum tolerance used by validate().
inline constexpr double kNormalizationTol = 1e-12;

// Largest supported number of types.
inline constexpr std::size_t kMaxTypes = 64;

struct Atom {
  double value = 0.0;
  double prob = 0.0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

// Finite discrete probability law. Used for motion jumps, transitional
// jumps U_ij and (with non-negative integer atoms) offspring numbers.
struct DiscreteLaw {
  std::vector<Atom> atoms;

  static DiscreteLaw point_mass(double value) { return DiscreteLaw{{{value, 1.0}}}; }

  bool is_point_mass_at_zero() const;
  double mean() const;
  // E[exp(-theta X)] and its theta-derivative.
  double laplace(double theta) const;
  double laplace_derivative(double theta) const;
  double max_abs_value() const;

  friend bool operator==(const DiscreteLaw&, const DiscreteLaw&) = default;
};

// Brownian motion with drift plus a compound Poisson part with a finite
// atomic jump law. `drift` is the total (uncompensated) drift: the path moves
// by +drift per unit time and phi(theta) carries -drift*theta.
struct MotionSpec {
  double sigma2 = 0.0;
  double drift = 0.0;
  double jump_rate = 0.0;
  DiscreteLaw jump_law;

  bool trivial() const { return sigma2 == 0.0 && drift == 0.0 && jump_rate == 0.0; }

  friend bool operator==(const MotionSpec&, const MotionSpec&) = default;
};

struct TypeSpec {
  MotionSpec motion;
  double branch_rate = 0.0;
  DiscreteLaw offspring;

  friend bool operator==(const TypeSpec&, const TypeSpec&) = default;
};

struct ModelSpec {
  std::size_t d = 0;
  std::vector<TypeSpec> types;
  Matrix q;                                    // switching intensities
  std::vector<std::vector<DiscreteLaw>> u_laws;  // transitional jumps, d x d

  // Single-type model with q = [0].
  static ModelSpec single_type(TypeSpec type);

  double switch_rate(std::size_t i) const { return -q(i, i); }
  const DiscreteLaw& u_law(std::size_t i, std::size_t j) const { return u_laws[i][j]; }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Every violated invariant, as a readable message. Empty means valid.
std::vector<std::string> validate(const ModelSpec& model);
std::vector<std::string> validate_law(const DiscreteLaw& law, const std::string& what);

// Throws ValidationError listing all violations when the model is invalid.
void require_valid(const ModelSpec& model);

// Support-graph reachability of the off-diagonal pattern of q.
bool is_irreducible(const Matrix& q);

// phi(theta) = sigma2/2 theta^2 - drift theta + rate * sum_k p_k (exp(-theta x_k) - 1).
double laplace_exponent(const MotionSpec& motion, double theta);
double laplace_exponent_derivative(const MotionSpec& motion, double theta);

// G_ij(theta) = E[exp(-theta U_ij)]; unit diagonal.
Matrix switch_transform(const ModelSpec& model, double theta);
Matrix switch_transform_derivative(const ModelSpec& model, double theta);

// sum_k k mu(k); atoms must be non-negative integers.
double offspring_mean(const DiscreteLaw& law);

// Dense coefficients c_k = mu(k), k = 0..max atom.
std::vector<double> offspring_coefficients(const DiscreteLaw& law);
// Generating function g(s) = sum_k mu(k) s^k, evaluated by Horner.
double offspring_pgf(std::span<const double> coefficients, double s);
double offspring_pgf(const DiscreteLaw& law, double s);

// Size-biased law k mu(k) / m on k >= 1.
DiscreteLaw size_biased(const DiscreteLaw& offspring);

}  // namespace bmap
