#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "bmap/matrix.hpp"
#include "bmap/model.hpp"

namespace bmap {

// Numerical tolerances of the spectral routines. The defaults are part of the
// public contract; tests pin them.
struct SpectralOptions {
  double eig_tol = 1e-13;               // relative eigenvector residual
  std::size_t eig_max_iter = 100000;
  double theta_star_tol = 1e-10;        // |h(theta*)| <= tol * max(1, |lambda|)
  double extinction_tol = 1e-12;
  std::size_t extinction_max_iter = 1000000;
  double critical_rel_tol = 1e-9;       // |theta - theta*| <= tol * theta* is critical
  double expm_tol = 1e-12;
  double v_prime_rel_step = 1e-5;       // h = step * max(1, theta)
  double lambda_prime_zero_step = 1e-6; // one-sided difference at theta <= 0
};

struct EigenPair {
  double lambda = 0.0;
  Vector v_right;
  Vector y_left;
  std::size_t iterations = 0;
};

struct SpectralReport {
  double theta = 0.0;
  Matrix m_matrix;
  double lambda = 0.0;
  Vector v_right;
  Vector y_left;
  double lambda_prime = 0.0;
  Vector pi;
};

enum class Regime { supercritical, critical, subcritical };

std::string_view to_string(Regime r);

struct ExtinctionResult {
  Vector q;
  bool degenerate = false;  // lambda(0) <= 0: extinction is certain, q = 1
  std::size_t iterations = 0;
};

struct RegimeReport {
  double theta_star = 0.0;
  double lambda0 = 0.0;
  Vector extinction;
  double critical_speed = 0.0;  // lambda(theta*) / theta*
  double critical_rel_tol = 1e-9;

  Regime regime_of(double theta) const;
};

// M(theta) = diag(phi_i) + Q o G(theta) + diag(beta_i (m_i - 1)).
Matrix matrix_exponent(const ModelSpec& model, double theta);
// Entrywise theta-derivative of M.
Matrix matrix_exponent_derivative(const ModelSpec& model, double theta);

// Perron-Frobenius pair of a matrix with non-negative off-diagonal entries and
// irreducible support. Normalized ||V||_1 = 1, Y^T V = 1.
EigenPair pf_eigenpair(const Matrix& m, const SpectralOptions& opts = {});
// Same, normalized pi^T V = 1, Y^T V = 1.
EigenPair pf_eigenpair(const Matrix& m, std::span<const double> pi,
                       const SpectralOptions& opts = {});

Vector stationary_distribution(const Matrix& q);

SpectralReport spectral_report(const ModelSpec& model, double theta,
                               const SpectralOptions& opts = {});

// PF eigenvalue of M(theta) only.
double pf_eigenvalue(const ModelSpec& model, double theta, const SpectralOptions& opts = {});

// Y^T M'(theta) V; theta must be positive.
double lambda_prime(const ModelSpec& model, double theta, const SpectralOptions& opts = {});

// Central difference of the normalized right eigenvector.
Vector v_prime(const ModelSpec& model, double theta, const SpectralOptions& opts = {});

// Root of theta lambda'(theta) = lambda(theta). Throws AssumptionError when
// lambda(0) <= 0 or lambda/theta has no interior minimum.
double theta_star(const ModelSpec& model, const SpectralOptions& opts = {});

ExtinctionResult extinction_vector(const ModelSpec& model, const SpectralOptions& opts = {});

// exp(t m) by scaling and squaring of a truncated Taylor series.
Matrix matrix_exp(const Matrix& m, double t, const SpectralOptions& opts = {});

Regime regime_of(const ModelSpec& model, double theta, const SpectralOptions& opts = {});

RegimeReport regime_report(const ModelSpec& model, const SpectralOptions& opts = {});

}  // namespace bmap
