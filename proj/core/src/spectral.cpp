#include "bmap/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bmap/errors.hpp"

namespace bmap {
namespace {

void check_pf_input(const Matrix& m) {
  if (!m.square() || m.rows() == 0) throw DomainError("pf_eigenpair: matrix must be square and non-empty");
  for (double x : m.data())
    if (!std::isfinite(x)) throw DomainError("pf_eigenpair: non-finite entry");
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) < 0.0) throw DomainError("pf_eigenpair: negative off-diagonal entry");
  if (!is_irreducible(m)) throw DomainError("pf_eigenpair: reducible matrix");
}

void normalize_max(Matrix& p) {
  const double s = p.max_abs();
  if (s > 0.0) p *= 1.0 / s;
}

void normalize_l1(Vector& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  for (double& x : v) x /= s;
}

// Dominant eigenvector of a primitive non-negative matrix b. Repeated
// squaring gets b^(2^k) close to rank one fast; plain power steps then drive
// the residual below the tolerance.
Vector dominant_vector(const Matrix& b, double tol, std::size_t max_iter, std::size_t& iterations) {
  const std::size_t n = b.rows();
  Matrix p = b;
  normalize_max(p);
  Vector v(n, 1.0);
  for (int k = 0; k < 64; ++k) {
    Matrix next = p * p;
    normalize_max(next);
    Vector w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) w[i] += next(i, j);
    normalize_l1(w);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(w[i] - v[i]));
    p = std::move(next);
    v = std::move(w);
    if (change <= 1e-15) break;
  }

  const double scale = b.norm_inf();
  for (std::size_t it = 0; it < max_iter; ++it) {
    Vector w = b * v;
    double mu = 0.0;
    for (double x : w) mu += x;  // ||v||_1 = 1 and v > 0
    double resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) resid = std::max(resid, std::abs(w[i] - mu * v[i]));
    iterations = it + 1;
    if (resid <= tol * scale * norm_inf(v)) return v;
    normalize_l1(w);
    v = std::move(w);
  }
  throw ConvergenceError("pf_eigenpair: power iteration did not converge");
}

EigenPair pf_core(const Matrix& m, const SpectralOptions& opts) {
  check_pf_input(m);
  const std::size_t n = m.rows();
  EigenPair out;
  if (n == 1) {
    out.lambda = m(0, 0);
    out.v_right = {1.0};
    out.y_left = {1.0};
    return out;
  }
  double c = 0.0;
  for (std::size_t i = 0; i < n; ++i) c = std::max(c, std::abs(m(i, i)));
  c += 1.0;
  Matrix b = m;
  for (std::size_t i = 0; i < n; ++i) b(i, i) += c;

  std::size_t it_r = 0, it_l = 0;
  out.v_right = dominant_vector(b, opts.eig_tol, opts.eig_max_iter, it_r);
  out.y_left = dominant_vector(b.transpose(), opts.eig_tol, opts.eig_max_iter, it_l);
  out.iterations = std::max(it_r, it_l);
  const Vector mv = m * out.v_right;
  out.lambda = dot(out.y_left, mv) / dot(out.y_left, out.v_right);
  return out;
}

void normalize_pair(EigenPair& e, std::span<const double> weights) {
  const double s = dot(weights, e.v_right);
  for (double& x : e.v_right) x /= s;
  const double yv = dot(e.y_left, e.v_right);
  for (double& x : e.y_left) x /= yv;
}

EigenPair model_pair(const ModelSpec& model, double theta, std::span<const double> pi,
                     const SpectralOptions& opts) {
  EigenPair e = pf_core(matrix_exponent(model, theta), opts);
  normalize_pair(e, pi);
  return e;
}

double lambda_prime_unchecked(const ModelSpec& model, double theta, const Vector& pi,
                              const SpectralOptions& opts) {
  const EigenPair e = model_pair(model, theta, pi, opts);
  const Matrix dm = matrix_exponent_derivative(model, theta);
  return dot(e.y_left, dm * e.v_right);
}

}  // namespace

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::supercritical: return "supercritical";
    case Regime::critical: return "critical";
    case Regime::subcritical: return "subcritical";
  }
  return "unknown";
}

Regime RegimeReport::regime_of(double theta) const {
  if (std::abs(theta - theta_star) <= critical_rel_tol * theta_star) return Regime::critical;
  return theta < theta_star ? Regime::supercritical : Regime::subcritical;
}

Matrix matrix_exponent(const ModelSpec& model, double theta) {
  if (!std::isfinite(theta)) throw DomainError("matrix_exponent: theta must be finite");
  Matrix m = hadamard(model.q, switch_transform(model, theta));
  for (std::size_t i = 0; i < model.d; ++i) {
    const auto& t = model.types[i];
    m(i, i) += laplace_exponent(t.motion, theta) +
               t.branch_rate * (offspring_mean(t.offspring) - 1.0);
  }
  return m;
}

Matrix matrix_exponent_derivative(const ModelSpec& model, double theta) {
  Matrix dm = hadamard(model.q, switch_transform_derivative(model, theta));
  for (std::size_t i = 0; i < model.d; ++i)
    dm(i, i) += laplace_exponent_derivative(model.types[i].motion, theta);
  return dm;
}

EigenPair pf_eigenpair(const Matrix& m, const SpectralOptions& opts) {
  EigenPair e = pf_core(m, opts);
  const Vector ones(m.rows(), 1.0);
  normalize_pair(e, ones);
  return e;
}

EigenPair pf_eigenpair(const Matrix& m, std::span<const double> pi, const SpectralOptions& opts) {
  if (pi.size() != m.rows()) throw DomainError("pf_eigenpair: pi has the wrong dimension");
  EigenPair e = pf_core(m, opts);
  normalize_pair(e, pi);
  return e;
}

Vector stationary_distribution(const Matrix& q) {
  const std::size_t n = q.rows();
  if (!q.square() || n == 0) throw DomainError("stationary_distribution: q must be square");
  if (n == 1) return {1.0};
  if (!is_irreducible(q)) throw DomainError("stationary_distribution: reducible q");
  // Rows of a are the columns of q (pi^T q = 0), last one replaced by sum pi = 1.
  Matrix a = q.transpose();
  Vector b(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) a(n - 1, j) = 1.0;
  b[n - 1] = 1.0;
  Vector pi = solve_linear(std::move(a), std::move(b));
  for (double x : pi)
    if (!(x > 0.0)) throw ConvergenceError("stationary_distribution: non-positive entry");
  return pi;
}

SpectralReport spectral_report(const ModelSpec& model, double theta, const SpectralOptions& opts) {
  require_valid(model);
  if (!std::isfinite(theta)) throw DomainError("spectral_report: theta must be finite");
  SpectralReport r;
  r.theta = theta;
  r.pi = stationary_distribution(model.q);
  r.m_matrix = matrix_exponent(model, theta);
  EigenPair e = pf_core(r.m_matrix, opts);
  normalize_pair(e, r.pi);
  r.lambda = e.lambda;
  r.v_right = std::move(e.v_right);
  r.y_left = std::move(e.y_left);
  if (theta > 0.0) {
    r.lambda_prime = dot(r.y_left, matrix_exponent_derivative(model, theta) * r.v_right);
  } else {
    const double h = opts.lambda_prime_zero_step;
    const double up = pf_core(matrix_exponent(model, theta + h), opts).lambda;
    r.lambda_prime = (up - r.lambda) / h;
  }
  return r;
}

double pf_eigenvalue(const ModelSpec& model, double theta, const SpectralOptions& opts) {
  return pf_core(matrix_exponent(model, theta), opts).lambda;
}

double lambda_prime(const ModelSpec& model, double theta, const SpectralOptions& opts) {
  if (!(theta > 0.0)) throw DomainError("lambda_prime: theta must be positive");
  require_valid(model);
  return lambda_prime_unchecked(model, theta, stationary_distribution(model.q), opts);
}

Vector v_prime(const ModelSpec& model, double theta, const SpectralOptions& opts) {
  require_valid(model);
  const Vector pi = stationary_distribution(model.q);
  const double h = opts.v_prime_rel_step * std::max(1.0, std::abs(theta));
  const Vector up = model_pair(model, theta + h, pi, opts).v_right;
  const Vector down = model_pair(model, theta - h, pi, opts).v_right;
  Vector out(model.d);
  for (std::size_t i = 0; i < model.d; ++i) out[i] = (up[i] - down[i]) / (2.0 * h);
  return out;
}

double theta_star(const ModelSpec& model, const SpectralOptions& opts) {
  require_valid(model);
  const Vector pi = stationary_distribution(model.q);
  const double lambda0 = pf_eigenvalue(model, 0.0, opts);
  if (!(lambda0 > 0.0))
    throw AssumptionError("A1 fails: lambda(0) = " + std::to_string(lambda0) + " <= 0");

  struct Eval {
    double h, lambda, lambda_prime;
  };
  auto eval = [&](double theta) {
    const EigenPair e = model_pair(model, theta, pi, opts);
    const double lp = dot(e.y_left, matrix_exponent_derivative(model, theta) * e.v_right);
    return Eval{theta * lp - e.lambda, e.lambda, lp};
  };

  double lo = 0.0, hi = 0.0;
  bool found = false;
  for (int k = 0; k <= 40; ++k) {
    const double theta = std::ldexp(1e-3, k);
    if (eval(theta).h > 0.0) {
      hi = theta;
      lo = k == 0 ? 0.0 : std::ldexp(1e-3, k - 1);
      found = true;
      break;
    }
  }
  if (!found)
    throw AssumptionError("minimum at boundary, A2 fails: theta*lambda'(theta) - lambda(theta) "
                          "has no sign change on the bracketing grid");

  double theta = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const Eval e = eval(theta);
    if (std::abs(e.h) <= opts.theta_star_tol * std::max(1.0, std::abs(e.lambda))) return theta;
    (e.h > 0.0 ? hi : lo) = theta;
    // h'(theta) = theta lambda''(theta); lambda'' by central difference of lambda'.
    const double step = 1e-5 * std::max(theta, 1e-3);
    const double lpp = (eval(theta + step).lambda_prime - eval(theta - step).lambda_prime) / (2 * step);
    double next = theta - e.h / (theta * lpp);
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * hi) return theta;
    theta = next;
  }
  throw ConvergenceError("theta_star: root refinement did not converge");
}

ExtinctionResult extinction_vector(const ModelSpec& model, const SpectralOptions& opts) {
  require_valid(model);
  const std::size_t d = model.d;
  ExtinctionResult out;
  if (!(pf_eigenvalue(model, 0.0, opts) > 0.0)) {
    out.q.assign(d, 1.0);
    out.degenerate = true;
    return out;
  }
  std::vector<std::vector<double>> coeffs;
  Vector denom(d);
  for (std::size_t i = 0; i < d; ++i) {
    coeffs.push_back(offspring_coefficients(model.types[i].offspring));
    denom[i] = model.types[i].branch_rate + model.switch_rate(i);
  }
  // s_i <- (beta_i g_i(s_i) + sum_{j != i} q_ij s_j) / (beta_i + q_i), increasing
  // from 0 to the minimal root.
  Vector s(d, 0.0);
  double prev_diff = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < opts.extinction_max_iter; ++it) {
    Vector next(d);
    for (std::size_t i = 0; i < d; ++i) {
      if (denom[i] == 0.0) {
        next[i] = s[i];
        continue;
      }
      double acc = model.types[i].branch_rate * offspring_pgf(coeffs[i], s[i]);
      for (std::size_t j = 0; j < d; ++j)
        if (j != i) acc += model.q(i, j) * s[j];
      next[i] = std::min(1.0, acc / denom[i]);
    }
    double diff = 0.0;
    for (std::size_t i = 0; i < d; ++i) diff = std::max(diff, std::abs(next[i] - s[i]));
    s = std::move(next);
    out.iterations = it + 1;
    const double rate = std::isfinite(prev_diff) && prev_diff > 0.0
                            ? std::clamp(diff / prev_diff, 0.0, 0.999)
                            : 0.0;
    if (diff <= opts.extinction_tol * (1.0 - rate)) {
      out.q = std::move(s);
      return out;
    }
    prev_diff = diff;
  }
  throw ConvergenceError("extinction_vector: fixed-point iteration did not converge");
}

Matrix matrix_exp(const Matrix& m, double t, const SpectralOptions& opts) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("matrix_exp: t must be finite and >= 0");
  if (!m.square()) throw DomainError("matrix_exp: matrix must be square");
  for (double x : m.data())
    if (!std::isfinite(x)) throw DomainError("matrix_exp: non-finite entry");
  const std::size_t n = m.rows();
  Matrix a = m * t;
  const double norm = a.norm_inf();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  a *= std::ldexp(1.0, -squarings);

  Matrix result = Matrix::identity(n);
  Matrix term = Matrix::identity(n);
  const double eps = std::min(opts.expm_tol, 1e-12) * 1e-5;
  for (int k = 1; k <= 60; ++k) {
    term = term * a;
    term *= 1.0 / k;
    result += term;
    if (term.norm_inf() <= eps * result.norm_inf()) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

Regime regime_of(const ModelSpec& model, double theta, const SpectralOptions& opts) {
  RegimeReport r;
  r.theta_star = theta_star(model, opts);
  r.critical_rel_tol = opts.critical_rel_tol;
  return r.regime_of(theta);
}

RegimeReport regime_report(const ModelSpec& model, const SpectralOptions& opts) {
  RegimeReport r;
  r.critical_rel_tol = opts.critical_rel_tol;
  r.lambda0 = pf_eigenvalue(model, 0.0, opts);
  r.theta_star = theta_star(model, opts);
  r.critical_speed = pf_eigenvalue(model, r.theta_star, opts) / r.theta_star;
  r.extinction = extinction_vector(model, opts).q;
  return r;
}

}  // namespace bmap
