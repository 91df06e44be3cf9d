#include "bmap/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "bmap/errors.hpp"

namespace bmap {
namespace {

void require_finite(double theta, const char* where) {
  if (!std::isfinite(theta)) throw DomainError(std::string(where) + ": theta must be finite");
}

bool is_nonneg_integer(double v) { return v >= 0.0 && std::floor(v) == v && v < 1e9; }

std::string type_label(std::size_t i) { return "type " + std::to_string(i); }

}  // namespace

bool DiscreteLaw::is_point_mass_at_zero() const {
  return atoms.size() == 1 && atoms[0].value == 0.0 && atoms[0].prob == 1.0;
}

double DiscreteLaw::mean() const {
  double m = 0.0;
  for (const auto& a : atoms) m += a.prob * a.value;
  return m;
}

double DiscreteLaw::laplace(double theta) const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.prob * std::exp(-theta * a.value);
  return s;
}

double DiscreteLaw::laplace_derivative(double theta) const {
  double s = 0.0;
  for (const auto& a : atoms) s -= a.prob * a.value * std::exp(-theta * a.value);
  return s;
}

double DiscreteLaw::max_abs_value() const {
  double m = 0.0;
  for (const auto& a : atoms) m = std::max(m, std::abs(a.value));
  return m;
}

ModelSpec ModelSpec::single_type(TypeSpec type) {
  ModelSpec m;
  m.d = 1;
  m.types = {std::move(type)};
  m.q = Matrix(1, 1, 0.0);
  m.u_laws = {{DiscreteLaw::point_mass(0.0)}};
  return m;
}

std::vector<std::string> validate_law(const DiscreteLaw& law, const std::string& what) {
  std::vector<std::string> out;
  if (law.atoms.empty()) {
    out.push_back(what + ": DiscreteLaw has no atoms");
    return out;
  }
  double total = 0.0;
  std::set<double> seen;
  for (const auto& a : law.atoms) {
    if (!std::isfinite(a.value)) out.push_back(what + ": DiscreteLaw atom value is not finite");
    if (!(a.prob > 0.0 && a.prob <= 1.0))
      out.push_back(what + ": DiscreteLaw atom probability outside (0,1]");
    if (!seen.insert(a.value).second) out.push_back(what + ": DiscreteLaw atoms are not distinct");
    total += a.prob;
  }
  if (std::abs(total - 1.0) > kNormalizationTol) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": DiscreteLaw not normalized (sum " << total << ")";
    out.push_back(os.str());
  }
  return out;
}

bool is_irreducible(const Matrix& q) {
  const std::size_t n = q.rows();
  if (n <= 1) return true;
  // Strong connectivity: every node reachable from 0 along edges and along
  // reversed edges.
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || seen[j]) continue;
        const double w = pass == 0 ? q(i, j) : q(j, i);
        if (w > 0.0) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    if (std::count(seen.begin(), seen.end(), 1) != static_cast<std::ptrdiff_t>(n)) return false;
  }
  return true;
}

std::vector<std::string> validate(const ModelSpec& model) {
  std::vector<std::string> out;
  const std::size_t d = model.d;
  if (d == 0) {
    out.push_back("d must be a positive integer");
    return out;
  }
  if (d > kMaxTypes) out.push_back("d exceeds the supported maximum of 64 types");
  if (model.types.size() != d) {
    out.push_back("types has " + std::to_string(model.types.size()) + " entries, expected d=" +
                  std::to_string(d));
    return out;
  }
  if (model.q.rows() != d || model.q.cols() != d) {
    out.push_back("q must be a d x d matrix");
    return out;
  }
  if (model.u_laws.size() != d ||
      std::any_of(model.u_laws.begin(), model.u_laws.end(),
                  [d](const auto& row) { return row.size() != d; })) {
    out.push_back("u_laws must be a d x d array of laws");
    return out;
  }

  bool any_motion = false;
  for (std::size_t i = 0; i < d; ++i) {
    const auto& t = model.types[i];
    const auto label = type_label(i);
    const auto& mo = t.motion;
    if (!std::isfinite(mo.sigma2) || mo.sigma2 < 0.0) out.push_back(label + ": sigma2 must be >= 0");
    if (!std::isfinite(mo.drift)) out.push_back(label + ": drift must be finite");
    if (!std::isfinite(mo.jump_rate) || mo.jump_rate < 0.0)
      out.push_back(label + ": jump_rate must be >= 0");
    if (mo.jump_rate > 0.0) {
      auto v = validate_law(mo.jump_law, label + " jump law");
      out.insert(out.end(), v.begin(), v.end());
    }
    if (!mo.trivial()) any_motion = true;
    if (!std::isfinite(t.branch_rate) || t.branch_rate < 0.0)
      out.push_back(label + ": branch_rate must be >= 0");
    auto v = validate_law(t.offspring, label + " offspring");
    out.insert(out.end(), v.begin(), v.end());
    for (const auto& a : t.offspring.atoms)
      if (!is_nonneg_integer(a.value)) {
        out.push_back(label + ": offspring atoms must be non-negative integers");
        break;
      }
  }
  if (!any_motion) out.push_back("every motion is trivial; at least one type must move");

  bool rows_ok = true;
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = model.q(i, j);
      if (!std::isfinite(v)) rows_ok = false;
      if (i != j && v < 0.0) out.push_back("q off-diagonal entry (" + std::to_string(i) + "," +
                                           std::to_string(j) + ") is negative");
      row += v;
    }
    if (std::abs(row) > kNormalizationTol) {
      out.push_back("q row " + std::to_string(i) + " does not sum to 0");
      rows_ok = false;
    }
  }
  if (d >= 2 && rows_ok && !is_irreducible(model.q)) out.push_back("q not irreducible");

  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const auto& law = model.u_laws[i][j];
      const std::string label = "u_laws[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      auto v = validate_law(law, label);
      out.insert(out.end(), v.begin(), v.end());
      if ((i == j || model.q(i, j) == 0.0) && !law.is_point_mass_at_zero())
        out.push_back(label + " must be the point mass at 0 when q_ij = 0 or i = j");
    }
  return out;
}

void require_valid(const ModelSpec& model) {
  const auto v = validate(model);
  if (v.empty()) return;
  std::string msg = "invalid model:";
  for (const auto& s : v) msg += "\n  - " + s;
  throw ValidationError(msg);
}

double laplace_exponent(const MotionSpec& motion, double theta) {
  require_finite(theta, "laplace_exponent");
  double value = 0.5 * motion.sigma2 * theta * theta - motion.drift * theta;
  if (motion.jump_rate > 0.0) {
    double s = 0.0;
    for (const auto& a : motion.jump_law.atoms) s += a.prob * std::expm1(-theta * a.value);
    value += motion.jump_rate * s;
  }
  return value;
}

double laplace_exponent_derivative(const MotionSpec& motion, double theta) {
  require_finite(theta, "laplace_exponent_derivative");
  double value = motion.sigma2 * theta - motion.drift;
  if (motion.jump_rate > 0.0) value += motion.jump_rate * motion.jump_law.laplace_derivative(theta);
  return value;
}

Matrix switch_transform(const ModelSpec& model, double theta) {
  require_finite(theta, "switch_transform");
  Matrix g(model.d, model.d, 1.0);
  for (std::size_t i = 0; i < model.d; ++i)
    for (std::size_t j = 0; j < model.d; ++j)
      if (i != j) g(i, j) = model.u_laws[i][j].laplace(theta);
  return g;
}

Matrix switch_transform_derivative(const ModelSpec& model, double theta) {
  require_finite(theta, "switch_transform_derivative");
  Matrix g(model.d, model.d, 0.0);
  for (std::size_t i = 0; i < model.d; ++i)
    for (std::size_t j = 0; j < model.d; ++j)
      if (i != j) g(i, j) = model.u_laws[i][j].laplace_derivative(theta);
  return g;
}

double offspring_mean(const DiscreteLaw& law) {
  double m = 0.0;
  for (const auto& a : law.atoms) {
    if (!is_nonneg_integer(a.value))
      throw DomainError("offspring_mean: atom " + std::to_string(a.value) +
                        " is not a non-negative integer");
    m += a.value * a.prob;
  }
  return m;
}

std::vector<double> offspring_coefficients(const DiscreteLaw& law) {
  std::size_t top = 0;
  for (const auto& a : law.atoms) {
    if (!is_nonneg_integer(a.value))
      throw DomainError("offspring law atom " + std::to_string(a.value) +
                        " is not a non-negative integer");
    top = std::max(top, static_cast<std::size_t>(a.value));
  }
  std::vector<double> c(top + 1, 0.0);
  for (const auto& a : law.atoms) c[static_cast<std::size_t>(a.value)] += a.prob;
  return c;
}

double offspring_pgf(std::span<const double> coefficients, double s) {
  double acc = 0.0;
  for (std::size_t k = coefficients.size(); k-- > 0;) acc = acc * s + coefficients[k];
  return acc;
}

double offspring_pgf(const DiscreteLaw& law, double s) {
  const auto c = offspring_coefficients(law);
  return offspring_pgf(c, s);
}

DiscreteLaw size_biased(const DiscreteLaw& offspring) {
  const double m = offspring_mean(offspring);
  if (!(m > 0.0)) throw DomainError("size_biased: offspring mean must be positive");
  DiscreteLaw out;
  for (const auto& a : offspring.atoms)
    if (a.value >= 1.0) out.atoms.push_back({a.value, a.value * a.prob / m});
  return out;
}

}  // namespace bmap
