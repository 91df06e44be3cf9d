#include "bmap/json.hpp"

#include <cmath>

namespace bmap {
namespace {

// JSON has no NaN or infinity; those become null.
nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void to_json(nlohmann::json& j, const Matrix& m) {
  j = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
    j.push_back(std::move(row));
  }
}

void to_json(nlohmann::json& j, const SpectralReport& r) {
  j = {{"theta", r.theta},   {"m_matrix", r.m_matrix},         {"lambda", r.lambda}, {"v_right", r.v_right},
       {"y_left", r.y_left}, {"lambda_prime", number(r.lambda_prime)}, {"pi", r.pi}};
}

void to_json(nlohmann::json& j, const RegimeReport& r) {
  j = {{"theta_star", r.theta_star},
       {"lambda0", r.lambda0},
       {"extinction", r.extinction},
       {"critical_speed", r.critical_speed},
       {"critical_rel_tol", r.critical_rel_tol}};
}

void to_json(nlohmann::json& j, const ManyToOneResult& r) {
  j = {{"function_id", r.function_id}, {"lhs", r.lhs}, {"lhs_se", r.lhs_se},
       {"rhs", r.rhs},                 {"rhs_se", r.rhs_se}, {"z_score", number(r.z_score)}};
}

void to_json(nlohmann::json& j, const MartingaleCheckRow& r) {
  j = {{"t", r.t},       {"x", r.start.x},          {"type", r.start.type}, {"mean", r.mean},
       {"se", r.se},     {"target", r.target},      {"target_se", r.target_se}, {"z", number(r.z)}};
}

void to_json(nlohmann::json& j, const RepresentationRow& r) {
  j = {{"x", r.probe.x}, {"type", r.probe.type}, {"mc", r.mc},     {"se", r.se},
       {"pde", r.pde},   {"gap", r.gap},         {"pass", r.pass}};
}

void to_json(nlohmann::json& j, const Grid1D& g) { j = {{"x_min", g.x_min}, {"x_max", g.x_max}, {"n", g.n}}; }

}  // namespace bmap
