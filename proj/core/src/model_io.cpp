#include "bmap/model_io.hpp"

#include <fstream>
#include <initializer_list>
#include <string_view>

#include "bmap/errors.hpp"

namespace bmap {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError(where + ": unknown field '" + key + "'");
  }
}

double number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError(where + ": missing field '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

DiscreteLaw law_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw ValidationError(where + ": expected an array of [value, prob] pairs");
  DiscreteLaw law;
  for (const auto& pair : arr) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
      throw ValidationError(where + ": each atom must be a [value, prob] pair of numbers");
    law.atoms.push_back({pair[0].get<double>(), pair[1].get<double>()});
  }
  return law;
}

json law_to_json(const DiscreteLaw& law) {
  json arr = json::array();
  for (const auto& a : law.atoms) arr.push_back({a.value, a.prob});
  return arr;
}

}  // namespace

ModelSpec model_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("model: top level must be an object");
  reject_unknown(doc, {"d", "types", "q", "u_laws"}, "model");

  if (!doc.contains("d") || !doc["d"].is_number_integer() || doc["d"].get<long long>() <= 0)
    throw ValidationError("model: 'd' must be a positive integer");
  ModelSpec m;
  m.d = doc["d"].get<std::size_t>();
  if (m.d > kMaxTypes) throw ValidationError("model: d exceeds the supported maximum of 64");

  if (!doc.contains("types") || !doc["types"].is_array() || doc["types"].size() != m.d)
    throw ValidationError("model: 'types' must be an array of d entries");
  for (std::size_t i = 0; i < m.d; ++i) {
    const auto& t = doc["types"][i];
    const std::string where = "types[" + std::to_string(i) + "]";
    if (!t.is_object()) throw ValidationError(where + ": must be an object");
    reject_unknown(t, {"sigma2", "drift", "jump_rate", "jump_atoms", "branch_rate", "offspring"},
                   where);
    TypeSpec ts;
    ts.motion.sigma2 = number(t, "sigma2", where);
    ts.motion.drift = number(t, "drift", where);
    ts.motion.jump_rate = t.contains("jump_rate") ? number(t, "jump_rate", where) : 0.0;
    if (t.contains("jump_atoms")) ts.motion.jump_law = law_from_json(t["jump_atoms"], where + ".jump_atoms");
    if (ts.motion.jump_rate > 0.0 && ts.motion.jump_law.atoms.empty())
      throw ValidationError(where + ": jump_rate > 0 requires jump_atoms");
    ts.branch_rate = number(t, "branch_rate", where);
    if (!t.contains("offspring")) throw ValidationError(where + ": missing field 'offspring'");
    ts.offspring = law_from_json(t["offspring"], where + ".offspring");
    m.types.push_back(std::move(ts));
  }

  if (!doc.contains("q") || !doc["q"].is_array() || doc["q"].size() != m.d)
    throw ValidationError("model: 'q' must be a d x d array");
  m.q = Matrix(m.d, m.d);
  for (std::size_t i = 0; i < m.d; ++i) {
    const auto& row = doc["q"][i];
    if (!row.is_array() || row.size() != m.d) throw ValidationError("model: 'q' must be a d x d array");
    for (std::size_t j = 0; j < m.d; ++j) {
      if (!row[j].is_number()) throw ValidationError("model: 'q' entries must be numbers");
      m.q(i, j) = row[j].get<double>();
    }
  }

  m.u_laws.assign(m.d, std::vector<DiscreteLaw>(m.d, DiscreteLaw::point_mass(0.0)));
  if (doc.contains("u_laws")) {
    const auto& u = doc["u_laws"];
    if (!u.is_array() || u.size() != m.d)
      throw ValidationError("model: 'u_laws' must be a d x d array of laws");
    for (std::size_t i = 0; i < m.d; ++i) {
      if (!u[i].is_array() || u[i].size() != m.d)
        throw ValidationError("model: 'u_laws' must be a d x d array of laws");
      for (std::size_t j = 0; j < m.d; ++j)
        m.u_laws[i][j] = law_from_json(u[i][j], "u_laws[" + std::to_string(i) + "][" +
                                                   std::to_string(j) + "]");
    }
  }
  return m;
}

json model_to_json(const ModelSpec& model) {
  json doc;
  doc["d"] = model.d;
  json types = json::array();
  for (const auto& t : model.types) {
    types.push_back({{"sigma2", t.motion.sigma2},
                     {"drift", t.motion.drift},
                     {"jump_rate", t.motion.jump_rate},
                     {"jump_atoms", law_to_json(t.motion.jump_law)},
                     {"branch_rate", t.branch_rate},
                     {"offspring", law_to_json(t.offspring)}});
  }
  doc["types"] = std::move(types);
  json q = json::array();
  for (std::size_t i = 0; i < model.q.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < model.q.cols(); ++j) row.push_back(model.q(i, j));
    q.push_back(std::move(row));
  }
  doc["q"] = std::move(q);
  json u = json::array();
  for (const auto& row : model.u_laws) {
    json r = json::array();
    for (const auto& law : row) r.push_back(law_to_json(law));
    u.push_back(std::move(r));
  }
  doc["u_laws"] = std::move(u);
  return doc;
}

ModelSpec load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ValidationError("model file " + path.string() + " is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

void save_model(const ModelSpec& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file " + path.string());
  out << model_to_json(model).dump(2) << '\n';
}

}  // namespace bmap
