#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "bmap/model.hpp"

namespace bmap {

// Model file schema (see docs/model-format.md):
//   {d, types:[{sigma2, drift, jump_rate, jump_atoms:[[x,p],...], branch_rate,
//    offspring:[[k,p],...]}], q:[[...]], u_laws:[[ [[y,p],...], ... ]]}
// jump_rate/jump_atoms and u_laws are optional; unknown keys are rejected.
// Parsing checks structure only; call validate() for the model invariants.
ModelSpec model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const ModelSpec& model);

ModelSpec load_model(const std::filesystem::path& path);
void save_model(const ModelSpec& model, const std::filesystem::path& path);

}  // namespace bmap
