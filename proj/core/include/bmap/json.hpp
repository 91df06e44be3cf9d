#pragma once

#include <nlohmann/json.hpp>

#include "bmap/fkpp.hpp"
#include "bmap/matrix.hpp"
#include "bmap/spectral.hpp"
#include "bmap/spine.hpp"

namespace bmap {

// Matrices serialize as arrays of rows.
void to_json(nlohmann::json& j, const Matrix& m);
void to_json(nlohmann::json& j, const SpectralReport& r);
void to_json(nlohmann::json& j, const RegimeReport& r);
void to_json(nlohmann::json& j, const ManyToOneResult& r);
void to_json(nlohmann::json& j, const MartingaleCheckRow& r);
void to_json(nlohmann::json& j, const RepresentationRow& r);
void to_json(nlohmann::json& j, const Grid1D& g);

}  // namespace bmap
