#pragma once

#include <json.hpp>

#include "gridbench/armax.hpp"
#include "gridbench/boosted_trees.hpp"
#include "gridbench/detrend.hpp"
#include "gridbench/holt_winters.hpp"
#include "gridbench/knn.hpp"

// JSON schema of fitted models. Every document carries "kind" and
// "schema_version"; matrices are stored as {"rows", "cols", "data"} with
// row-major data. Loading a document of another kind throws DataError.
namespace gridbench {

inline constexpr int kModelSchemaVersion = 1;

nlohmann::json to_json(const DetrendModel& m);
nlohmann::json to_json(const HwParams& m);
nlohmann::json to_json(const ArmaxEnsemble& m);
nlohmann::json to_json(const KnnModel& m);
nlohmann::json to_json(const BoostedTreesModel& m);
nlohmann::json to_json(const FeatureBinner& m);

DetrendModel detrend_from_json(const nlohmann::json& j);
HwParams hw_params_from_json(const nlohmann::json& j);
ArmaxEnsemble armax_from_json(const nlohmann::json& j);
KnnModel knn_from_json(const nlohmann::json& j);
BoostedTreesModel boosted_trees_from_json(const nlohmann::json& j);
FeatureBinner binner_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace gridbench
