#pragma once

// JSON mappings for configuration types (checkpoints, manifests, reports).

#include "semg/augment.hpp"
#include "semg/metrics.hpp"
#include "semg/model.hpp"
#include "semg/train.hpp"

#include <json.hpp>

namespace semg {

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void to_json(nlohmann::json& j, const AugmentConfig& c);
void to_json(nlohmann::json& j, const EvalReport& r);

}  // namespace semg
