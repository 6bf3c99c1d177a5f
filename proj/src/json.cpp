#include "semg/json.hpp"

namespace semg {

using nlohmann::json;

void to_json(json& j, const ModelConfig& c) {
  j = json{{"expansion", to_string(c.expansion)},
           {"attention", to_string(c.attention)},
           {"classifier", to_string(c.classifier)},
           {"layernorm", c.layernorm},
           {"activation", to_string(c.activation)},
           {"expanded_channels", c.expanded_channels},
           {"num_classes", c.num_classes},
           {"timesteps", c.timesteps},
           {"channels", c.channels},
           {"dropout", c.dropout},
           {"attention_layout", to_string(c.attention_layout)},
           {"per_timestep_bias", c.per_timestep_bias},
           {"conv_kernel", c.conv_kernel}};
}

void from_json(const json& j, ModelConfig& c) {
  try {
    ModelConfig d;
    d.expansion = parse_expansion(j.at("expansion").get<std::string>());
    d.attention = parse_attention(j.at("attention").get<std::string>());
    d.classifier = parse_classifier(j.at("classifier").get<std::string>());
    d.layernorm = j.at("layernorm").get<bool>();
    d.activation = parse_activation(j.at("activation").get<std::string>());
    d.expanded_channels = j.at("expanded_channels").get<int>();
    d.num_classes = j.at("num_classes").get<int>();
    d.timesteps = j.at("timesteps").get<int>();
    d.channels = j.at("channels").get<int>();
    d.dropout = j.at("dropout").get<double>();
    d.attention_layout = parse_attention_layout(j.at("attention_layout").get<std::string>());
    d.per_timestep_bias = j.at("per_timestep_bias").get<bool>();
    d.conv_kernel = j.at("conv_kernel").get<int>();
    d.validate();
    c = d;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"lr_start", c.lr_start},
           {"lr_end", c.lr_end},
           {"warm_epochs", c.warm_epochs},
           {"focal_gamma", c.focal_gamma},
           {"radam", {{"beta1", c.radam.beta1}, {"beta2", c.radam.beta2}, {"eps", c.radam.eps}}},
           {"lookahead", {{"k", c.lookahead.k}, {"alpha", c.lookahead.alpha}}},
           {"seed", c.seed},
           {"augment", c.augment}};
}

void to_json(json& j, const AugmentConfig& c) {
  j = json{{"snr_min_db", c.snr_min_db},
           {"snr_max_db", c.snr_max_db},
           {"rest_label", c.rest_label},
           {"mode", c.mode == SnrMode::Verbatim ? "verbatim" : "corrected"},
           {"imu_channels", c.imu_channels},
           {"augment_imu", c.augment_imu}};
}

void to_json(json& j, const EvalReport& r) {
  std::vector<std::vector<std::int64_t>> rows;
  for (Index i = 0; i < r.confusion.counts.rows(); ++i) {
    auto& row = rows.emplace_back();
    for (Index k = 0; k < r.confusion.counts.cols(); ++k) row.push_back(r.confusion.counts(i, k));
  }
  j = json{{"accuracy", r.accuracy},
           {"balanced_accuracy", r.balanced_accuracy},
           {"mcc", r.mcc},
           {"num_classes", r.confusion.num_classes()},
           {"total", r.confusion.total()},
           {"confusion", rows}};
}

}  // namespace semg
