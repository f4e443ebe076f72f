#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "sje/encoders.hpp"
#include "sje/optim.hpp"
#include "sje/synthetic.hpp"
#include "sje/train.hpp"

namespace sje {

// Throws std::invalid_argument naming the first key outside `allowed`, so
// config typos fail loudly instead of silently falling back to defaults.
void reject_unknown_keys(const nlohmann::json& j, const char* context,
                         const std::vector<std::string>& allowed);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

nlohmann::json encoder_spec_to_json(const EncoderSpec& spec);
EncoderSpec encoder_spec_from_json(const nlohmann::json& j);

nlohmann::json rmsprop_config_to_json(const RmsPropConfig& config);
RmsPropConfig rmsprop_config_from_json(const nlohmann::json& j);

nlohmann::json synthetic_config_to_json(const SyntheticConfig& config);
SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);

nlohmann::json training_config_to_json(const TrainingConfig& config);
TrainingConfig training_config_from_json(const nlohmann::json& j);

// Caption counts appear as a positive integer or the string "all" (stored
// as 0) in configs, reports and sweep tables.
nlohmann::json caption_count_to_json(int count);
int caption_count_from_json(const nlohmann::json& j);

}  // namespace sje
