#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "rainsim/scenario.hpp"

namespace rainsim {

// Builds a config from a JSON document. Every key is optional; absent keys
// keep their defaults, unknown keys are rejected. Speeds are in km/h and
// emission angles in degrees, converted to SI here. Throws ConfigError with
// the dotted path of the offending key. Does not run validate().
ScenarioConfig config_from_json(const nlohmann::json& doc);

// Full config in the same schema, every field spelled out.
nlohmann::json config_to_json(const ScenarioConfig& config);

// Applies "dotted.key=value" to a document before parsing. The value is read
// as JSON when it parses as JSON, otherwise as a string.
void apply_override(nlohmann::json& doc, std::string_view assignment);

// Reads a JSON document; IoError when unreadable, ConfigError when malformed.
nlohmann::json load_json_file(const std::filesystem::path& path);

}  // namespace rainsim
