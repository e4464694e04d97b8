#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "pwsc/models.hpp"

namespace pwsc {

// Reads a parameter file. The format follows the extension (.toml or .json);
// keys must match ModelParams field names, "kind" is a string and every other
// key a number. Unknown keys, missing "kind" or out-of-range values raise
// Error(ConfigError).
ModelParams load_params(const std::filesystem::path& file);

ModelParams parse_params_toml(std::string_view text);
ModelParams parse_params_json(std::string_view text);

// Bundled presets: "izhikevich", "adex", "quartic".
std::filesystem::path preset_path(std::string_view name);
ModelParams load_preset(std::string_view name);

std::string params_to_json(const ModelParams& p);

// Single-field override from text ("kind" or a numeric field); does not
// validate. Error(ConfigError) on unknown keys or unparsable values.
void set_param(ModelParams& p, std::string_view key, std::string_view value);

}  // namespace pwsc
