#pragma once

// JSON forms of the configuration structs. Missing fields keep their
// defaults; unknown fields are rejected so typos surface early.

#include <json.hpp>

#include "vmer/noise.hpp"
#include "vmer/postprocess.hpp"
#include "vmer/synthgen.hpp"

namespace vmer {

nlohmann::ordered_json to_json(const ExpressionConfig& c);
nlohmann::ordered_json to_json(const LayoutConfig& c);
nlohmann::ordered_json to_json(const SynthConfig& c);
nlohmann::ordered_json to_json(const NoiseProfile& p);
nlohmann::ordered_json to_json(const PostprocessParams& p);

/// Throw SchemaError on wrong types, unknown keys or invalid values.
ExpressionConfig expression_config_from_json(const nlohmann::json& j, ExpressionConfig base = {});
LayoutConfig layout_config_from_json(const nlohmann::json& j, LayoutConfig base = {});
SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig base = {});
NoiseProfile noise_profile_from_json(const nlohmann::json& j, NoiseProfile base = {});

}  // namespace vmer
