#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "gazekit/gaze_object_assign.hpp"
#include "gazekit/hha.hpp"
#include "gazekit/metrics.hpp"
#include "gazekit/predictors.hpp"
#include "gazekit/prompt_codec.hpp"
#include "json.hpp"

namespace gazekit::cli {

struct CliConfig {
    HhaConfig hha;
    double depth_scale = 1.0;
    PromptConfig prompt;
    AssignConfig assign;
    MetricConfig metrics;
    PredictorSpec predictor;
};

/// Reads a YAML document with optional sections hha, prompt, assign,
/// metrics and predictor. Unknown keys are rejected.
CliConfig load_config(const std::filesystem::path& path);
CliConfig parse_config(const std::string& yaml_text);

/// Cross-section consistency and per-section validation.
void finalize(CliConfig& cfg);

nlohmann::json config_to_json(const CliConfig& cfg);

}  // namespace gazekit::cli
