#pragma once

#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

#include "gazekit/core.hpp"
#include "gazekit/prompt_codec.hpp"
#include "json.hpp"

namespace gazekit {

struct DatasetManifest;

enum class PredictorKind { Random, Center, FixedBias, Oracle };

std::string_view predictor_name(PredictorKind kind);
PredictorKind parse_predictor(std::string_view name);

struct PredictorSpec {
    PredictorKind kind = PredictorKind::Center;
    std::uint64_t seed = 0;
    double oracle_noise_sigma = 0.0;  // normalized units
    int bias_grid = 8;
    // Task the oracle answers; the baselines always answer GazeTarget.
    Task oracle_task = Task::GazeObject;
    PromptConfig prompt;
};

void validate(const PredictorSpec& spec);

/// Stable per-sample seed: independent of generation order.
std::uint64_t sample_seed(std::uint64_t seed, std::string_view sample_id);

/// Mean gaze point per quantized head-center cell.
struct BiasTable {
    struct Cell {
        double sum_x = 0, sum_y = 0;
        std::size_t count = 0;
        GazePoint mean() const { return {sum_x / count, sum_y / count}; }
    };
    int grid = 8;
    std::map<std::pair<int, int>, Cell> cells;  // (column, row)
    GazePoint global;

    bool operator==(const BiasTable& o) const;
};

std::pair<int, int> head_cell(const AnnotatedSample& sample, int grid);

BiasTable fit_fixed_bias(const DatasetManifest& train, const PredictorSpec& spec);
nlohmann::json bias_table_to_json(const BiasTable& table);
BiasTable bias_table_from_json(const nlohmann::json& j);

/// Truncated normal around the image center (mean 0.5, sd 0.25, cut to [0,1]).
Prediction predict_random(const AnnotatedSample& sample, const PredictorSpec& spec);
Prediction predict_center(const AnnotatedSample& sample, const PredictorSpec& spec = {});
Prediction predict_fixed_bias(const AnnotatedSample& sample, const BiasTable& table,
                              const PredictorSpec& spec = {});
/// Ground truth with Gaussian noise on the gaze point (and the object box
/// shifted by the same offset), round-tripped through the text grammar.
Prediction predict_oracle(const AnnotatedSample& sample, const PredictorSpec& spec);

/// Runs the configured predictor over every sample in order. FixedBias
/// needs a fitted table.
std::vector<Prediction> run_predictor(const DatasetManifest& manifest, const PredictorSpec& spec,
                                      const BiasTable* table = nullptr);

}  // namespace gazekit
