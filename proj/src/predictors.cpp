#include "gazekit/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gazekit/ingest.hpp"

namespace gazekit {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

Prediction from_text(const AnnotatedSample& sample, Task task, const std::string& text,
                     const PromptConfig& cfg) {
    return parse_response(text, cfg, sample.sample_id, task);
}

Prediction point_prediction(const AnnotatedSample& sample, const GazePoint& p,
                            const PromptConfig& cfg) {
    return from_text(sample, Task::GazeTarget, serialize_box(gaze_point_to_box(p, cfg), cfg), cfg);
}

GazePoint clip_unit(double x, double y) { return {std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0)}; }

}  // namespace

std::string_view predictor_name(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::Random: return "random";
        case PredictorKind::Center: return "center";
        case PredictorKind::FixedBias: return "fixed_bias";
        case PredictorKind::Oracle: return "oracle";
    }
    return "center";
}

PredictorKind parse_predictor(std::string_view name) {
    for (auto k : {PredictorKind::Random, PredictorKind::Center, PredictorKind::FixedBias,
                   PredictorKind::Oracle})
        if (predictor_name(k) == name) return k;
    throw InvalidInput("unknown predictor kind '" + std::string(name) + "'");
}

void validate(const PredictorSpec& spec) {
    if (!(spec.oracle_noise_sigma >= 0) || !std::isfinite(spec.oracle_noise_sigma))
        throw InvalidInput("oracle noise sigma must be finite and non-negative");
    if (spec.bias_grid < 1) throw InvalidInput("bias_grid must be positive");
    validate(spec.prompt);
}

std::uint64_t sample_seed(std::uint64_t seed, std::string_view sample_id) {
    return splitmix64(splitmix64(seed) ^ fnv1a(sample_id));
}

bool BiasTable::operator==(const BiasTable& o) const {
    if (grid != o.grid || !(global == o.global) || cells.size() != o.cells.size()) return false;
    for (const auto& [k, c] : cells) {
        auto it = o.cells.find(k);
        if (it == o.cells.end() || !(it->second.mean() == c.mean())) return false;
    }
    return true;
}

std::pair<int, int> head_cell(const AnnotatedSample& sample, int grid) {
    const GazePoint c = box_center_normalized(sample.head_box, sample.image_size);
    auto bin = [grid](double v) { return std::clamp(static_cast<int>(std::floor(v * grid)), 0, grid - 1); };
    return {bin(c.x), bin(c.y)};
}

BiasTable fit_fixed_bias(const DatasetManifest& train, const PredictorSpec& spec) {
    validate(spec);
    BiasTable table;
    table.grid = spec.bias_grid;
    BiasTable::Cell all;
    for (const auto& s : train.samples) {
        if (!s.in_frame || s.gaze_points.empty()) continue;
        const GazePoint g = centroid(s.gaze_points);
        auto& cell = table.cells[head_cell(s, table.grid)];
        for (auto* acc : {&cell, &all}) {
            acc->sum_x += g.x;
            acc->sum_y += g.y;
            ++acc->count;
        }
    }
    if (all.count == 0) throw InvalidInput("fixed-bias fit needs at least one in-frame training sample");
    table.global = all.mean();
    return table;
}

nlohmann::json bias_table_to_json(const BiasTable& table) {
    nlohmann::json cells = nlohmann::json::object();
    for (const auto& [key, cell] : table.cells) {
        const GazePoint m = cell.mean();
        cells[std::to_string(key.first) + "," + std::to_string(key.second)] = {m.x, m.y};
    }
    return {{"grid", table.grid}, {"cells", std::move(cells)}, {"global", {table.global.x, table.global.y}}};
}

BiasTable bias_table_from_json(const nlohmann::json& j) {
    BiasTable t;
    t.grid = j.at("grid").get<int>();
    if (t.grid < 1) throw FormatError("bias table grid must be positive");
    const auto& g = j.at("global");
    t.global = {g.at(0).get<double>(), g.at(1).get<double>()};
    for (const auto& [key, value] : j.at("cells").items()) {
        const auto comma = key.find(',');
        if (comma == std::string::npos) throw FormatError("bias cell key must be 'column,row'");
        const int cx = std::stoi(key.substr(0, comma)), cy = std::stoi(key.substr(comma + 1));
        t.cells[{cx, cy}] = {value.at(0).get<double>(), value.at(1).get<double>(), 1};
    }
    return t;
}

Prediction predict_random(const AnnotatedSample& sample, const PredictorSpec& spec) {
    std::mt19937_64 rng(sample_seed(spec.seed, sample.sample_id));
    std::normal_distribution<double> normal(0.5, 0.25);
    auto draw = [&] {
        for (;;) {
            const double v = normal(rng);
            if (v >= 0.0 && v <= 1.0) return v;
        }
    };
    const double x = draw();
    const double y = draw();
    return point_prediction(sample, {x, y}, spec.prompt);
}

Prediction predict_center(const AnnotatedSample& sample, const PredictorSpec& spec) {
    return point_prediction(sample, {0.5, 0.5}, spec.prompt);
}

Prediction predict_fixed_bias(const AnnotatedSample& sample, const BiasTable& table,
                              const PredictorSpec& spec) {
    auto it = table.cells.find(head_cell(sample, table.grid));
    const GazePoint p = it != table.cells.end() ? it->second.mean() : table.global;
    return point_prediction(sample, clip_unit(p.x, p.y), spec.prompt);
}

Prediction predict_oracle(const AnnotatedSample& sample, const PredictorSpec& spec) {
    const PromptConfig& cfg = spec.prompt;
    const Task task = spec.oracle_task;
    std::string text;
    if (task == Task::PersonDetection) {
        text = serialize_box(norm_box(sample.head_box, sample.image_size), cfg);
    } else if (!sample.in_frame || sample.gaze_points.empty()) {
        text = cfg.out_of_frame_phrase;
    } else if (task == Task::GazeInOut) {
        text = cfg.in_frame_phrase;
    } else {
        double dx = 0, dy = 0;
        if (spec.oracle_noise_sigma > 0) {
            std::mt19937_64 rng(sample_seed(spec.seed, sample.sample_id));
            std::normal_distribution<double> noise(0.0, spec.oracle_noise_sigma);
            dx = noise(rng);
            dy = noise(rng);
        }
        const GazePoint c = centroid(sample.gaze_points);
        GazeStatement st;
        st.gaze_box = gaze_point_to_box(clip_unit(c.x + dx, c.y + dy), cfg);
        if (task == Task::GazeObject && sample.gazed_object) {
            const auto& obj = *sample.gazed_object;
            const double ox = dx * sample.image_size.width, oy = dy * sample.image_size.height;
            const PixelBox shifted = clamp_to_image(
                {obj.bbox.x1 + ox, obj.bbox.y1 + oy, obj.bbox.x2 + ox, obj.bbox.y2 + oy}, sample.image_size);
            st.object = ObjectRef{obj.class_label, norm_box(shifted, sample.image_size)};
        }
        text = serialize_gaze_statement(st, cfg);
    }
    Prediction p = from_text(sample, task, text, cfg);
    if (task != Task::PersonDetection) p.out_score = p.out_of_frame ? 1.0 : 0.0;
    return p;
}

std::vector<Prediction> run_predictor(const DatasetManifest& manifest, const PredictorSpec& spec,
                                      const BiasTable* table) {
    validate(spec);
    if (spec.kind == PredictorKind::FixedBias && !table)
        throw InvalidInput("fixed_bias predictor needs a fitted bias table");
    std::vector<Prediction> out;
    out.reserve(manifest.samples.size());
    for (const auto& s : manifest.samples) {
        switch (spec.kind) {
            case PredictorKind::Random: out.push_back(predict_random(s, spec)); break;
            case PredictorKind::Center: out.push_back(predict_center(s, spec)); break;
            case PredictorKind::FixedBias: out.push_back(predict_fixed_bias(s, *table, spec)); break;
            case PredictorKind::Oracle: out.push_back(predict_oracle(s, spec)); break;
        }
    }
    return out;
}

}  // namespace gazekit
