#include "config.hpp"

#include <yaml-cpp/yaml.h>

#include <set>

#include "gazekit/ingest.hpp"

namespace gazekit::cli {

namespace {

void check_keys(const YAML::Node& node, const std::string& section, const std::set<std::string>& allowed) {
    if (!node.IsMap()) throw InvalidInput("config section '" + section + "' must be a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.contains(key)) throw InvalidInput("unknown config key '" + section + "." + key + "'");
    }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& target) {
    if (const auto v = node[key]) {
        try {
            target = v.as<T>();
        } catch (const YAML::Exception&) {
            throw InvalidInput(std::string("config key '") + key + "' has the wrong type");
        }
    }
}

TieBreak parse_tie_break(const std::string& s) {
    if (s == "highest_score") return TieBreak::HighestScore;
    if (s == "first_index") return TieBreak::FirstIndex;
    throw InvalidInput("tie_break must be highest_score or first_index");
}

}  // namespace

CliConfig parse_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw InvalidInput(std::string("config: ") + e.what());
    }
    CliConfig cfg;
    if (!root || root.IsNull()) return cfg;
    check_keys(root, "<root>", {"hha", "prompt", "assign", "metrics", "predictor"});

    if (const auto n = root["hha"]) {
        check_keys(n, "hha", {"rescale_lo", "rescale_hi", "epsilon", "constant_channel_value", "depth_scale"});
        read(n, "rescale_lo", cfg.hha.rescale_lo);
        read(n, "rescale_hi", cfg.hha.rescale_hi);
        read(n, "epsilon", cfg.hha.epsilon);
        int constant = cfg.hha.constant_channel_value;
        read(n, "constant_channel_value", constant);
        if (constant < 0 || constant > 255) throw InvalidInput("constant_channel_value must be 0..255");
        cfg.hha.constant_channel_value = static_cast<std::uint8_t>(constant);
        read(n, "depth_scale", cfg.depth_scale);
    }
    if (const auto n = root["prompt"]) {
        check_keys(n, "prompt", {"lambda_margin", "out_of_frame_phrase", "in_frame_phrase", "image_placeholder",
                                 "system_prompt", "tokens", "templates"});
        read(n, "lambda_margin", cfg.prompt.lambda_margin);
        read(n, "out_of_frame_phrase", cfg.prompt.out_of_frame_phrase);
        read(n, "in_frame_phrase", cfg.prompt.in_frame_phrase);
        read(n, "image_placeholder", cfg.prompt.image_placeholder);
        read(n, "system_prompt", cfg.prompt.system_prompt);
        if (const auto t = n["tokens"]) {
            auto& tk = cfg.prompt.tokens;
            check_keys(t, "prompt.tokens", {"im_start", "im_end", "vision_start", "vision_end", "box_start",
                                            "box_end", "ref_start", "ref_end"});
            read(t, "im_start", tk.im_start);
            read(t, "im_end", tk.im_end);
            read(t, "vision_start", tk.vision_start);
            read(t, "vision_end", tk.vision_end);
            read(t, "box_start", tk.box_start);
            read(t, "box_end", tk.box_end);
            read(t, "ref_start", tk.ref_start);
            read(t, "ref_end", tk.ref_end);
        }
        if (const auto t = n["templates"]) {
            if (!t.IsMap()) throw InvalidInput("prompt.templates must be a mapping");
            for (const auto& kv : t)
                cfg.prompt.task_prompt_templates[parse_task(kv.first.as<std::string>())] =
                    kv.second.as<std::string>();
        }
    }
    if (const auto n = root["assign"]) {
        check_keys(n, "assign", {"gaze_box_halfwidth", "tie_break", "min_iou"});
        if (n["gaze_box_halfwidth"] && !n["gaze_box_halfwidth"].IsNull())
            cfg.assign.gaze_box_halfwidth = n["gaze_box_halfwidth"].as<double>();
        if (n["tie_break"]) cfg.assign.tie_break = parse_tie_break(n["tie_break"].as<std::string>());
        read(n, "min_iou", cfg.assign.min_iou);
    }
    if (const auto n = root["metrics"]) {
        check_keys(n, "metrics", {"heatmap_grid", "heatmap_sigma", "iou_threshold"});
        read(n, "heatmap_grid", cfg.metrics.heatmap_grid);
        read(n, "heatmap_sigma", cfg.metrics.heatmap_sigma);
        read(n, "iou_threshold", cfg.metrics.iou_threshold);
    }
    if (const auto n = root["predictor"]) {
        check_keys(n, "predictor", {"kind", "seed", "oracle_noise_sigma", "bias_grid", "oracle_task"});
        if (n["kind"]) cfg.predictor.kind = parse_predictor(n["kind"].as<std::string>());
        read(n, "seed", cfg.predictor.seed);
        read(n, "oracle_noise_sigma", cfg.predictor.oracle_noise_sigma);
        read(n, "bias_grid", cfg.predictor.bias_grid);
        if (n["oracle_task"]) cfg.predictor.oracle_task = parse_task(n["oracle_task"].as<std::string>());
    }
    return cfg;
}

CliConfig load_config(const std::filesystem::path& path) {
    try {
        return parse_config(read_text_file(path));
    } catch (const InvalidInput& e) {
        throw InvalidInput(path.string() + ": " + e.what());
    }
}

void finalize(CliConfig& cfg) {
    if (!(cfg.depth_scale > 0)) throw InvalidInput("depth scale must be positive");
    validate(cfg.hha);
    validate(cfg.prompt);
    validate(cfg.assign);
    cfg.metrics.gaze_box_margin = cfg.prompt.lambda_margin;
    validate(cfg.metrics);
    cfg.predictor.prompt = cfg.prompt;
    validate(cfg.predictor);
}

nlohmann::json config_to_json(const CliConfig& cfg) {
    using nlohmann::json;
    json templates = json::object();
    for (const auto& [task, text] : cfg.prompt.task_prompt_templates) templates[std::string(task_name(task))] = text;
    const auto& tk = cfg.prompt.tokens;
    return {
        {"hha",
         {{"rescale_lo", cfg.hha.rescale_lo},
          {"rescale_hi", cfg.hha.rescale_hi},
          {"epsilon", cfg.hha.epsilon},
          {"constant_channel_value", cfg.hha.constant_channel_value},
          {"depth_scale", cfg.depth_scale}}},
        {"prompt",
         {{"lambda_margin", cfg.prompt.lambda_margin},
          {"out_of_frame_phrase", cfg.prompt.out_of_frame_phrase},
          {"in_frame_phrase", cfg.prompt.in_frame_phrase},
          {"image_placeholder", cfg.prompt.image_placeholder},
          {"system_prompt", cfg.prompt.system_prompt},
          {"tokens",
           {{"im_start", tk.im_start}, {"im_end", tk.im_end}, {"vision_start", tk.vision_start},
            {"vision_end", tk.vision_end}, {"box_start", tk.box_start}, {"box_end", tk.box_end},
            {"ref_start", tk.ref_start}, {"ref_end", tk.ref_end}}},
          {"templates", templates}}},
        {"assign",
         {{"gaze_box_halfwidth", cfg.assign.gaze_box_halfwidth ? json(*cfg.assign.gaze_box_halfwidth) : json(nullptr)},
          {"tie_break", cfg.assign.tie_break == TieBreak::HighestScore ? "highest_score" : "first_index"},
          {"min_iou", cfg.assign.min_iou}}},
        {"metrics",
         {{"heatmap_grid", cfg.metrics.heatmap_grid},
          {"heatmap_sigma", cfg.metrics.heatmap_sigma},
          {"iou_threshold", cfg.metrics.iou_threshold},
          {"ap_interpolation", "all_points"},
          {"auc_tie_rule", "average_rank"}}},
        {"predictor",
         {{"kind", predictor_name(cfg.predictor.kind)},
          {"seed", cfg.predictor.seed},
          {"oracle_noise_sigma", cfg.predictor.oracle_noise_sigma},
          {"bias_grid", cfg.predictor.bias_grid},
          {"oracle_task", task_name(cfg.predictor.oracle_task)}}},
    };
}

}  // namespace gazekit::cli
