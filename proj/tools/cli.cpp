#include "gazekit/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "gazekit/gaze_object_assign.hpp"
#include "gazekit/ingest.hpp"
#include "parallel.hpp"

namespace gazekit::cli {

namespace {

using nlohmann::json;

struct Common {
    std::string config_path;
    unsigned jobs = 1;
    std::optional<int> lambda;
};

class Logger {
public:
    explicit Logger(std::ostream& err) : err_(err) {}
    void info(const std::string& msg) { err_ << "[gazekit] " << msg << '\n'; }
    void warn(const std::string& msg) { err_ << "[gazekit] warning: " << msg << '\n'; }
    void error(const std::string& msg) { err_ << "[gazekit] error: " << msg << '\n'; }
    void record_errors(const std::string& file, const std::vector<RecordError>& errors) {
        for (const auto& e : errors) {
            std::string where = file;
            if (e.line) where += ":" + std::to_string(e.line);
            if (!e.key.empty()) where += " [" + e.key + "]";
            error(where + ": " + e.message);
        }
    }

private:
    std::ostream& err_;
};

CliConfig effective_config(const Common& common) {
    CliConfig cfg;
    std::string path = common.config_path;
    if (path.empty())
        if (const char* env = std::getenv("GAZEKIT_CONFIG")) path = env;
    if (!path.empty()) cfg = load_config(path);
    if (common.lambda) cfg.prompt.lambda_margin = *common.lambda;
    return cfg;
}

json provenance(const CliConfig& cfg, const std::string& command) {
    return {{"tool", "gazekit"}, {"version", GAZEKIT_VERSION}, {"command", command}, {"config", config_to_json(cfg)}};
}

void write_sidecar(const fs::path& out, const CliConfig& cfg, const std::string& command) {
    write_text_file(fs::path(out.string() + ".meta.json"), provenance(cfg, command).dump(2) + "\n");
}

std::vector<fs::path> depth_inputs(const fs::path& input) {
    if (!fs::is_directory(input)) return {input};
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(input)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext == ".png" || ext == ".pfm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

// --- hha ------------------------------------------------------------------

struct HhaArgs {
    std::string depth, out, format;
    std::optional<double> scale;
};

int cmd_hha(const Common& common, const HhaArgs& a, Logger& log) {
    CliConfig cfg = effective_config(common);
    if (a.scale) cfg.depth_scale = *a.scale;
    finalize(cfg);
    if (!a.format.empty() && a.format != "png16" && a.format != "pfm")
        throw InvalidInput("--format must be png16 or pfm");

    const auto inputs = depth_inputs(a.depth);
    fs::create_directories(a.out);
    std::vector<std::string> failures(inputs.size());
    parallel_for(inputs.size(), common.jobs, [&](std::size_t i) {
        const auto& in = inputs[i];
        try {
            const bool pfm = a.format.empty() ? in.extension() == ".pfm" : a.format == "pfm";
            const DepthMap depth = pfm ? load_depth_pfm(in) : load_depth_png16(in, cfg.depth_scale);
            write_hha_png(encode_hha(depth, cfg.hha), fs::path(a.out) / (in.stem().string() + ".png"));
        } catch (const std::exception& e) {
            failures[i] = e.what();
            if (failures[i].empty()) failures[i] = "unknown error";
        }
    });
    std::size_t failed = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i)
        if (!failures[i].empty()) {
            ++failed;
            log.error(inputs[i].string() + ": " + failures[i]);
        }
    write_text_file(fs::path(a.out) / "hha.meta.json", provenance(cfg, "hha").dump(2) + "\n");
    log.info(std::to_string(inputs.size() - failed) + " ok, " + std::to_string(failed) + " failed");
    return failed ? kPartialFailure : kOk;
}

// --- build ----------------------------------------------------------------

struct BuildArgs {
    std::string annotations, detections, tasks = "gaze_target", out;
};

std::vector<Task> parse_task_list(const std::string& list) {
    std::vector<Task> tasks;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) tasks.push_back(parse_task(item));
    if (tasks.empty()) throw InvalidInput("--tasks is empty");
    return tasks;
}

int cmd_build(const Common& common, const BuildArgs& a, Logger& log) {
    CliConfig cfg = effective_config(common);
    finalize(cfg);
    const auto tasks = parse_task_list(a.tasks);

    auto ann = load_annotations(a.annotations);
    log.record_errors(a.annotations, ann.errors);
    if (ann.clamped_boxes) log.warn(std::to_string(ann.clamped_boxes) + " annotation boxes clamped to image bounds");
    bool partial = !ann.errors.empty();

    DetectionSet detections;
    if (!a.detections.empty()) {
        auto det = load_detections(a.detections, &ann.manifest);
        log.record_errors(a.detections, det.errors);
        partial = partial || !det.errors.empty();
        detections = std::move(det.detections);
    }

    auto& samples = ann.manifest.samples;
    std::map<std::string, std::vector<PixelBox>> people;
    for (const auto& s : samples) people[s.image_path].push_back(s.head_box);

    struct Slot {
        std::vector<GazeRecord> records;
        std::vector<std::string> skipped;
        std::string error;
    };
    std::vector<Slot> slots(samples.size());
    parallel_for(samples.size(), common.jobs, [&](std::size_t i) {
        AnnotatedSample s = samples[i];
        if (!s.gazed_object && s.in_frame && !s.gaze_points.empty()) {
            if (auto it = detections.find(s.sample_id); it != detections.end())
                s.gazed_object = assign_gazed_object(centroid(s.gaze_points), s.image_size, it->second, cfg.assign);
        }
        for (Task t : tasks) {
            if (t == Task::GazeObject && s.in_frame && !s.gazed_object) {
                slots[i].skipped.push_back(s.sample_id + ": no detection overlaps the gaze point, gaze_object skipped");
                continue;
            }
            try {
                slots[i].records.push_back(build_record(s, t, cfg.prompt, people.at(s.image_path)));
            } catch (const Error& e) {
                slots[i].error = s.sample_id + ": " + e.what();
                slots[i].records.clear();
                break;
            }
        }
    });
    std::vector<GazeRecord> records;
    for (auto& slot : slots) {
        for (const auto& msg : slot.skipped) log.warn(msg);
        if (!slot.error.empty()) {
            log.error(slot.error);
            partial = true;
        }
        std::move(slot.records.begin(), slot.records.end(), std::back_inserter(records));
    }
    write_records(records, a.out);
    write_sidecar(a.out, cfg, "build");
    log.info(std::to_string(records.size()) + " records written to " + a.out);
    return partial ? kPartialFailure : kOk;
}

// --- predict --------------------------------------------------------------

struct PredictArgs {
    std::string annotations, kind, out, train, bias_out, task;
    std::optional<std::uint64_t> seed;
    std::optional<double> noise;
    std::optional<int> bias_grid;
};

int cmd_predict(const Common& common, const PredictArgs& a, Logger& log) {
    CliConfig cfg = effective_config(common);
    if (!a.kind.empty()) cfg.predictor.kind = parse_predictor(a.kind);
    if (a.seed) cfg.predictor.seed = *a.seed;
    if (a.noise) cfg.predictor.oracle_noise_sigma = *a.noise;
    if (a.bias_grid) cfg.predictor.bias_grid = *a.bias_grid;
    if (!a.task.empty()) cfg.predictor.oracle_task = parse_task(a.task);
    finalize(cfg);
    if (cfg.predictor.kind == PredictorKind::Random && !a.seed)
        throw InvalidInput("--kind random requires --seed");

    auto ann = load_annotations(a.annotations);
    log.record_errors(a.annotations, ann.errors);

    std::optional<BiasTable> table;
    if (cfg.predictor.kind == PredictorKind::FixedBias) {
        std::string train = a.train;
        if (train.empty()) {
            log.warn("no --train given; fitting the fixed-bias table on the evaluation annotations");
            train = a.annotations;
        }
        auto tr = load_annotations(train, Split::Train);
        log.record_errors(train, tr.errors);
        table = fit_fixed_bias(tr.manifest, cfg.predictor);
        if (!a.bias_out.empty()) write_text_file(a.bias_out, bias_table_to_json(*table).dump(2) + "\n");
    }

    const auto& samples = ann.manifest.samples;
    std::vector<Prediction> preds(samples.size());
    parallel_for(samples.size(), common.jobs, [&](std::size_t i) {
        DatasetManifest one;
        one.samples = {samples[i]};
        preds[i] = run_predictor(one, cfg.predictor, table ? &*table : nullptr).front();
    });
    write_predictions(preds, a.out);
    write_sidecar(a.out, cfg, "predict");
    log.info(std::to_string(preds.size()) + " predictions written to " + a.out);
    return ann.errors.empty() ? kOk : kPartialFailure;
}

// --- parse ----------------------------------------------------------------

struct ParseArgs {
    std::string responses, out, task = "gaze_object";
};

int cmd_parse(const Common& common, const ParseArgs& a, Logger& log) {
    CliConfig cfg = effective_config(common);
    finalize(cfg);
    const Task default_task = parse_task(a.task);
    std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + a.out);
    std::size_t ok = 0, failed = 0;
    auto errors = for_each_jsonl_line(a.responses, [&](const json& j, std::size_t line) {
        std::string sample_id;
        if (j.is_object() && j.contains("sample_id") && j["sample_id"].is_string())
            sample_id = j["sample_id"].get<std::string>();
        try {
            if (sample_id.empty()) throw FormatError("missing sample_id");
            if (!j.contains("text") || !j["text"].is_string()) throw FormatError("missing text");
            const Task task = j.contains("task") ? parse_task(j["task"].get<std::string>()) : default_task;
            out << prediction_to_json(parse_response(j["text"].get<std::string>(), cfg.prompt, sample_id, task)).dump()
                << '\n';
            ++ok;
        } catch (const Error& e) {
            json rec = {{"sample_id", sample_id}, {"line", line}, {"error", e.what()}};
            if (auto* m = dynamic_cast<const MalformedResponse*>(&e)) rec["offset"] = m->offset();
            out << rec.dump() << '\n';
            log.error(a.responses + ":" + std::to_string(line) + ": " + e.what());
            ++failed;
        }
    });
    for (const auto& e : errors) {
        out << json{{"sample_id", ""}, {"line", e.line}, {"error", e.message}}.dump() << '\n';
        ++failed;
    }
    log.record_errors(a.responses, errors);
    out.close();
    write_sidecar(a.out, cfg, "parse");
    log.info(std::to_string(ok) + " parsed, " + std::to_string(failed) + " failed");
    return failed ? kPartialFailure : kOk;
}

// --- evaluate -------------------------------------------------------------

struct EvaluateArgs {
    std::string predictions, annotations, report = "table", vocab, dataset, predictor, out;
    std::optional<double> sigma, iou_threshold;
    std::optional<int> grid;
};

int cmd_evaluate(const Common& common, const EvaluateArgs& a, std::ostream& stdout_stream, Logger& log) {
    CliConfig cfg = effective_config(common);
    if (a.sigma) cfg.metrics.heatmap_sigma = *a.sigma;
    if (a.grid) cfg.metrics.heatmap_grid = *a.grid;
    if (a.iou_threshold) cfg.metrics.iou_threshold = *a.iou_threshold;
    finalize(cfg);
    if (a.report != "table" && a.report != "json" && a.report != "csv")
        throw InvalidInput("--report must be table, json or csv");

    auto ann = load_annotations(a.annotations);
    log.record_errors(a.annotations, ann.errors);
    if (!a.vocab.empty()) ann.manifest.vocabulary = load_vocabulary(a.vocab);
    auto preds = read_predictions(a.predictions);
    log.record_errors(a.predictions, preds.errors);

    const MetricReport report = evaluate(preds.items, ann.manifest, cfg.metrics);
    for (const auto& w : report.warnings) log.warn(w);

    const std::string dataset = a.dataset.empty() ? ann.manifest.name : a.dataset;
    const std::string predictor = a.predictor.empty() ? fs::path(a.predictions).stem().string() : a.predictor;
    std::string text;
    if (a.report == "json") {
        json j = report_to_json(report);
        j["dataset"] = dataset;
        j["predictor"] = predictor;
        j["provenance"] = provenance(cfg, "evaluate");
        text = j.dump(2) + "\n";
    } else if (a.report == "csv") {
        text = report_csv_header() + "\n" + report_to_csv_row(report, dataset, predictor) + "\n";
    } else {
        text = report_to_table(report, predictor);
    }
    if (a.out.empty()) {
        stdout_stream << text;
    } else {
        write_text_file(a.out, text);
        if (a.report != "json") write_sidecar(a.out, cfg, "evaluate");
    }
    return (ann.errors.empty() && preds.errors.empty()) ? kOk : kPartialFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Logger log(err);
    CLI::App app{"gazekit: gaze dataset preparation, baselines and evaluation", "gazekit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(GAZEKIT_VERSION));
    Common common;
    app.add_option("--config", common.config_path, "YAML config file (default: $GAZEKIT_CONFIG)");
    app.add_option("--jobs", common.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--lambda", common.lambda, "Gaze box margin in bins")->check(CLI::Range(1, 499));
    app.fallthrough();

    HhaArgs hha;
    auto* hha_cmd = app.add_subcommand("hha", "Encode depth maps as HHA PNG images");
    hha_cmd->add_option("--depth", hha.depth, "Depth file or directory")->required();
    hha_cmd->add_option("--out", hha.out, "Output directory")->required();
    hha_cmd->add_option("--scale", hha.scale, "Depth units per 16-bit PNG count");
    hha_cmd->add_option("--format", hha.format, "png16 or pfm (default: by extension)");

    BuildArgs build;
    auto* build_cmd = app.add_subcommand("build", "Serialize annotations into conversation records");
    build_cmd->add_option("--annotations", build.annotations, "Annotation JSONL")->required();
    build_cmd->add_option("--detections", build.detections, "Detection JSON");
    build_cmd->add_option("--tasks", build.tasks, "Comma-separated task list");
    build_cmd->add_option("--out", build.out, "Output JSONL")->required();

    PredictArgs predict;
    auto* predict_cmd = app.add_subcommand("predict", "Run a baseline or oracle predictor");
    predict_cmd->add_option("--annotations", predict.annotations, "Annotation JSONL")->required();
    predict_cmd->add_option("--kind", predict.kind, "random|center|fixed_bias|oracle");
    predict_cmd->add_option("--seed", predict.seed, "Random seed");
    predict_cmd->add_option("--noise", predict.noise, "Oracle noise sigma (normalized units)");
    predict_cmd->add_option("--task", predict.task, "Task the oracle answers");
    predict_cmd->add_option("--train", predict.train, "Training annotations for fixed_bias");
    predict_cmd->add_option("--bias-grid", predict.bias_grid, "Head-cell grid for fixed_bias");
    predict_cmd->add_option("--bias-table", predict.bias_out, "Write the fitted bias table here");
    predict_cmd->add_option("--out", predict.out, "Output prediction JSONL")->required();

    ParseArgs parse;
    auto* parse_cmd = app.add_subcommand("parse", "Parse model responses into predictions");
    parse_cmd->add_option("--responses", parse.responses, "JSONL of {sample_id, text[, task]}")->required();
    parse_cmd->add_option("--task", parse.task, "Task for lines without one");
    parse_cmd->add_option("--out", parse.out, "Output prediction JSONL")->required();

    EvaluateArgs eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against annotations");
    eval_cmd->add_option("--predictions", eval.predictions, "Prediction JSONL")->required();
    eval_cmd->add_option("--annotations", eval.annotations, "Annotation JSONL")->required();
    eval_cmd->add_option("--report", eval.report, "table|json|csv");
    eval_cmd->add_option("--vocab", eval.vocab, "Class vocabulary, one per line");
    eval_cmd->add_option("--dataset", eval.dataset, "Dataset label for reports");
    eval_cmd->add_option("--predictor", eval.predictor, "Predictor label for reports");
    eval_cmd->add_option("--heatmap-sigma", eval.sigma, "Heatmap Gaussian sigma in cells");
    eval_cmd->add_option("--heatmap-grid", eval.grid, "Heatmap grid size");
    eval_cmd->add_option("--iou-threshold", eval.iou_threshold, "Object IoU threshold");
    eval_cmd->add_option("--out", eval.out, "Write the report here instead of stdout");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsageError;
    }

    try {
        if (*hha_cmd) return cmd_hha(common, hha, log);
        if (*build_cmd) return cmd_build(common, build, log);
        if (*predict_cmd) return cmd_predict(common, predict, log);
        if (*parse_cmd) return cmd_parse(common, parse, log);
        if (*eval_cmd) return cmd_evaluate(common, eval, out, log);
    } catch (const InvalidInput& e) {
        log.error(e.what());
        return kUsageError;
    } catch (const std::exception& e) {
        log.error(e.what());
        return kPartialFailure;
    }
    return kUsageError;
}

}  // namespace gazekit::cli
