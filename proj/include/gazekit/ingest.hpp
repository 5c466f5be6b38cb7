#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gazekit/core.hpp"
#include "gazekit/hha.hpp"
#include "gazekit/prompt_codec.hpp"
#include "json.hpp"

namespace gazekit {

namespace fs = std::filesystem;

/// A problem with a single record of an input file. Line numbers are 1-based;
/// 0 means the error is not tied to a line (e.g. a JSON object key).
struct RecordError {
    std::size_t line = 0;
    std::string key;
    std::string message;
};

enum class Split { Train, Test };

struct DatasetManifest {
    std::string name;
    Split split = Split::Test;
    std::vector<AnnotatedSample> samples;
    std::vector<std::string> vocabulary;

    const AnnotatedSample* find(const std::string& sample_id) const;
};

struct AnnotationLoad {
    DatasetManifest manifest;
    std::vector<RecordError> errors;
    std::size_t clamped_boxes = 0;
};

using DetectionSet = std::map<std::string, std::vector<Detection>>;

struct DetectionLoad {
    DetectionSet detections;
    std::vector<RecordError> errors;
    std::size_t clamped_boxes = 0;
};

template <typename T>
struct JsonlLoad {
    std::vector<T> items;
    std::vector<RecordError> errors;
};

// --- depth rasters ------------------------------------------------------

DepthMap load_depth_png16(const fs::path& path, double scale);
void write_depth_png16(const Grid<std::uint16_t>& counts, const fs::path& path);

DepthMap load_depth_pfm(const fs::path& path);
/// Grayscale PFM, little-endian, bottom-up rows.
void write_depth_pfm(const Grid<float>& values, const fs::path& path);

// --- HHA images ---------------------------------------------------------

/// 8-bit RGB PNG with R = disparity, G = height, B = angle.
void write_hha_png(const HhaImage& hha, const fs::path& path);
HhaImage read_hha_png(const fs::path& path);

// --- annotations and detections -----------------------------------------

AnnotatedSample sample_from_json(const nlohmann::json& j);
nlohmann::json sample_to_json(const AnnotatedSample& s);

AnnotationLoad load_annotations(const fs::path& path, Split split = Split::Test);
void write_annotations(const std::vector<AnnotatedSample>& samples, const fs::path& path);

/// When a manifest is given, boxes of known samples are clamped to image bounds.
DetectionLoad load_detections(const fs::path& path, const DatasetManifest* manifest = nullptr);
void write_detections(const DetectionSet& detections, const fs::path& path);

/// One class name per line; blank lines and duplicates are rejected.
std::vector<std::string> load_vocabulary(const fs::path& path);

// --- records and predictions --------------------------------------------

nlohmann::json record_to_json(const GazeRecord& r);
GazeRecord record_from_json(const nlohmann::json& j);

nlohmann::json prediction_to_json(const Prediction& p);
Prediction prediction_from_json(const nlohmann::json& j);

void write_records(const std::vector<GazeRecord>& records, const fs::path& path);
JsonlLoad<GazeRecord> read_records(const fs::path& path);

void write_predictions(const std::vector<Prediction>& predictions, const fs::path& path);
JsonlLoad<Prediction> read_predictions(const fs::path& path);

/// Reads a JSONL file line by line. Blank lines are skipped; each non-blank
/// line is handed to `on_line` and any exception it throws becomes a RecordError.
template <typename Fn>
std::vector<RecordError> for_each_jsonl_line(const fs::path& path, Fn&& on_line);

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, const std::string& content);

}  // namespace gazekit

#include "gazekit/detail/jsonl.hpp"
