#include "gazekit/ingest.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "png_io.hpp"

namespace gazekit {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key) {
    if (!j.is_object()) throw FormatError("expected a JSON object");
    auto it = j.find(key);
    if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
    return *it;
}

bool present(const json& j, const char* key) {
    auto it = j.find(key);
    return it != j.end() && !it->is_null();
}

double number(const json& j, const char* what) {
    if (!j.is_number()) throw FormatError(std::string(what) + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw FormatError(std::string(what) + " must be finite");
    return v;
}

std::string string_field(const json& j, const char* key) {
    const auto& v = require(j, key);
    if (!v.is_string()) throw FormatError(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

PixelBox pixel_box(const json& j) {
    if (!j.is_array() || j.size() != 4) throw FormatError("bbox must be [x1,y1,x2,y2]");
    PixelBox b{number(j[0], "bbox"), number(j[1], "bbox"), number(j[2], "bbox"), number(j[3], "bbox")};
    if (b.x1 > b.x2 || b.y1 > b.y2) throw FormatError("bbox corners out of order (x2<x1 or y2<y1)");
    return b;
}

GazePoint point(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2) throw FormatError(std::string(what) + " must be [x,y]");
    GazePoint p{number(j[0], what), number(j[1], what)};
    if (!is_valid(p)) throw FormatError(std::string(what) + " must lie in [0,1]^2");
    return p;
}

json box_json(const PixelBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }
json point_json(const GazePoint& p) { return json::array({p.x, p.y}); }

NormBox norm_box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw FormatError("box must be [x1,y1,x2,y2]");
    std::array<int, 4> v{};
    for (std::size_t i = 0; i < 4; ++i) {
        if (!j[i].is_number_integer()) throw FormatError("box coordinates must be integers");
        v[i] = j[i].get<int>();
    }
    NormBox b{v[0], v[1], v[2], v[3]};
    if (!is_valid(b)) throw FormatError("box must hold ordered bins in [0,999]");
    return b;
}

template <typename T>
void write_jsonl(const std::vector<T>& items, const fs::path& path, json (*to_json)(const T&)) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    for (const auto& item : items) out << to_json(item).dump() << '\n';
    if (!out) throw FormatError("write failed for " + path.string());
}

std::uint32_t load_u32(const unsigned char* p, bool little) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    if (little != (std::endian::native == std::endian::little))
        v = (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
    return v;
}

}  // namespace

const AnnotatedSample* DatasetManifest::find(const std::string& sample_id) const {
    for (const auto& s : samples)
        if (s.sample_id == sample_id) return &s;
    return nullptr;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out << content;
    if (!out) throw FormatError("write failed for " + path.string());
}

// --- depth rasters ------------------------------------------------------

DepthMap load_depth_png16(const fs::path& path, double scale) {
    if (!(scale > 0) || !std::isfinite(scale)) throw InvalidInput("depth scale must be positive");
    const png::Raster r = png::read(path);
    if (r.channels != 1 || r.bit_depth != 16)
        throw FormatError(path.string() + ": expected 16-bit single-channel PNG, found " +
                          std::to_string(r.channels) + "-channel " + std::to_string(r.bit_depth) +
                          "-bit");
    std::vector<double> values(r.samples.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = r.samples[i] * scale;
    return DepthMap(r.width, r.height, std::move(values));
}

void write_depth_png16(const Grid<std::uint16_t>& counts, const fs::path& path) {
    png::Raster r{counts.width(), counts.height(), 1, 16, {}};
    r.samples.assign(counts.values().begin(), counts.values().end());
    png::write(r, path);
}

DepthMap load_depth_pfm(const fs::path& path) {
    const std::string data = read_text_file(path);
    std::istringstream head(data);
    std::string magic;
    int w = 0, h = 0;
    double scale = 0;
    head >> magic;
    if (magic == "PF") throw FormatError(path.string() + ": color PFM (PF) is not a depth map");
    if (magic != "Pf") throw FormatError(path.string() + ": bad PFM magic '" + magic + "'");
    if (!(head >> w >> h >> scale) || w <= 0 || h <= 0 || scale == 0 || !std::isfinite(scale))
        throw FormatError(path.string() + ": malformed PFM header");
    head.get();  // single whitespace byte ends the header
    const auto offset = static_cast<std::size_t>(head.tellg());
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (data.size() < offset + 4 * n) throw FormatError(path.string() + ": truncated PFM payload");
    const bool little = scale < 0;
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data()) + offset;

    std::vector<double> values(n);
    for (int row = 0; row < h; ++row) {
        const int dst_row = h - 1 - row;  // file rows run bottom-up
        for (int x = 0; x < w; ++x) {
            const std::size_t src = static_cast<std::size_t>(row) * w + x;
            const float v = std::bit_cast<float>(load_u32(bytes + 4 * src, little));
            if (!std::isfinite(v) || v < 0)
                throw FormatError(path.string() + ": non-finite or negative depth sample");
            values[static_cast<std::size_t>(dst_row) * w + x] = v;
        }
    }
    return DepthMap(w, h, std::move(values));
}

void write_depth_pfm(const Grid<float>& values, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    const bool little = std::endian::native == std::endian::little;
    out << "Pf\n" << values.width() << ' ' << values.height() << '\n' << (little ? "-1.0" : "1.0") << '\n';
    for (int y = values.height() - 1; y >= 0; --y)
        for (int x = 0; x < values.width(); ++x) {
            const float v = values.at(x, y);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    if (!out) throw FormatError("write failed for " + path.string());
}

// --- HHA images ---------------------------------------------------------

void write_hha_png(const HhaImage& hha, const fs::path& path) {
    const ImageSize size = hha.size();
    if (hha.height.size() != size || hha.angle.size() != size)
        throw InvalidInput("HHA channels differ in size");
    png::Raster r{size.width, size.height, 3, 8, {}};
    r.samples.resize(static_cast<std::size_t>(size.width) * size.height * 3);
    auto d = hha.disparity.values(), g = hha.height.values(), a = hha.angle.values();
    for (std::size_t i = 0; i < d.size(); ++i) {
        r.samples[3 * i] = d[i];
        r.samples[3 * i + 1] = g[i];
        r.samples[3 * i + 2] = a[i];
    }
    png::write(r, path);
}

HhaImage read_hha_png(const fs::path& path) {
    const png::Raster r = png::read(path);
    if (r.channels != 3 || r.bit_depth != 8)
        throw FormatError(path.string() + ": expected 8-bit RGB PNG");
    HhaImage hha{Channel8(r.width, r.height), Channel8(r.width, r.height), Channel8(r.width, r.height)};
    auto d = hha.disparity.values(), g = hha.height.values(), a = hha.angle.values();
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = static_cast<std::uint8_t>(r.samples[3 * i]);
        g[i] = static_cast<std::uint8_t>(r.samples[3 * i + 1]);
        a[i] = static_cast<std::uint8_t>(r.samples[3 * i + 2]);
    }
    return hha;
}

// --- annotations ----------------------------------------------------------

AnnotatedSample sample_from_json(const json& j) {
    AnnotatedSample s;
    s.sample_id = string_field(j, "sample_id");
    if (s.sample_id.empty()) throw FormatError("sample_id is empty");
    s.image_path = string_field(j, "image");
    if (present(j, "depth")) s.depth_path = string_field(j, "depth");
    if (present(j, "hha")) s.hha_path = string_field(j, "hha");
    const auto& w = require(j, "width");
    const auto& h = require(j, "height");
    if (!w.is_number_integer() || !h.is_number_integer())
        throw FormatError("width and height must be integers");
    s.image_size = {w.get<int>(), h.get<int>()};
    if (!is_valid(s.image_size)) throw FormatError("width and height must be positive");
    s.head_box = pixel_box(require(j, "head_box"));
    s.eye_point = point(require(j, "eye"), "eye");
    if (present(j, "gaze_points")) {
        const auto& pts = j["gaze_points"];
        if (!pts.is_array()) throw FormatError("gaze_points must be an array");
        if (pts.size() > kMaxAnnotators)
            throw FormatError("at most " + std::to_string(kMaxAnnotators) + " gaze points per sample");
        for (const auto& p : pts) s.gaze_points.push_back(point(p, "gaze point"));
    }
    const auto& in = require(j, "in_frame");
    if (!in.is_boolean()) throw FormatError("in_frame must be a boolean");
    s.in_frame = in.get<bool>();
    if (s.in_frame && s.gaze_points.empty()) throw FormatError("in-frame sample without gaze points");
    if (present(j, "gazed_object")) {
        const auto& o = j["gazed_object"];
        Detection d;
        d.bbox = pixel_box(require(o, "bbox"));
        d.class_label = string_field(o, "class");
        if (d.class_label.empty()) throw FormatError("gazed_object class is empty");
        if (present(o, "score")) d.score = number(o["score"], "score");
        if (d.score < 0 || d.score > 1) throw FormatError("gazed_object score must lie in [0,1]");
        s.gazed_object = d;
    }
    return s;
}

json sample_to_json(const AnnotatedSample& s) {
    json j;
    j["sample_id"] = s.sample_id;
    j["image"] = s.image_path;
    j["depth"] = s.depth_path ? json(*s.depth_path) : json(nullptr);
    if (s.hha_path) j["hha"] = *s.hha_path;
    j["width"] = s.image_size.width;
    j["height"] = s.image_size.height;
    j["head_box"] = box_json(s.head_box);
    j["eye"] = point_json(s.eye_point);
    j["gaze_points"] = json::array();
    for (const auto& p : s.gaze_points) j["gaze_points"].push_back(point_json(p));
    j["in_frame"] = s.in_frame;
    if (s.gazed_object)
        j["gazed_object"] = {{"bbox", box_json(s.gazed_object->bbox)},
                             {"class", s.gazed_object->class_label},
                             {"score", s.gazed_object->score}};
    else
        j["gazed_object"] = nullptr;
    return j;
}

AnnotationLoad load_annotations(const fs::path& path, Split split) {
    AnnotationLoad out;
    out.manifest.name = path.stem().string();
    out.manifest.split = split;
    std::set<std::string> ids;
    out.errors = for_each_jsonl_line(path, [&](const json& j, std::size_t) {
        AnnotatedSample s = sample_from_json(j);
        if (!ids.insert(s.sample_id).second) throw FormatError("duplicate sample_id '" + s.sample_id + "'");
        if (!within_image(s.head_box, s.image_size)) {
            s.head_box = clamp_to_image(s.head_box, s.image_size);
            ++out.clamped_boxes;
        }
        if (s.gazed_object && !within_image(s.gazed_object->bbox, s.image_size)) {
            s.gazed_object->bbox = clamp_to_image(s.gazed_object->bbox, s.image_size);
            ++out.clamped_boxes;
        }
        out.manifest.samples.push_back(std::move(s));
    });
    return out;
}

void write_annotations(const std::vector<AnnotatedSample>& samples, const fs::path& path) {
    write_jsonl(samples, path, &sample_to_json);
}

DetectionLoad load_detections(const fs::path& path, const DatasetManifest* manifest) {
    json root;
    try {
        root = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (!root.is_object()) throw FormatError(path.string() + ": expected an object keyed by sample_id");

    DetectionLoad out;
    for (const auto& [sample_id, arr] : root.items()) {
        auto& list = out.detections[sample_id];
        if (!arr.is_array()) {
            out.errors.push_back({0, sample_id, "detections must be an array"});
            continue;
        }
        const AnnotatedSample* sample = manifest ? manifest->find(sample_id) : nullptr;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            try {
                Detection d;
                d.bbox = pixel_box(require(arr[i], "bbox"));
                d.class_label = string_field(arr[i], "class");
                d.score = number(require(arr[i], "score"), "score");
                validate(d);
                const ImageSize bounds = sample ? sample->image_size
                                                : ImageSize{std::numeric_limits<int>::max(),
                                                            std::numeric_limits<int>::max()};
                if (!within_image(d.bbox, bounds)) {
                    d.bbox = clamp_to_image(d.bbox, bounds);
                    ++out.clamped_boxes;
                }
                list.push_back(std::move(d));
            } catch (const Error& e) {
                out.errors.push_back({0, sample_id,
                                      "detection " + std::to_string(i) + " of '" + sample_id + "': " + e.what()});
            }
        }
    }
    return out;
}

void write_detections(const DetectionSet& detections, const fs::path& path) {
    json root = json::object();
    for (const auto& [id, list] : detections) {
        json arr = json::array();
        for (const auto& d : list)
            arr.push_back({{"bbox", box_json(d.bbox)}, {"class", d.class_label}, {"score", d.score}});
        root[id] = std::move(arr);
    }
    write_text_file(path, root.dump(1) + "\n");
}

std::vector<std::string> load_vocabulary(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<std::string> vocab;
    std::set<std::string> seen;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!seen.insert(line).second) throw FormatError("duplicate vocabulary entry '" + line + "'");
        vocab.push_back(line);
    }
    return vocab;
}

// --- records and predictions ----------------------------------------------

json record_to_json(const GazeRecord& r) {
    json msgs = json::array();
    for (const auto& m : r.messages) msgs.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    return {{"sample_id", r.sample_id},
            {"task", task_name(r.task)},
            {"messages", std::move(msgs)},
            {"image_refs", r.image_refs}};
}

GazeRecord record_from_json(const json& j) {
    GazeRecord r;
    r.sample_id = string_field(j, "sample_id");
    r.task = parse_task(string_field(j, "task"));
    const auto& msgs = require(j, "messages");
    if (!msgs.is_array()) throw FormatError("messages must be an array");
    for (const auto& m : msgs)
        r.messages.push_back({parse_role(string_field(m, "role")), string_field(m, "content")});
    if (present(j, "image_refs")) r.image_refs = j["image_refs"].get<std::vector<std::string>>();
    return r;
}

json prediction_to_json(const Prediction& p) {
    json boxes = json::array();
    for (const auto& b : p.boxes) boxes.push_back({b.x1, b.y1, b.x2, b.y2});
    json j = {{"sample_id", p.sample_id},
              {"task", task_name(p.task)},
              {"boxes", std::move(boxes)},
              {"class", p.class_label ? json(*p.class_label) : json(nullptr)},
              {"out_of_frame", p.out_of_frame},
              {"out_score", p.out_score ? json(*p.out_score) : json(nullptr)},
              {"confidence", p.confidence ? json(*p.confidence) : json(nullptr)},
              {"raw_text", p.raw_text}};
    if (p.clamped) j["clamped"] = true;
    return j;
}

Prediction prediction_from_json(const json& j) {
    Prediction p;
    p.sample_id = string_field(j, "sample_id");
    if (p.sample_id.empty()) throw FormatError("sample_id is empty");
    p.task = parse_task(string_field(j, "task"));
    if (present(j, "boxes")) {
        if (!j["boxes"].is_array()) throw FormatError("boxes must be an array");
        for (const auto& b : j["boxes"]) p.boxes.push_back(norm_box_from_json(b));
    }
    if (present(j, "class")) p.class_label = string_field(j, "class");
    if (present(j, "out_of_frame")) {
        if (!j["out_of_frame"].is_boolean()) throw FormatError("out_of_frame must be a boolean");
        p.out_of_frame = j["out_of_frame"].get<bool>();
    }
    auto unit = [&](const char* key) -> std::optional<double> {
        if (!present(j, key)) return std::nullopt;
        const double v = number(j[key], key);
        if (v < 0 || v > 1) throw FormatError(std::string(key) + " must lie in [0,1]");
        return v;
    };
    p.out_score = unit("out_score");
    p.confidence = unit("confidence");
    if (present(j, "clamped")) p.clamped = j["clamped"].get<bool>();
    if (present(j, "raw_text")) p.raw_text = string_field(j, "raw_text");
    if (p.task == Task::GazeTarget && p.boxes.empty() && !p.out_of_frame)
        throw FormatError("gaze_target prediction needs a box unless out of frame");
    return p;
}

void write_records(const std::vector<GazeRecord>& records, const fs::path& path) {
    write_jsonl(records, path, &record_to_json);
}

JsonlLoad<GazeRecord> read_records(const fs::path& path) {
    JsonlLoad<GazeRecord> out;
    out.errors = for_each_jsonl_line(
        path, [&](const json& j, std::size_t) { out.items.push_back(record_from_json(j)); });
    return out;
}

void write_predictions(const std::vector<Prediction>& predictions, const fs::path& path) {
    write_jsonl(predictions, path, &prediction_to_json);
}

JsonlLoad<Prediction> read_predictions(const fs::path& path) {
    JsonlLoad<Prediction> out;
    out.errors = for_each_jsonl_line(
        path, [&](const json& j, std::size_t) { out.items.push_back(prediction_from_json(j)); });
    return out;
}

}  // namespace gazekit
