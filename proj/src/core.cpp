#include "gazekit/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace gazekit {

namespace {

constexpr std::array<std::pair<Task, std::string_view>, 4> kTaskNames{{
    {Task::PersonDetection, "person_detection"},
    {Task::GazeTarget, "gaze_target"},
    {Task::GazeObject, "gaze_object"},
    {Task::GazeInOut, "gaze_inout"},
}};

bool finite(double v) { return std::isfinite(v); }

}  // namespace

std::string_view task_name(Task task) {
    for (const auto& [t, name] : kTaskNames)
        if (t == task) return name;
    return "unknown";
}

Task parse_task(std::string_view name) {
    for (const auto& [t, n] : kTaskNames)
        if (n == name) return t;
    throw InvalidInput("unknown task '" + std::string(name) + "'");
}

const std::vector<Task>& all_tasks() {
    static const std::vector<Task> tasks{Task::PersonDetection, Task::GazeTarget,
                                         Task::GazeObject, Task::GazeInOut};
    return tasks;
}

bool is_valid(const ImageSize& s) { return s.width >= 1 && s.height >= 1; }

bool is_valid(const PixelBox& b) {
    return finite(b.x1) && finite(b.y1) && finite(b.x2) && finite(b.y2) && b.x1 <= b.x2 &&
           b.y1 <= b.y2;
}

bool is_valid(const NormBox& b) {
    auto in_range = [](int v) { return v >= 0 && v <= kMaxNormBin; };
    return in_range(b.x1) && in_range(b.y1) && in_range(b.x2) && in_range(b.y2) &&
           b.x1 <= b.x2 && b.y1 <= b.y2;
}

bool is_valid(const GazePoint& p) {
    return finite(p.x) && finite(p.y) && p.x >= 0 && p.x <= 1 && p.y >= 0 && p.y <= 1;
}

void validate(const ImageSize& s) {
    if (!is_valid(s))
        throw InvalidInput("image size must be positive, got " + std::to_string(s.width) + "x" +
                           std::to_string(s.height));
}

void validate(const PixelBox& b) {
    if (!is_valid(b)) throw InvalidInput("pixel box must be finite with x1<=x2 and y1<=y2");
}

void validate(const NormBox& b) {
    if (!is_valid(b)) throw InvalidInput("normalized box must be ordered bins in [0,999]");
}

void validate(const GazePoint& p) {
    if (!is_valid(p)) throw InvalidInput("gaze point must lie in [0,1]^2");
}

void validate(const Detection& d) {
    validate(d.bbox);
    if (d.class_label.empty()) throw InvalidInput("detection class label is empty");
    if (!(d.score >= 0.0 && d.score <= 1.0))
        throw InvalidInput("detection score must lie in [0,1]");
}

PixelBox clamp_to_image(const PixelBox& b, const ImageSize& size) {
    const double w = size.width, h = size.height;
    return {std::clamp(b.x1, 0.0, w), std::clamp(b.y1, 0.0, h), std::clamp(b.x2, 0.0, w),
            std::clamp(b.y2, 0.0, h)};
}

bool within_image(const PixelBox& b, const ImageSize& size) {
    return b.x1 >= 0 && b.y1 >= 0 && b.x2 <= size.width && b.y2 <= size.height;
}

int norm_coord(double v, double extent) {
    if (!finite(v) || !finite(extent) || extent <= 0)
        throw InvalidInput("norm_coord needs finite v and positive extent");
    const double scaled = std::floor(v / extent * kNormBins);
    return static_cast<int>(std::clamp(scaled, 0.0, static_cast<double>(kMaxNormBin)));
}

double denorm_coord(int bin, double extent) {
    if (bin < 0 || bin > kMaxNormBin)
        throw InvalidInput("bin " + std::to_string(bin) + " outside [0,999]");
    return (bin + 0.5) / kNormBins * extent;
}

NormBox norm_box(const PixelBox& b, const ImageSize& size) {
    validate(b);
    validate(size);
    return {norm_coord(b.x1, size.width), norm_coord(b.y1, size.height),
            norm_coord(b.x2, size.width), norm_coord(b.y2, size.height)};
}

PixelBox denorm_box(const NormBox& b, const ImageSize& size) {
    validate(b);
    return {denorm_coord(b.x1, size.width), denorm_coord(b.y1, size.height),
            denorm_coord(b.x2, size.width), denorm_coord(b.y2, size.height)};
}

PixelBox bin_extent(const NormBox& b) {
    return {static_cast<double>(b.x1), static_cast<double>(b.y1), b.x2 + 1.0, b.y2 + 1.0};
}

GazePoint centroid(const std::vector<GazePoint>& points) {
    if (points.empty()) throw InvalidInput("centroid of an empty point set");
    double sx = 0, sy = 0;
    for (const auto& p : points) {
        sx += p.x;
        sy += p.y;
    }
    const auto n = static_cast<double>(points.size());
    return {sx / n, sy / n};
}

GazePoint box_center_normalized(const PixelBox& b, const ImageSize& size) {
    return {std::clamp((b.x1 + b.x2) / 2.0 / size.width, 0.0, 1.0),
            std::clamp((b.y1 + b.y2) / 2.0 / size.height, 0.0, 1.0)};
}

}  // namespace gazekit
