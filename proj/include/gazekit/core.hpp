#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gazekit {

// Error taxonomy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

// A metric that has no defined value for the given data (e.g. AUC with no
// negatives, angle with a zero-length gaze vector).
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

class MalformedResponse : public Error {
public:
    MalformedResponse(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Number of normalized coordinate bins per axis; boxes live in [0, kNormBins).
inline constexpr int kNormBins = 1000;
inline constexpr int kMaxNormBin = kNormBins - 1;

struct ImageSize {
    int width = 1;
    int height = 1;

    bool operator==(const ImageSize&) const = default;
};

/// Axis-aligned box in continuous pixel coordinates, origin top-left.
struct PixelBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }

    bool operator==(const PixelBox&) const = default;
};

/// Box quantized to integer bins in [0, 999] on both axes.
struct NormBox {
    int x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    bool operator==(const NormBox&) const = default;
};

/// Point in normalized image coordinates, [0,1] on both axes.
struct GazePoint {
    double x = 0, y = 0;

    bool operator==(const GazePoint&) const = default;
};

struct Detection {
    PixelBox bbox;
    std::string class_label;
    double score = 1.0;

    bool operator==(const Detection&) const = default;
};

struct AnnotatedSample {
    std::string sample_id;
    std::string image_path;
    std::optional<std::string> depth_path;
    std::optional<std::string> hha_path;
    ImageSize image_size;
    PixelBox head_box;
    GazePoint eye_point;
    std::vector<GazePoint> gaze_points;  // one per annotator, at most 10
    bool in_frame = true;
    std::optional<Detection> gazed_object;

    bool operator==(const AnnotatedSample&) const = default;
};

inline constexpr std::size_t kMaxAnnotators = 10;

enum class Task { PersonDetection, GazeTarget, GazeObject, GazeInOut };

std::string_view task_name(Task task);
/// Accepts the snake_case names produced by task_name.
Task parse_task(std::string_view name);
const std::vector<Task>& all_tasks();

struct Prediction {
    std::string sample_id;
    Task task = Task::GazeTarget;
    std::vector<NormBox> boxes;
    std::optional<std::string> class_label;
    bool out_of_frame = false;
    std::optional<double> out_score;
    // Detection confidence used to rank object predictions; 1.0 when absent.
    std::optional<double> confidence;
    // Set when the parser had to clamp or reorder coordinates.
    bool clamped = false;
    std::string raw_text;

    bool operator==(const Prediction&) const = default;
};

// --- validation ---------------------------------------------------------

bool is_valid(const ImageSize& s);
bool is_valid(const PixelBox& b);
bool is_valid(const NormBox& b);
bool is_valid(const GazePoint& p);

void validate(const ImageSize& s);
void validate(const PixelBox& b);
void validate(const NormBox& b);
void validate(const GazePoint& p);
void validate(const Detection& d);

PixelBox clamp_to_image(const PixelBox& b, const ImageSize& size);
bool within_image(const PixelBox& b, const ImageSize& size);

// --- coordinate conversion ----------------------------------------------

/// floor(v / extent * 1000) clamped to [0, 999].
int norm_coord(double v, double extent);

/// Inverse of norm_coord at the bin center: (bin + 0.5) / 1000 * extent.
double denorm_coord(int bin, double extent);

NormBox norm_box(const PixelBox& b, const ImageSize& size);
PixelBox denorm_box(const NormBox& b, const ImageSize& size);

/// Bin-space box covering the inclusive bin range, i.e. [x1, x2 + 1).
/// Gives every NormBox a positive area so box overlap stays defined.
PixelBox bin_extent(const NormBox& b);

GazePoint centroid(const std::vector<GazePoint>& points);
GazePoint box_center_normalized(const PixelBox& b, const ImageSize& size);

}  // namespace gazekit
