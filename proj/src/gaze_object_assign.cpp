#include "gazekit/gaze_object_assign.hpp"

#include <algorithm>
#include <cmath>

namespace gazekit {

void validate(const AssignConfig& cfg) {
    if (cfg.gaze_box_halfwidth && !(*cfg.gaze_box_halfwidth > 0))
        throw InvalidInput("gaze_box_halfwidth must be positive");
    if (!(cfg.min_iou >= 0.0 && cfg.min_iou < 1.0)) throw InvalidInput("min_iou must lie in [0,1)");
}

double iou(const PixelBox& a, const PixelBox& b) {
    const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    const double inter = (iw > 0 && ih > 0) ? iw * ih : 0.0;
    const double uni = a.area() + b.area() - inter;
    if (!(uni > 0)) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double gaze_box_halfwidth(const ImageSize& size, const AssignConfig& cfg) {
    if (cfg.gaze_box_halfwidth) return *cfg.gaze_box_halfwidth;
    return 0.02 * std::hypot(static_cast<double>(size.width), static_cast<double>(size.height));
}

PixelBox gaze_pixel_box(const GazePoint& g, const ImageSize& size, const AssignConfig& cfg) {
    validate(g);
    validate(size);
    const double hw = gaze_box_halfwidth(size, cfg);
    const double cx = g.x * size.width, cy = g.y * size.height;
    return {cx - hw, cy - hw, cx + hw, cy + hw};
}

std::optional<std::size_t> assign_gazed_object_index(const GazePoint& g, const ImageSize& size,
                                                     std::span<const Detection> detections,
                                                     const AssignConfig& cfg) {
    validate(cfg);
    const PixelBox gaze = gaze_pixel_box(g, size, cfg);
    std::optional<std::size_t> best;
    double best_iou = 0.0;
    for (std::size_t i = 0; i < detections.size(); ++i) {
        const double v = iou(gaze, detections[i].bbox);
        if (!best || v > best_iou) {
            best = i;
            best_iou = v;
        } else if (v == best_iou && cfg.tie_break == TieBreak::HighestScore &&
                   detections[i].score > detections[*best].score) {
            best = i;
        }
    }
    if (!best || !(best_iou > cfg.min_iou)) return std::nullopt;
    return best;
}

std::optional<Detection> assign_gazed_object(const GazePoint& g, const ImageSize& size,
                                             std::span<const Detection> detections,
                                             const AssignConfig& cfg) {
    const auto idx = assign_gazed_object_index(g, size, detections, cfg);
    if (!idx) return std::nullopt;
    return detections[*idx];
}

}  // namespace gazekit
