#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "gazekit/core.hpp"

namespace gazekit {

enum class TieBreak { HighestScore, FirstIndex };

struct AssignConfig {
    // Half-width of the gaze box in pixels; unset means 2% of the image diagonal.
    std::optional<double> gaze_box_halfwidth;
    TieBreak tie_break = TieBreak::HighestScore;
    // Best IoU must be strictly greater than this to assign anything.
    double min_iou = 0.0;
};

void validate(const AssignConfig& cfg);

/// Intersection over union; 0 when the union has zero area.
double iou(const PixelBox& a, const PixelBox& b);

double gaze_box_halfwidth(const ImageSize& size, const AssignConfig& cfg);

/// Pixel box of the configured half-width centered on the gaze point.
PixelBox gaze_pixel_box(const GazePoint& g, const ImageSize& size, const AssignConfig& cfg);

/// Index of the detection overlapping the gaze box most, or nullopt when
/// the best overlap does not exceed cfg.min_iou.
std::optional<std::size_t> assign_gazed_object_index(const GazePoint& g, const ImageSize& size,
                                                     std::span<const Detection> detections,
                                                     const AssignConfig& cfg = {});

std::optional<Detection> assign_gazed_object(const GazePoint& g, const ImageSize& size,
                                             std::span<const Detection> detections,
                                             const AssignConfig& cfg = {});

}  // namespace gazekit
