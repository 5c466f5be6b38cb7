#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gazekit/grid.hpp"

namespace gazekit {

/// Single-channel depth raster. Values are non-negative and finite in
/// arbitrary units; both sides must be at least 3 pixels for the Sobel stencil.
class DepthMap {
public:
    DepthMap(int width, int height, std::vector<double> values);
    explicit DepthMap(Grid<double> grid);

    int width() const { return grid_.width(); }
    int height() const { return grid_.height(); }
    ImageSize size() const { return grid_.size(); }
    double at(int x, int y) const { return grid_.at(x, y); }
    const Grid<double>& grid() const { return grid_; }

    bool operator==(const DepthMap&) const = default;

private:
    Grid<double> grid_;
};

using Channel = Grid<double>;
using Channel8 = Grid<std::uint8_t>;

struct Normal {
    double x = 0, y = 0, z = 1;
};
using NormalField = Grid<Normal>;

struct HhaImage {
    Channel8 disparity;
    Channel8 height;
    Channel8 angle;

    ImageSize size() const { return disparity.size(); }
    bool operator==(const HhaImage&) const = default;
};

struct HhaConfig {
    double rescale_lo = 1.0;
    double rescale_hi = 10.0;
    double epsilon = 1e-6;
    std::uint8_t constant_channel_value = 0;
};

void validate(const HhaConfig& cfg);

/// Affine map taking min(values) to lo and max(values) to hi. A constant
/// input maps entirely to lo.
std::vector<double> normalize_range(std::span<const double> values, double lo, double hi);
Channel normalize_range(const Channel& grid, double lo, double hi);

DepthMap rescale_depth(const DepthMap& depth, const HhaConfig& cfg = {});

/// Inverse depth (guarded by epsilon) stretched to [0, 255].
Channel disparity_channel(const DepthMap& rescaled, const HhaConfig& cfg = {});

/// Row ramp y / H * 255.
Channel height_channel(ImageSize size);

struct Gradients {
    Channel gx;  // horizontal (column direction)
    Channel gy;  // vertical (row direction)
};

/// 3x3 Sobel derivatives with edge-replicated borders.
Gradients sobel_gradients(const Grid<double>& depth);
inline Gradients sobel_gradients(const DepthMap& depth) { return sobel_gradients(depth.grid()); }

/// Unit normals of (-gx, -gy, 1).
NormalField surface_normals(const Channel& gx, const Channel& gy);

/// Angle to the view axis (0,0,1), stretched to [0, 255].
Channel angle_channel(const NormalField& normals);

/// Round-half-up to 8 bits, clamped to [0, 255].
Channel8 quantize(const Channel& channel);

HhaImage encode_hha(const DepthMap& depth, const HhaConfig& cfg = {});

}  // namespace gazekit
