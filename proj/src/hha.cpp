#include "gazekit/hha.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gazekit {

namespace {

void require_finite(std::span<const double> values) {
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidInput("non-finite value in grid");
}

bool is_constant(std::span<const double> values) {
    if (values.empty()) return true;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *lo == *hi;
}

Grid<double> validated_depth(Grid<double> grid) {
    if (grid.width() < 3 || grid.height() < 3)
        throw InvalidInput("depth map must be at least 3x3, got " + std::to_string(grid.width()) +
                           "x" + std::to_string(grid.height()));
    for (double v : grid.values())
        if (!std::isfinite(v) || v < 0)
            throw InvalidInput("depth values must be finite and non-negative");
    return grid;
}

// Copy with a one-pixel replicated border so the stencil never branches.
Grid<double> pad_replicate(const Grid<double>& src) {
    const int w = src.width(), h = src.height();
    Grid<double> out(w + 2, h + 2);
    for (int y = 0; y < h + 2; ++y) {
        const int sy = std::clamp(y - 1, 0, h - 1);
        for (int x = 0; x < w + 2; ++x) out.at(x, y) = src.at(std::clamp(x - 1, 0, w - 1), sy);
    }
    return out;
}

}  // namespace

DepthMap::DepthMap(int width, int height, std::vector<double> values)
    : grid_(validated_depth(Grid<double>(width, height, std::move(values)))) {}

DepthMap::DepthMap(Grid<double> grid) : grid_(validated_depth(std::move(grid))) {}

void validate(const HhaConfig& cfg) {
    if (!(cfg.rescale_lo < cfg.rescale_hi)) throw InvalidInput("rescale_lo must be < rescale_hi");
    if (!(cfg.epsilon > 0)) throw InvalidInput("epsilon must be positive");
}

std::vector<double> normalize_range(std::span<const double> values, double lo, double hi) {
    if (!(lo < hi)) throw InvalidInput("normalize_range needs lo < hi");
    require_finite(values);
    std::vector<double> out(values.size(), lo);
    if (is_constant(values)) return out;
    const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
    const double mn = *mn_it, span = *mx_it - *mn_it;
    // Clamp: (v - mn) * k / span can land one ulp past hi.
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = std::clamp(lo + (values[i] - mn) * (hi - lo) / span, lo, hi);
    return out;
}

Channel normalize_range(const Channel& grid, double lo, double hi) {
    return Channel(grid.width(), grid.height(), normalize_range(grid.values(), lo, hi));
}

DepthMap rescale_depth(const DepthMap& depth, const HhaConfig& cfg) {
    validate(cfg);
    return DepthMap(normalize_range(depth.grid(), cfg.rescale_lo, cfg.rescale_hi));
}

Channel disparity_channel(const DepthMap& rescaled, const HhaConfig& cfg) {
    validate(cfg);
    Channel inverse(rescaled.width(), rescaled.height());
    auto src = rescaled.grid().values();
    auto dst = inverse.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = 1.0 / std::max(src[i], cfg.epsilon);
    if (is_constant(dst)) return Channel(inverse.width(), inverse.height(), cfg.constant_channel_value);
    return normalize_range(inverse, 0.0, 255.0);
}

Channel height_channel(ImageSize size) {
    validate(size);
    Channel out(size.width, size.height);
    for (int y = 0; y < size.height; ++y) {
        const double v = static_cast<double>(y) / size.height * 255.0;
        for (int x = 0; x < size.width; ++x) out.at(x, y) = v;
    }
    return out;
}

Gradients sobel_gradients(const Grid<double>& depth) {
    const int w = depth.width(), h = depth.height();
    if (w < 3 || h < 3) throw InvalidInput("sobel_gradients needs at least a 3x3 grid");
    const Grid<double> p = pad_replicate(depth);
    Gradients g{Channel(w, h), Channel(w, h)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // Padded coordinates: (x, y) is the top-left of the 3x3 window.
            const double a00 = p.at(x, y), a01 = p.at(x + 1, y), a02 = p.at(x + 2, y);
            const double a10 = p.at(x, y + 1), a12 = p.at(x + 2, y + 1);
            const double a20 = p.at(x, y + 2), a21 = p.at(x + 1, y + 2), a22 = p.at(x + 2, y + 2);
            // Terms are summed in kernel row-major order.
            g.gx.at(x, y) = -a00 + a02 - 2.0 * a10 + 2.0 * a12 - a20 + a22;
            g.gy.at(x, y) = -a00 - 2.0 * a01 - a02 + a20 + 2.0 * a21 + a22;
        }
    }
    return g;
}

NormalField surface_normals(const Channel& gx, const Channel& gy) {
    if (gx.size() != gy.size()) throw InvalidInput("gradient grids differ in size");
    NormalField out(gx.width(), gx.height());
    auto sx = gx.values(), sy = gy.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const double nx = -sx[i], ny = -sy[i];
        const double norm = std::hypot(nx, ny, 1.0);
        dst[i] = {nx / norm, ny / norm, 1.0 / norm};
    }
    return out;
}

Channel angle_channel(const NormalField& normals) {
    Channel angles(normals.width(), normals.height());
    auto src = normals.values();
    auto dst = angles.values();
    // n . (0,0,1) reduces to the z component.
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::acos(std::clamp(src[i].z, -1.0, 1.0));
    return normalize_range(angles, 0.0, 255.0);
}

Channel8 quantize(const Channel& channel) {
    Channel8 out(channel.width(), channel.height());
    auto src = channel.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = static_cast<std::uint8_t>(std::clamp(std::floor(src[i] + 0.5), 0.0, 255.0));
    return out;
}

HhaImage encode_hha(const DepthMap& depth, const HhaConfig& cfg) {
    const DepthMap rescaled = rescale_depth(depth, cfg);
    const Gradients grad = sobel_gradients(rescaled);
    Channel angle = angle_channel(surface_normals(grad.gx, grad.gy));
    if (is_constant(angle.values()))
        angle = Channel(angle.width(), angle.height(), cfg.constant_channel_value);
    return {quantize(disparity_channel(rescaled, cfg)), quantize(height_channel(depth.size())),
            quantize(angle)};
}

}  // namespace gazekit
