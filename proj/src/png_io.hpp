#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace gazekit::png {

struct Raster {
    int width = 0;
    int height = 0;
    int channels = 0;   // 1 = gray, 3 = RGB
    int bit_depth = 0;  // 8 or 16
    std::vector<std::uint16_t> samples;  // row-major, interleaved
};

Raster read(const std::filesystem::path& path);
void write(const Raster& raster, const std::filesystem::path& path);

}  // namespace gazekit::png
