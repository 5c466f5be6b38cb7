#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "gazekit/core.hpp"

namespace gazekit {

/// Dense row-major H x W raster.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(checked(width)) * static_cast<std::size_t>(checked(height)),
                fill) {}
    Grid(int width, int height, std::vector<T> values)
        : width_(checked(width)), height_(checked(height)), data_(std::move(values)) {
        if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw InvalidInput("grid value count does not match its dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    ImageSize size() const { return {width_, height_}; }
    std::size_t count() const { return data_.size(); }

    T& at(int x, int y) { return data_[index(x, y)]; }
    const T& at(int x, int y) const { return data_[index(x, y)]; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    bool operator==(const Grid&) const = default;

private:
    static int checked(int extent) {
        if (extent < 0) throw InvalidInput("grid extent must be non-negative");
        return extent;
    }
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

}  // namespace gazekit
