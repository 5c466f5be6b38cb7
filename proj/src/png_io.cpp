#include "png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <string>

#include "gazekit/core.hpp"

namespace gazekit::png {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open(const std::filesystem::path& path, const char* mode) {
    File f(std::fopen(path.c_str(), mode));
    if (!f) throw FormatError("cannot open " + path.string());
    return f;
}

[[noreturn]] void on_error(png_structp png, png_const_charp msg) {
    auto* what = static_cast<std::string*>(png_get_error_ptr(png));
    if (what) *what = msg;
    png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

std::string layout(png_byte color_type, int bit_depth) {
    std::string kind = color_type == PNG_COLOR_TYPE_GRAY         ? "gray"
                       : color_type == PNG_COLOR_TYPE_RGB        ? "rgb"
                       : color_type == PNG_COLOR_TYPE_RGBA       ? "rgba"
                       : color_type == PNG_COLOR_TYPE_GRAY_ALPHA ? "gray+alpha"
                       : color_type == PNG_COLOR_TYPE_PALETTE    ? "palette"
                                                                 : "unknown";
    return kind + "/" + std::to_string(bit_depth) + "-bit";
}

}  // namespace

// libpng reports errors through longjmp, so no objects with non-trivial
// destructors may be created between setjmp and the end of the protected block.
Raster read(const std::filesystem::path& path) {
    File f = open(path, "rb");
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_error, on_warning);
    if (!png) throw FormatError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    Raster r;
    std::vector<png_bytep> rows;
    std::vector<png_byte> buffer;
    volatile bool failed = false;
    if (setjmp(png_jmpbuf(png))) {
        failed = true;
    } else {
        png_init_io(png, f.get());
        png_read_info(png, info);
        const png_byte color = png_get_color_type(png, info);
        const int depth = png_get_bit_depth(png, info);
        if ((color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB) ||
            (depth != 8 && depth != 16)) {
            err = "unsupported PNG layout " + layout(color, depth);
            png_longjmp(png, 1);
        }
        r.width = static_cast<int>(png_get_image_width(png, info));
        r.height = static_cast<int>(png_get_image_height(png, info));
        r.channels = color == PNG_COLOR_TYPE_GRAY ? 1 : 3;
        r.bit_depth = depth;
        if (depth == 16) png_set_swap(png);  // host little-endian samples
        png_read_update_info(png, info);
        const std::size_t stride = png_get_rowbytes(png, info);
        buffer.resize(stride * static_cast<std::size_t>(r.height));
        rows.resize(static_cast<std::size_t>(r.height));
        for (int y = 0; y < r.height; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + stride * y;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (failed) throw FormatError(path.string() + ": " + (err.empty() ? "invalid PNG" : err));

    const std::size_t n = static_cast<std::size_t>(r.width) * r.height * r.channels;
    r.samples.resize(n);
    if (r.bit_depth == 16) {
        for (std::size_t i = 0; i < n; ++i)
            r.samples[i] = static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8));
    } else {
        for (std::size_t i = 0; i < n; ++i) r.samples[i] = buffer[i];
    }
    return r;
}

void write(const Raster& r, const std::filesystem::path& path) {
    if (r.width <= 0 || r.height <= 0 || (r.channels != 1 && r.channels != 3) ||
        (r.bit_depth != 8 && r.bit_depth != 16) ||
        r.samples.size() != static_cast<std::size_t>(r.width) * r.height * r.channels)
        throw InvalidInput("inconsistent raster for PNG output");

    const std::size_t bytes = r.bit_depth / 8;
    const std::size_t stride = static_cast<std::size_t>(r.width) * r.channels * bytes;
    std::vector<png_byte> buffer(stride * static_cast<std::size_t>(r.height));
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
        if (bytes == 2) {  // PNG stores big-endian samples
            buffer[2 * i] = static_cast<png_byte>(r.samples[i] >> 8);
            buffer[2 * i + 1] = static_cast<png_byte>(r.samples[i] & 0xff);
        } else {
            buffer[i] = static_cast<png_byte>(r.samples[i]);
        }
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(r.height));
    for (int y = 0; y < r.height; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + stride * y;

    File f = open(path, "wb");
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_error, on_warning);
    if (!png) throw FormatError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    volatile bool failed = false;
    if (setjmp(png_jmpbuf(png))) {
        failed = true;
    } else {
        png_init_io(png, f.get());
        png_set_IHDR(png, info, static_cast<png_uint_32>(r.width), static_cast<png_uint_32>(r.height),
                     r.bit_depth, r.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
    }
    png_destroy_write_struct(&png, &info);
    if (failed) throw FormatError(path.string() + ": " + (err.empty() ? "PNG write failed" : err));
}

}  // namespace gazekit::png
