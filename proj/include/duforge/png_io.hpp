#pragma once

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "duforge/image.hpp"

namespace duforge {

struct PngError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace detail

// Accepts 8- and 16-bit RGB or RGBA files; alpha is dropped. Values are
// normalized by the full code range of the source depth. Anything else
// (palette, gray, interlaced oddities aside) is a decode error.
inline Image load_png(const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw PngError("load_png: cannot open " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
        throw PngError("load_png: not a PNG file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw PngError("load_png: png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw PngError("load_png: png_create_info_struct failed");
    }

    std::vector<png_bytep> row_ptrs;
    std::vector<png_byte> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw PngError("load_png: decode failure in " + path);
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_uint_32 w = 0, h = 0;
    int bit_depth = 0, color_type = 0;
    png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);

    if (color_type != PNG_COLOR_TYPE_RGB && color_type != PNG_COLOR_TYPE_RGB_ALPHA) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw PngError("load_png: unsupported color type (need RGB or RGBA): " + path);
    }
    if (bit_depth != 8 && bit_depth != 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw PngError("load_png: unsupported bit depth (need 8 or 16): " + path);
    }

    if (color_type == PNG_COLOR_TYPE_RGB_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    size_t rowbytes = png_get_rowbytes(png, info);
    rows.resize(rowbytes * h);
    row_ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = rows.data() + y * rowbytes;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(static_cast<int>(w), static_cast<int>(h), Encoding::Srgb);
    if (bit_depth == 8) {
        for (png_uint_32 y = 0; y < h; ++y) {
            const png_byte* r = rows.data() + y * rowbytes;
            for (png_uint_32 x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c)
                    img.at(static_cast<int>(x), static_cast<int>(y), c) =
                        r[x * 3 + c] / 255.0;
        }
    } else {
        // 16-bit samples are big-endian on the wire.
        for (png_uint_32 y = 0; y < h; ++y) {
            const png_byte* r = rows.data() + y * rowbytes;
            for (png_uint_32 x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    unsigned hi = r[(x * 3 + c) * 2];
                    unsigned lo = r[(x * 3 + c) * 2 + 1];
                    img.at(static_cast<int>(x), static_cast<int>(y), c) =
                        ((hi << 8) | lo) / 65535.0;
                }
            }
        }
    }
    return img;
}

// 8-bit RGB output; each channel is clamped then rounded half away from zero,
// so a reload differs from the saved values by at most 1/510 per channel.
inline void save_png(const Image& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0 || img.data.size() != img.pixel_count() * 3)
        throw PngError("save_png: malformed image");

    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw PngError("save_png: cannot open " + path + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw PngError("save_png: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw PngError("save_png: png_create_info_struct failed");
    }

    std::vector<png_byte> rows;
    std::vector<png_bytep> row_ptrs;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw PngError("save_png: encode failure for " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    rows.resize(static_cast<size_t>(img.width) * img.height * 3);
    row_ptrs.resize(img.height);
    for (int y = 0; y < img.height; ++y) {
        png_byte* r = rows.data() + static_cast<size_t>(y) * img.width * 3;
        row_ptrs[y] = r;
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                r[x * 3 + c] = static_cast<png_byte>(
                    std::lround(clamp01(img.at(x, y, c)) * 255.0));
    }
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// In-memory 8-bit quantization: exactly what save_png + load_png would yield.
inline Image quantize_to_8bit(const Image& img) {
    Image out = img;
    for (double& v : out.data)
        v = std::lround(clamp01(v) * 255.0) / 255.0;
    return out;
}

} // namespace duforge
