#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace duforge {

enum class Encoding { Srgb, Linear };

// Planar-free RGB raster: row-major, interleaved, 3 channels, values in [0,1].
// The encoding flag records which domain the values live in; ops that require
// a particular domain check it and throw instead of silently converting.
struct Image {
    int width = 0;
    int height = 0;
    Encoding encoding = Encoding::Srgb;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, Encoding enc = Encoding::Srgb, double fill = 0.0)
        : width(w), height(h), encoding(enc),
          data(static_cast<size_t>(w) * h * 3, fill) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("Image: non-positive dimensions");
    }

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }

    double& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    double at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }

    bool same_dims(const Image& o) const {
        return width == o.width && height == o.height;
    }
};

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

inline void clamp_image(Image& img) {
    for (double& v : img.data) v = clamp01(v);
}

// Rec.601 luma over the stored values.
inline double luminance(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

inline std::vector<double> luminance_plane(const Image& img) {
    std::vector<double> out(img.pixel_count());
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = luminance(img.data[i * 3], img.data[i * 3 + 1], img.data[i * 3 + 2]);
    }
    return out;
}

inline double mean_intensity(const Image& img) {
    double acc = 0.0;
    for (double v : img.data) acc += v;
    return img.data.empty() ? 0.0 : acc / static_cast<double>(img.data.size());
}

inline Image mirror_horizontal(const Image& img) {
    Image out(img.width, img.height, img.encoding);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
    return out;
}

inline Image center_crop(const Image& img, int w, int h) {
    if (w <= 0 || h <= 0 || w > img.width || h > img.height)
        throw std::invalid_argument("center_crop: target exceeds source");
    int x0 = (img.width - w) / 2;
    int y0 = (img.height - h) / 2;
    Image out(w, h, img.encoding);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
    return out;
}

// Largest centered crop whose sides are multiples of `factor`.
inline Image center_crop_to_multiple(const Image& img, int factor) {
    if (factor <= 0) throw std::invalid_argument("center_crop_to_multiple: bad factor");
    int w = (img.width / factor) * factor;
    int h = (img.height / factor) * factor;
    if (w == 0 || h == 0)
        throw std::invalid_argument("center_crop_to_multiple: image smaller than factor");
    if (w == img.width && h == img.height) return img;
    return center_crop(img, w, h);
}

} // namespace duforge
