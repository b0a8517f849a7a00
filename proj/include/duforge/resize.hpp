#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "duforge/image.hpp"

namespace duforge {

// Catmull-Rom cubic (a = -0.5).
inline double catmull_rom_weight(double x) {
    constexpr double a = -0.5;
    x = std::fabs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return a * (((x - 5.0) * x + 8.0) * x - 4.0);
    return 0.0;
}

namespace detail {

struct CubicPhase {
    int base;       // index of the second of the four source taps
    double w[4];
};

// Pixel-center alignment: src = (dst + 0.5) * scale - 0.5.
inline std::vector<CubicPhase> cubic_phases(int src_n, int dst_n) {
    double scale = static_cast<double>(src_n) / dst_n;
    std::vector<CubicPhase> ph(dst_n);
    for (int i = 0; i < dst_n; ++i) {
        double s = (i + 0.5) * scale - 0.5;
        double fl = std::floor(s);
        ph[i].base = static_cast<int>(fl);
        double f = s - fl;
        ph[i].w[0] = catmull_rom_weight(f + 1.0);
        ph[i].w[1] = catmull_rom_weight(f);
        ph[i].w[2] = catmull_rom_weight(f - 1.0);
        ph[i].w[3] = catmull_rom_weight(f - 2.0);
    }
    return ph;
}

inline int clamp_index(int i, int n) {
    return i < 0 ? 0 : (i >= n ? n - 1 : i);
}

} // namespace detail

// Separable Catmull-Rom resampling with edge-clamped indexing. Works for both
// directions (the 4-tap interpolator is applied at the output grid's phase
// either way). Output is clamped since the negative lobes can overshoot.
inline Image resize_bicubic(const Image& img, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0)
        throw std::invalid_argument("resize_bicubic: non-positive target dims");

    auto px = detail::cubic_phases(img.width, out_w);
    auto py = detail::cubic_phases(img.height, out_h);

    // Horizontal pass at source height.
    Image mid(out_w, img.height, img.encoding);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const auto& p = px[x];
            double acc[3] = {0.0, 0.0, 0.0};
            for (int k = 0; k < 4; ++k) {
                int xx = detail::clamp_index(p.base - 1 + k, img.width);
                for (int c = 0; c < 3; ++c) acc[c] += p.w[k] * img.at(xx, y, c);
            }
            for (int c = 0; c < 3; ++c) mid.at(x, y, c) = acc[c];
        }
    }

    Image out(out_w, out_h, img.encoding);
    for (int y = 0; y < out_h; ++y) {
        const auto& p = py[y];
        for (int x = 0; x < out_w; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            for (int k = 0; k < 4; ++k) {
                int yy = detail::clamp_index(p.base - 1 + k, img.height);
                for (int c = 0; c < 3; ++c) acc[c] += p.w[k] * mid.at(x, yy, c);
            }
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = clamp01(acc[c]);
        }
    }
    return out;
}

} // namespace duforge
