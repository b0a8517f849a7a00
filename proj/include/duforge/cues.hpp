#pragma once

#include <cmath>

#include "duforge/fft.hpp"
#include "duforge/image.hpp"
#include "duforge/kernel.hpp"

namespace duforge {

// 3x3 Sobel magnitude of the luma plane with reflected borders, normalized by
// the maximum response (guarded for flat images), replicated to 3 channels.
inline Image sobel_edge(const Image& img) {
    std::vector<double> luma = luminance_plane(img);
    int w = img.width, h = img.height;
    std::vector<double> mag(luma.size());
    double peak = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            auto at = [&](int dx, int dy) {
                int xx = detail::reflect_index(x + dx, w);
                int yy = detail::reflect_index(y + dy, h);
                return luma[static_cast<size_t>(yy) * w + xx];
            };
            double gx = -at(-1, -1) - 2.0 * at(-1, 0) - at(-1, 1) +
                        at(1, -1) + 2.0 * at(1, 0) + at(1, 1);
            double gy = -at(-1, -1) - 2.0 * at(0, -1) - at(1, -1) +
                        at(-1, 1) + 2.0 * at(0, 1) + at(1, 1);
            double m = std::sqrt(gx * gx + gy * gy);
            mag[static_cast<size_t>(y) * w + x] = m;
            peak = std::max(peak, m);
        }
    }
    Image out(w, h, Encoding::Linear);
    double norm = 1.0 / std::max(peak, 1e-9);
    for (size_t i = 0; i < mag.size(); ++i) {
        double v = clamp01(mag[i] * norm);
        out.data[i * 3] = out.data[i * 3 + 1] = out.data[i * 3 + 2] = v;
    }
    return out;
}

// The composite input triple: the degraded image, its centered log-amplitude
// spectrum, and its edge map, all at the degraded image's resolution.
struct CompositeInput {
    Image degraded;
    Image fft;
    Image edge;
};

inline CompositeInput build_composite(const Image& degraded) {
    return CompositeInput{degraded, fft2_log_amplitude(degraded), sobel_edge(degraded)};
}

} // namespace duforge
