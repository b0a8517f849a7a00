#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "duforge/image.hpp"

namespace duforge {

enum class Boundary { Reflect, Periodic };

// Odd-sided square tap grid. Taps are stored row-major; radius r means a
// (2r+1)^2 grid centered on the target pixel.
struct Kernel2D {
    int radius = 0;
    std::vector<double> taps;

    Kernel2D() = default;
    Kernel2D(int r, std::vector<double> t) : radius(r), taps(std::move(t)) {
        int side = 2 * r + 1;
        if (r < 0 || taps.size() != static_cast<size_t>(side) * side)
            throw std::invalid_argument("Kernel2D: tap count does not match radius");
    }

    int side() const { return 2 * radius + 1; }
    double tap(int dx, int dy) const {
        return taps[static_cast<size_t>(dy + radius) * side() + (dx + radius)];
    }
};

namespace detail {

// Symmetric reflection that includes the edge sample: -1 -> 0, n -> n-1.
inline int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

inline int wrap_index(int i, int n) {
    i %= n;
    return i < 0 ? i + n : i;
}

inline int map_index(int i, int n, Boundary b) {
    return b == Boundary::Reflect ? reflect_index(i, n) : wrap_index(i, n);
}

inline std::vector<double> gaussian_taps_1d(double sigma, int radius) {
    std::vector<double> t(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        t[i + radius] = v;
        sum += v;
    }
    for (double& v : t) v /= sum;
    return t;
}

} // namespace detail

inline int gaussian_radius(double sigma) {
    return static_cast<int>(std::ceil(3.0 * sigma));
}

// Isotropic Gaussian sampled at integer offsets, normalized to unit sum.
// radius = ceil(3*sigma), so sigma=1 yields a 7x7 grid.
inline Kernel2D gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
    int r = gaussian_radius(sigma);
    int side = 2 * r + 1;
    std::vector<double> taps(static_cast<size_t>(side) * side);
    double sum = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            double v = std::exp(-(static_cast<double>(dx) * dx + static_cast<double>(dy) * dy) /
                                (2.0 * sigma * sigma));
            taps[static_cast<size_t>(dy + r) * side + (dx + r)] = v;
            sum += v;
        }
    }
    for (double& v : taps) v /= sum;
    return Kernel2D(r, std::move(taps));
}

// Direct 2-D correlation with the chosen boundary extension, clamped to [0,1].
// Symmetric kernels make correlation and convolution identical, which is the
// only way this gets used.
inline Image convolve(const Image& img, const Kernel2D& k, Boundary boundary) {
    Image out(img.width, img.height, img.encoding);
    int r = k.radius;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            for (int dy = -r; dy <= r; ++dy) {
                int yy = detail::map_index(y + dy, img.height, boundary);
                for (int dx = -r; dx <= r; ++dx) {
                    int xx = detail::map_index(x + dx, img.width, boundary);
                    double w = k.tap(dx, dy);
                    acc[0] += w * img.at(xx, yy, 0);
                    acc[1] += w * img.at(xx, yy, 1);
                    acc[2] += w * img.at(xx, yy, 2);
                }
            }
            out.at(x, y, 0) = clamp01(acc[0]);
            out.at(x, y, 1) = clamp01(acc[1]);
            out.at(x, y, 2) = clamp01(acc[2]);
        }
    }
    return out;
}

// Two-pass path for separable kernels; matches the direct form to roundoff
// because the 2-D Gaussian is exactly the outer product of its 1-D taps.
inline Image convolve_separable(const Image& img, const std::vector<double>& taps,
                                Boundary boundary) {
    if (taps.size() % 2 == 0 || taps.empty())
        throw std::invalid_argument("convolve_separable: taps must have odd length");
    int r = static_cast<int>(taps.size() / 2);

    Image mid(img.width, img.height, img.encoding);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            for (int d = -r; d <= r; ++d) {
                int xx = detail::map_index(x + d, img.width, boundary);
                double w = taps[d + r];
                acc[0] += w * img.at(xx, y, 0);
                acc[1] += w * img.at(xx, y, 1);
                acc[2] += w * img.at(xx, y, 2);
            }
            mid.at(x, y, 0) = acc[0];
            mid.at(x, y, 1) = acc[1];
            mid.at(x, y, 2) = acc[2];
        }
    }

    Image out(img.width, img.height, img.encoding);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            for (int d = -r; d <= r; ++d) {
                int yy = detail::map_index(y + d, img.height, boundary);
                double w = taps[d + r];
                acc[0] += w * mid.at(x, yy, 0);
                acc[1] += w * mid.at(x, yy, 1);
                acc[2] += w * mid.at(x, yy, 2);
            }
            out.at(x, y, 0) = clamp01(acc[0]);
            out.at(x, y, 1) = clamp01(acc[1]);
            out.at(x, y, 2) = clamp01(acc[2]);
        }
    }
    return out;
}

inline Image gaussian_blur(const Image& img, double sigma, Boundary boundary = Boundary::Reflect) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_blur: sigma must be positive");
    return convolve_separable(img, detail::gaussian_taps_1d(sigma, gaussian_radius(sigma)),
                              boundary);
}

} // namespace duforge
