#pragma once

#include <cmath>
#include <stdexcept>

#include "duforge/image.hpp"

namespace duforge {

// Piecewise sRGB transfer (IEC 61966-2-1), scalar forms.
inline double srgb_to_linear(double s) {
    if (s <= 0.04045) return s / 12.92;
    return std::pow((s + 0.055) / 1.055, 2.4);
}

inline double linear_to_srgb(double l) {
    if (l <= 0.0031308) return l * 12.92;
    return 1.055 * std::pow(l, 1.0 / 2.4) - 0.055;
}

inline Image srgb_to_linear(const Image& img) {
    if (img.encoding != Encoding::Srgb)
        throw std::invalid_argument("srgb_to_linear: image is not sRGB-encoded");
    Image out = img;
    out.encoding = Encoding::Linear;
    for (double& v : out.data) v = srgb_to_linear(clamp01(v));
    return out;
}

inline Image linear_to_srgb(const Image& img) {
    if (img.encoding != Encoding::Linear)
        throw std::invalid_argument("linear_to_srgb: image is not linear-encoded");
    Image out = img;
    out.encoding = Encoding::Srgb;
    for (double& v : out.data) v = linear_to_srgb(clamp01(v));
    return out;
}

} // namespace duforge
