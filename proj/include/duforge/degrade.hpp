#pragma once

#include <cmath>
#include <stdexcept>

#include "duforge/color.hpp"
#include "duforge/image.hpp"
#include "duforge/kernel.hpp"
#include "duforge/resize.hpp"
#include "duforge/taxonomy.hpp"

namespace duforge {

// How many channel samples the forward clamp actually moved. Round-trip
// guarantees only hold where this stays near zero.
struct ClampStats {
    size_t clamped = 0;
    size_t total = 0;
    double fraction() const {
        return total > 0 ? static_cast<double>(clamped) / static_cast<double>(total) : 0.0;
    }
};

namespace detail {
inline double count_clamp(double v, ClampStats* stats) {
    if (stats) {
        ++stats->total;
        if (v < -1e-12 || v > 1.0 + 1e-12) ++stats->clamped;
    }
    return clamp01(v);
}
} // namespace detail

// Scattering model in the stored sRGB domain:
//   I_d = I_c * t + A * (1 - t)
// t is either one scalar or a per-pixel map matching the image dims.
inline Image apply_haze(const Image& clean, double A, const ParamValue& t,
                        ClampStats* stats = nullptr) {
    if (A < 0.6 || A > 1.0)
        throw std::invalid_argument("apply_haze: A out of [0.6, 1.0]");

    Image out(clean.width, clean.height, clean.encoding);
    if (const double* ts = std::get_if<double>(&t)) {
        if (*ts < 0.1 || *ts > 0.95)
            throw std::invalid_argument("apply_haze: t out of [0.1, 0.95]");
        double tv = *ts, air = A * (1.0 - tv);
        for (size_t i = 0; i < clean.data.size(); ++i)
            out.data[i] = detail::count_clamp(clean.data[i] * tv + air, stats);
    } else if (const ParamMap* tm = std::get_if<ParamMap>(&t)) {
        if (tm->width != clean.width || tm->height != clean.height)
            throw std::invalid_argument("apply_haze: t map dims mismatch");
        for (int y = 0; y < clean.height; ++y) {
            for (int x = 0; x < clean.width; ++x) {
                double tv = tm->at(x, y);
                if (tv < 0.1 || tv > 0.95)
                    throw std::invalid_argument("apply_haze: t map entry out of [0.1, 0.95]");
                double air = A * (1.0 - tv);
                for (int c = 0; c < 3; ++c)
                    out.at(x, y, c) = detail::count_clamp(clean.at(x, y, c) * tv + air, stats);
            }
        }
    } else {
        throw std::invalid_argument("apply_haze: t must be a scalar or a map");
    }
    return out;
}

// t = exp(-beta * d), clamped into the valid transmission window.
inline ParamMap transmission_from_depth(const ParamMap& depth, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("transmission_from_depth: beta must be positive");
    ParamMap t(depth.width, depth.height);
    for (size_t i = 0; i < depth.data.size(); ++i) {
        if (depth.data[i] < 0.0)
            throw std::invalid_argument("transmission_from_depth: negative depth");
        t.data[i] = std::clamp(std::exp(-beta * depth.data[i]), 0.1, 0.95);
    }
    return t;
}

// Sensor-chain model: linearize, mix channels through the camera matrix,
// scale by the digital gain, then re-encode with exponent 1/gamma. The
// clamp before the exponent is load-bearing: cam rows can push linear
// values slightly negative.
inline Image apply_lowlight(const Image& clean, double gamma, double gain, const Mat3& cam,
                            ClampStats* stats = nullptr) {
    if (gamma < 1.2 || gamma > 4.0)
        throw std::invalid_argument("apply_lowlight: gamma out of [1.2, 4.0]");
    if (!(gain > 0.0 && gain <= 1.0))
        throw std::invalid_argument("apply_lowlight: gain out of (0, 1]");
    if (std::fabs(cam.det()) < 1e-3)
        throw std::invalid_argument("apply_lowlight: cam matrix near-singular");

    Image lin = srgb_to_linear(clean);
    Image out(clean.width, clean.height, Encoding::Srgb);
    for (size_t p = 0; p < lin.pixel_count(); ++p) {
        double in[3] = {lin.data[p * 3], lin.data[p * 3 + 1], lin.data[p * 3 + 2]};
        double mixed[3];
        cam.apply(in, mixed);
        for (int c = 0; c < 3; ++c)
            out.data[p * 3 + c] = std::pow(detail::count_clamp(gain * mixed[c], stats), 1.0 / gamma);
    }
    return out;
}

inline Image apply_blur(const Image& clean, double sigma) {
    if (!(sigma > 0.0 && sigma <= 8.0))
        throw std::invalid_argument("apply_blur: sigma out of (0, 8]");
    return gaussian_blur(clean, sigma, Boundary::Reflect);
}

inline Image apply_lowres(const Image& clean, int scale) {
    if (scale != 2 && scale != 3 && scale != 4)
        throw std::invalid_argument("apply_lowres: scale must be 2, 3 or 4");
    if (clean.width % scale != 0 || clean.height % scale != 0)
        throw std::invalid_argument("apply_lowres: dims not divisible by scale");
    return resize_bicubic(clean, clean.width / scale, clean.height / scale);
}

// Dispatch on the spec; parameter errors from the per-type ops propagate.
inline Image degrade(const Image& clean, const DegradationSpec& spec) {
    switch (spec.type) {
        case DegradationType::Haze: {
            auto it = spec.params.find(ParamKey::Transmission);
            if (it == spec.params.end())
                throw std::invalid_argument("degrade: haze spec missing t");
            return apply_haze(clean, scalar_param(spec, ParamKey::AtmosphericLight), it->second);
        }
        case DegradationType::LowLight:
            return apply_lowlight(clean, scalar_param(spec, ParamKey::Gamma),
                                  scalar_param(spec, ParamKey::Gain),
                                  mat_param(spec, ParamKey::CamIntrinsics));
        case DegradationType::Blur:
            return apply_blur(clean, scalar_param(spec, ParamKey::Sigma));
        case DegradationType::LowRes:
            return apply_lowres(clean, snap_scale(scalar_param(spec, ParamKey::Scale)));
    }
    throw std::invalid_argument("degrade: unknown type");
}

} // namespace duforge
