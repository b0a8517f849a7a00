#pragma once

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "duforge/color.hpp"
#include "duforge/degrade.hpp"
#include "duforge/fft.hpp"
#include "duforge/image.hpp"
#include "duforge/taxonomy.hpp"

namespace duforge {

struct RestorationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RestoreOptions {
    double t_floor = 0.1;         // valid over (0, 0.5]
    double wiener_lambda = 1e-3;  // valid over [0, 1]
    bool clamp_output = true;
};

namespace detail {
inline void check_options(const RestoreOptions& opts) {
    if (!(opts.t_floor > 0.0 && opts.t_floor <= 0.5))
        throw std::invalid_argument("RestoreOptions: t_floor out of (0, 0.5]");
    if (!(opts.wiener_lambda >= 0.0 && opts.wiener_lambda <= 1.0))
        throw std::invalid_argument("RestoreOptions: wiener_lambda out of [0, 1]");
}
} // namespace detail

// Exact haze inverse with a transmission floor to keep the division stable:
//   I_c = (I_d - A * (1 - t')) / t',  t' = max(t, floor)
// Out-of-range A or t are accepted; validation belongs to the spec layer.
inline Image invert_haze(const Image& deg, double A, const ParamValue& t,
                         const RestoreOptions& opts = {}) {
    detail::check_options(opts);

    auto solve = [&](double raw_t, double v) {
        double tv = std::max(raw_t, opts.t_floor);
        double r = (v - A * (1.0 - tv)) / tv;
        return opts.clamp_output ? clamp01(r) : r;
    };

    Image out(deg.width, deg.height, deg.encoding);
    if (const double* ts = std::get_if<double>(&t)) {
        for (size_t i = 0; i < deg.data.size(); ++i) out.data[i] = solve(*ts, deg.data[i]);
    } else if (const ParamMap* tm = std::get_if<ParamMap>(&t)) {
        if (tm->width != deg.width || tm->height != deg.height)
            throw std::invalid_argument("invert_haze: t map dims mismatch");
        for (int y = 0; y < deg.height; ++y)
            for (int x = 0; x < deg.width; ++x)
                for (int c = 0; c < 3; ++c)
                    out.at(x, y, c) = solve(tm->at(x, y), deg.at(x, y, c));
    } else {
        throw std::invalid_argument("invert_haze: t must be a scalar or a map");
    }
    return out;
}

// Analytic inverse of the sensor chain: undo the display exponent, the gain,
// and the channel mixing, then return to sRGB. The clamp before the sRGB
// encode is part of the formula, not an output option.
inline Image invert_lowlight(const Image& deg, double gamma, double gain, const Mat3& cam,
                             const RestoreOptions& opts = {}) {
    detail::check_options(opts);
    if (!(gain > 0.0))
        throw std::invalid_argument("invert_lowlight: gain must be positive");

    Mat3 inv = cam.inverse();
    Image lin(deg.width, deg.height, Encoding::Linear);
    for (size_t p = 0; p < deg.pixel_count(); ++p) {
        double mixed[3];
        for (int c = 0; c < 3; ++c)
            mixed[c] = std::pow(clamp01(deg.data[p * 3 + c]), gamma) / gain;
        double rec[3];
        inv.apply(mixed, rec);
        for (int c = 0; c < 3; ++c) lin.data[p * 3 + c] = clamp01(rec[c]);
    }
    return linear_to_srgb(lin);
}

namespace detail {

// Cosine ramp toward the image mean over a band at each border. The Wiener
// step assumes a periodic signal; without this the wrap seam leaks ringing
// across the whole restoration.
inline Image edge_taper(const Image& img, int band) {
    auto ramp = [band](int i, int n) {
        double w = 1.0;
        if (i < band) w = std::min(w, 0.5 - 0.5 * std::cos(3.141592653589793 * (i + 0.5) / band));
        int j = n - 1 - i;
        if (j < band) w = std::min(w, 0.5 - 0.5 * std::cos(3.141592653589793 * (j + 0.5) / band));
        return w;
    };

    double mean[3] = {0, 0, 0};
    for (size_t p = 0; p < img.pixel_count(); ++p)
        for (int c = 0; c < 3; ++c) mean[c] += img.data[p * 3 + c];
    for (int c = 0; c < 3; ++c) mean[c] /= static_cast<double>(img.pixel_count());

    Image out = img;
    for (int y = 0; y < img.height; ++y) {
        double wy = ramp(y, img.height);
        for (int x = 0; x < img.width; ++x) {
            double w = wy * ramp(x, img.width);
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = mean[c] + w * (img.at(x, y, c) - mean[c]);
        }
    }
    return out;
}

// DFT of the blur kernel with its center tap at the origin (wrapped), padded
// to the image size.
inline std::vector<std::complex<double>> kernel_otf(const Kernel2D& k, int w, int h) {
    if (k.side() > w || k.side() > h)
        throw RestorationError("wiener: kernel larger than image");
    std::vector<double> pad(static_cast<size_t>(w) * h, 0.0);
    for (int dy = -k.radius; dy <= k.radius; ++dy) {
        int y = (dy % h + h) % h;
        for (int dx = -k.radius; dx <= k.radius; ++dx) {
            int x = (dx % w + w) % w;
            pad[static_cast<size_t>(y) * w + x] += k.tap(dx, dy);
        }
    }
    return fft2_forward(pad, w, h);
}

} // namespace detail

inline constexpr int kEdgeTaperBand = 16;

// Wiener deconvolution against the Gaussian OTF:
//   X = conj(H) * Y / (|H|^2 + lambda)
// The per-frequency gain |H|^2/(|H|^2+lambda) never exceeds 1, so the filter
// cannot amplify any band of the observation.
inline Image invert_blur_wiener(const Image& deg, double sigma, const RestoreOptions& opts = {}) {
    detail::check_options(opts);

    int w = deg.width, h = deg.height;
    auto H = detail::kernel_otf(gaussian_kernel(sigma), w, h);

    Image tapered = detail::edge_taper(deg, std::min({kEdgeTaperBand, w / 4, h / 4}));
    Image out(w, h, deg.encoding);
    std::vector<double> plane(static_cast<size_t>(w) * h);
    for (int c = 0; c < 3; ++c) {
        for (size_t p = 0; p < plane.size(); ++p) plane[p] = tapered.data[p * 3 + c];
        auto Y = fft2_forward(plane, w, h);
        for (size_t i = 0; i < Y.size(); ++i) {
            double denom = std::norm(H[i]) + opts.wiener_lambda;
            if (denom <= 0.0) denom = 1e-300;
            Y[i] = std::conj(H[i]) * Y[i] / denom;
        }
        auto x = fft2_inverse(Y, w, h);
        for (size_t p = 0; p < plane.size(); ++p)
            out.data[p * 3 + c] = opts.clamp_output ? clamp01(x[p]) : x[p];
    }
    return out;
}

// Bicubic upsampling back to the recorded clean dims; the stored frame must
// tile the target exactly at the given factor.
inline Image invert_lowres(const Image& deg, int scale, int target_w, int target_h,
                           const RestoreOptions& opts = {}) {
    detail::check_options(opts);
    if (scale != 2 && scale != 3 && scale != 4)
        throw std::invalid_argument("invert_lowres: scale must be 2, 3 or 4");
    if (target_w != deg.width * scale || target_h != deg.height * scale)
        throw std::invalid_argument("invert_lowres: target dims must be scale * stored dims");
    return resize_bicubic(deg, target_w, target_h);
}

inline Image invert_lowres(const Image& deg, int scale, const RestoreOptions& opts = {}) {
    return invert_lowres(deg, scale, deg.width * scale, deg.height * scale, opts);
}

inline Image restore(const Image& deg, const DegradationSpec& spec,
                     const RestoreOptions& opts = {}) {
    switch (spec.type) {
        case DegradationType::Haze: {
            auto it = spec.params.find(ParamKey::Transmission);
            if (it == spec.params.end())
                throw std::invalid_argument("restore: haze spec missing t");
            return invert_haze(deg, scalar_param(spec, ParamKey::AtmosphericLight), it->second,
                               opts);
        }
        case DegradationType::LowLight:
            return invert_lowlight(deg, scalar_param(spec, ParamKey::Gamma),
                                   scalar_param(spec, ParamKey::Gain),
                                   mat_param(spec, ParamKey::CamIntrinsics), opts);
        case DegradationType::Blur:
            return invert_blur_wiener(deg, scalar_param(spec, ParamKey::Sigma), opts);
        case DegradationType::LowRes:
            return invert_lowres(deg, snap_scale(scalar_param(spec, ParamKey::Scale)), opts);
    }
    throw std::invalid_argument("restore: unknown type");
}

// External restorer hooks. Registration happens once at startup; lookups are
// unsynchronized reads after that.
using RestorerFn = std::function<Image(const Image& degraded, const DegradationSpec& spec)>;

namespace detail {
inline std::map<std::string, RestorerFn>& restorer_table() {
    static std::map<std::string, RestorerFn> table;
    return table;
}
} // namespace detail

inline void register_external_restorer(const std::string& name, RestorerFn fn) {
    if (!fn) throw std::invalid_argument("register_external_restorer: empty function");
    detail::restorer_table()[name] = std::move(fn);
}

inline bool has_external_restorer(const std::string& name) {
    return detail::restorer_table().count(name) > 0;
}

inline Image run_external_restorer(const std::string& name, const Image& deg,
                                   const DegradationSpec& spec) {
    auto it = detail::restorer_table().find(name);
    if (it == detail::restorer_table().end())
        throw std::invalid_argument("unknown external restorer: " + name);
    return it->second(deg, spec);
}

} // namespace duforge
