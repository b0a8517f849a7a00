#pragma once

#include <complex>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "duforge/image.hpp"

namespace duforge {

namespace detail {

// FFTW planning mutates global tables and is not thread-safe; execution is.
inline std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

} // namespace detail

// Unnormalized forward 2-D DFT of a real plane (row-major h x w).
inline std::vector<std::complex<double>> fft2_forward(const std::vector<double>& plane,
                                                      int w, int h) {
    if (w <= 0 || h <= 0 || plane.size() != static_cast<size_t>(w) * h)
        throw std::invalid_argument("fft2_forward: plane size mismatch");
    std::vector<std::complex<double>> in(plane.size()), out(plane.size());
    for (size_t i = 0; i < plane.size(); ++i) in[i] = plane[i];

    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lk(detail::fftw_plan_mutex());
        plan = fftw_plan_dft_2d(h, w,
                                reinterpret_cast<fftw_complex*>(in.data()),
                                reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_FORWARD, FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("fft2_forward: plan creation failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lk(detail::fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

// Inverse 2-D DFT scaled by 1/(w*h); returns the real part.
inline std::vector<double> fft2_inverse(const std::vector<std::complex<double>>& freq,
                                        int w, int h) {
    if (w <= 0 || h <= 0 || freq.size() != static_cast<size_t>(w) * h)
        throw std::invalid_argument("fft2_inverse: spectrum size mismatch");
    std::vector<std::complex<double>> in = freq, out(freq.size());

    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lk(detail::fftw_plan_mutex());
        plan = fftw_plan_dft_2d(h, w,
                                reinterpret_cast<fftw_complex*>(in.data()),
                                reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("fft2_inverse: plan creation failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lk(detail::fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }

    std::vector<double> res(freq.size());
    double n = static_cast<double>(w) * h;
    for (size_t i = 0; i < res.size(); ++i) res[i] = out[i].real() / n;
    return res;
}

// log(1 + |F|) of the luma spectrum, zero frequency moved to the center bin
// (floor(h/2), floor(w/2)). Non-DC bins depend only on the AC content, so
// adding a constant to the image touches the DC bin alone.
inline std::vector<double> fft2_log_amplitude_raw(const Image& img) {
    std::vector<double> luma = luminance_plane(img);
    auto freq = fft2_forward(luma, img.width, img.height);
    int w = img.width, h = img.height;
    std::vector<double> shifted(freq.size());
    int cy = h / 2, cx = w / 2;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int sy = (y + cy) % h;
            int sx = (x + cx) % w;
            shifted[static_cast<size_t>(sy) * w + sx] =
                std::log1p(std::abs(freq[static_cast<size_t>(y) * w + x]));
        }
    }
    return shifted;
}

// Centered log-amplitude map, min-max normalized to [0,1] and replicated to
// three channels so it stacks with the degraded image and the edge map.
inline Image fft2_log_amplitude(const Image& img) {
    std::vector<double> shifted = fft2_log_amplitude_raw(img);
    double lo = shifted[0], hi = shifted[0];
    for (double v : shifted) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Image out(img.width, img.height, Encoding::Linear);
    double range = hi - lo;
    for (size_t i = 0; i < shifted.size(); ++i) {
        double v = range > 0.0 ? (shifted[i] - lo) / range : 0.0;
        out.data[i * 3] = out.data[i * 3 + 1] = out.data[i * 3 + 2] = v;
    }
    return out;
}

} // namespace duforge
