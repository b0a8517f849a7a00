#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "duforge/color.hpp"
#include "duforge/fft.hpp"
#include "duforge/image.hpp"
#include "duforge/resize.hpp"
#include "duforge/taxonomy.hpp"

namespace duforge {

// Radially averaged amplitude spectrum: log of the mean |F| per annulus of
// width 0.01 cycles/pixel, DC excluded.
struct SpectralProfile {
    std::vector<double> rho;
    std::vector<double> log_amp;
};

struct Features {
    int width = 0;
    int height = 0;
    double mean_luma = 0.0;
    double luma_var = 0.0;
    double dark_mean = 0.0;       // 15x15-eroded min channel, averaged
    double highfreq_ratio = 0.0;  // AC energy above 0.25 cycles/px over total AC
    double cutoff = 0.0;          // smallest radius holding 95% of AC energy
    double p995 = 0.0;            // 99.5th percentile of stored channel values
    SpectralProfile profile;
};

namespace detail {

// Cosine taper toward the plane mean. The analysis DFT assumes periodicity;
// without this the wrap seam contributes a 1/f floor that buries the deep
// attenuation the blur fit needs to see.
inline std::vector<double> taper_plane(const std::vector<double>& plane, int w, int h) {
    int band = std::min({16, w / 4, h / 4});
    if (band < 1) return plane;
    double mean = 0.0;
    for (double v : plane) mean += v;
    mean /= static_cast<double>(plane.size());

    auto ramp = [band](int i, int n) {
        double wgt = 1.0;
        if (i < band) wgt = std::min(wgt, 0.5 - 0.5 * std::cos(3.141592653589793 * (i + 0.5) / band));
        int j = n - 1 - i;
        if (j < band) wgt = std::min(wgt, 0.5 - 0.5 * std::cos(3.141592653589793 * (j + 0.5) / band));
        return wgt;
    };

    std::vector<double> out(plane.size());
    for (int y = 0; y < h; ++y) {
        double wy = ramp(y, h);
        for (int x = 0; x < w; ++x)
            out[static_cast<size_t>(y) * w + x] =
                mean + wy * ramp(x, w) * (plane[static_cast<size_t>(y) * w + x] - mean);
    }
    return out;
}

// Separable 15x15 erosion of the per-pixel channel minimum.
inline std::vector<double> dark_channel(const Image& img, int radius = 7) {
    int w = img.width, h = img.height;
    std::vector<double> mc(static_cast<size_t>(w) * h);
    for (size_t p = 0; p < mc.size(); ++p)
        mc[p] = std::min({img.data[p * 3], img.data[p * 3 + 1], img.data[p * 3 + 2]});

    std::vector<double> tmp(mc.size()), out(mc.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double m = 1e300;
            for (int d = -radius; d <= radius; ++d) {
                int xx = std::clamp(x + d, 0, w - 1);
                m = std::min(m, mc[static_cast<size_t>(y) * w + xx]);
            }
            tmp[static_cast<size_t>(y) * w + x] = m;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double m = 1e300;
            for (int d = -radius; d <= radius; ++d) {
                int yy = std::clamp(y + d, 0, h - 1);
                m = std::min(m, tmp[static_cast<size_t>(yy) * w + x]);
            }
            out[static_cast<size_t>(y) * w + x] = m;
        }
    return out;
}

inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    size_t k = static_cast<size_t>(q * (v.size() - 1));
    std::nth_element(v.begin(), v.begin() + k, v.end());
    return v[k];
}

} // namespace detail

inline Features extract_features(const Image& img) {
    Features f;
    f.width = img.width;
    f.height = img.height;

    std::vector<double> luma = luminance_plane(img);
    double mean = 0.0;
    for (double v : luma) mean += v;
    mean /= static_cast<double>(luma.size());
    double var = 0.0;
    for (double v : luma) var += (v - mean) * (v - mean);
    var /= static_cast<double>(luma.size());
    f.mean_luma = mean;
    f.luma_var = var;

    auto dark = detail::dark_channel(img);
    double dacc = 0.0;
    for (double v : dark) dacc += v;
    f.dark_mean = dacc / static_cast<double>(dark.size());

    f.p995 = detail::percentile(img.data, 0.995);

    auto freq = fft2_forward(detail::taper_plane(luma, img.width, img.height),
                             img.width, img.height);
    int w = img.width, h = img.height;
    int nbins = 50;  // annuli of width 0.01 over rho in (0, 0.5]
    std::vector<double> amp_sum(nbins, 0.0), energy(nbins, 0.0);
    std::vector<long> count(nbins, 0);
    for (int y = 0; y < h; ++y) {
        double fy = (y <= h / 2 ? y : y - h) / static_cast<double>(h);
        for (int x = 0; x < w; ++x) {
            if (x == 0 && y == 0) continue;
            double fx = (x <= w / 2 ? x : x - w) / static_cast<double>(w);
            double rho = std::sqrt(fx * fx + fy * fy);
            if (rho > 0.5) continue;
            int b = std::min(static_cast<int>(rho * 100.0), nbins - 1);
            double a = std::abs(freq[static_cast<size_t>(y) * w + x]);
            amp_sum[b] += a;
            energy[b] += a * a;
            count[b]++;
        }
    }

    double total = 0.0, high = 0.0;
    for (int b = 0; b < nbins; ++b) {
        total += energy[b];
        if (b >= 25) high += energy[b];
    }
    f.highfreq_ratio = total > 0.0 ? high / total : 0.0;

    double cum = 0.0;
    f.cutoff = 0.5;
    for (int b = 0; b < nbins; ++b) {
        cum += energy[b];
        if (total > 0.0 && cum >= 0.95 * total) {
            f.cutoff = (b + 1) * 0.01;
            break;
        }
    }

    for (int b = 0; b < nbins; ++b) {
        if (count[b] == 0) continue;
        f.profile.rho.push_back((b + 0.5) * 0.01);
        f.profile.log_amp.push_back(std::log(amp_sum[b] / count[b] + 1e-300));
    }
    return f;
}

// Frozen decision constants, kept in one place so calibration against the
// synthetic suite stays auditable.
struct ClassifierConfig {
    double lowlight_mean = 0.15;   // mean luma below this is low-light
    double lowlight_p995 = 0.45;   // crushed highlights also mean low-light
    double haze_dark = 0.5;        // lifted dark channel means haze
    double cutoff_thresh = 0.3;    // spectra truncated below this get the decay tests
    double highfreq_thresh = 0.02; // residual high-frequency ratio for mild blur
    double energy_quantile = 0.95; // cutoff feature quantile
    int lowres_max_dim = 72;       // frames at or below this edge are stored low-res
    double min_model_gain = 0.9;   // decay fits must beat the power law by 10%
};

inline const ClassifierConfig& default_classifier_config() {
    static const ClassifierConfig cfg;
    return cfg;
}

namespace detail {

struct ProfileWindow {
    std::vector<double> rho, y;
};

inline ProfileWindow profile_window(const SpectralProfile& p, double lo, double hi) {
    ProfileWindow w;
    for (size_t i = 0; i < p.rho.size(); ++i)
        if (p.rho[i] >= lo && p.rho[i] <= hi) {
            w.rho.push_back(p.rho[i]);
            w.y.push_back(p.log_amp[i]);
        }
    return w;
}

// For fixed sigma the model  y = b - p ln(rho) - 2 pi^2 sigma^2 rho^2  is
// linear in (b, p); p is clamped non-negative since amplitude spectra of the
// image family never rise with frequency.
inline double power_gauss_sse(const ProfileWindow& w, double sigma, double* p_out = nullptr) {
    size_t n = w.rho.size();
    if (n < 4) return 1e300;
    constexpr double two_pi2 = 19.739208802178716;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        double x = std::log(w.rho[i]);
        double yy = w.y[i] + two_pi2 * sigma * sigma * w.rho[i] * w.rho[i];
        sx += x;
        sy += yy;
        sxx += x * x;
        sxy += x * yy;
    }
    double dn = static_cast<double>(n);
    double denom = dn * sxx - sx * sx;
    double slope = denom != 0.0 ? (dn * sxy - sx * sy) / denom : 0.0;
    double p = std::max(0.0, -slope);
    double b = (sy + p * sx) / dn;
    if (p_out) *p_out = p;

    double sse = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double pred = b - p * std::log(w.rho[i]) -
                      two_pi2 * sigma * sigma * w.rho[i] * w.rho[i];
        double d = w.y[i] - pred;
        sse += d * d;
    }
    return sse;
}

struct GaussFit {
    double sigma = 0.0;
    double sse = 1e300;
    double sse_power_law = 1e300;  // sigma = 0 baseline
};

inline GaussFit fit_power_gauss(const SpectralProfile& prof, double lo = 0.05, double hi = 0.35) {
    ProfileWindow w = profile_window(prof, lo, hi);
    GaussFit fit;
    fit.sse_power_law = power_gauss_sse(w, 0.0);
    for (double s = 0.0; s <= 8.0001; s += 0.1) {
        double sse = power_gauss_sse(w, s);
        if (sse < fit.sse) {
            fit.sse = sse;
            fit.sigma = s;
        }
    }
    double best = fit.sigma;
    for (double s = std::max(0.0, best - 0.1); s <= std::min(8.0, best + 0.1) + 1e-9; s += 0.005) {
        double sse = power_gauss_sse(w, s);
        if (sse < fit.sse) {
            fit.sse = sse;
            fit.sigma = s;
        }
    }
    return fit;
}

struct BrickFit {
    double rho_c = 0.5;
    double sse = 1e300;
};

// Power law with a hard step drop at rho_c; the step depth is fit closed-form
// and constrained non-negative.
inline BrickFit fit_brick_wall(const SpectralProfile& prof, double lo = 0.05, double hi = 0.35) {
    ProfileWindow w = profile_window(prof, lo, hi);
    BrickFit fit;
    size_t n = w.rho.size();
    if (n < 6) return fit;
    for (double rc = lo + 0.02; rc <= hi - 0.01; rc += 0.01) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        size_t nb = 0;
        for (size_t i = 0; i < n; ++i) {
            if (w.rho[i] >= rc) continue;
            double x = std::log(w.rho[i]);
            sx += x;
            sy += w.y[i];
            sxx += x * x;
            sxy += x * w.y[i];
            ++nb;
        }
        if (nb < 3 || nb == n) continue;
        double dn = static_cast<double>(nb);
        double denom = dn * sxx - sx * sx;
        double slope = denom != 0.0 ? (dn * sxy - sx * sy) / denom : 0.0;
        double p = std::max(0.0, -slope);
        double b = (sy + p * sx) / dn;

        double drop = 0.0;
        size_t na = 0;
        for (size_t i = 0; i < n; ++i) {
            if (w.rho[i] < rc) continue;
            drop += (b - p * std::log(w.rho[i])) - w.y[i];
            ++na;
        }
        drop = std::max(0.0, drop / static_cast<double>(na));

        double sse = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double pred = b - p * std::log(w.rho[i]) - (w.rho[i] >= rc ? drop : 0.0);
            double d = w.y[i] - pred;
            sse += d * d;
        }
        if (sse < fit.sse) {
            fit.sse = sse;
            fit.rho_c = rc;
        }
    }
    return fit;
}

} // namespace detail

struct ClassifyResult {
    DegradationType type;
    double confidence = 0.0;
    bool fallback = false;  // no rule fired; the type is a default, not evidence
};

// Fixed rule cascade. Order: stored-frame size, darkness, lifted dark
// channel, truncated-spectrum decay tests, residual high-frequency ratio,
// haze fallback.
inline ClassifyResult classify_type(const Features& f,
                                    const ClassifierConfig& cfg = default_classifier_config()) {
    if (std::min(f.width, f.height) <= cfg.lowres_max_dim)
        return {DegradationType::LowRes, 0.9};

    if (f.mean_luma < cfg.lowlight_mean)
        return {DegradationType::LowLight,
                std::min(1.0, 0.6 + (cfg.lowlight_mean - f.mean_luma) / cfg.lowlight_mean)};
    if (f.p995 < cfg.lowlight_p995)
        return {DegradationType::LowLight,
                std::min(1.0, 0.55 + (cfg.lowlight_p995 - f.p995))};

    if (f.dark_mean > cfg.haze_dark)
        return {DegradationType::Haze, std::min(1.0, 0.6 + (f.dark_mean - cfg.haze_dark))};

    if (f.cutoff < cfg.cutoff_thresh) {
        auto gauss = detail::fit_power_gauss(f.profile);
        auto brick = detail::fit_brick_wall(f.profile);
        bool gauss_real = gauss.sse < cfg.min_model_gain * gauss.sse_power_law &&
                          gauss.sigma >= 0.3;
        bool brick_real = brick.sse < cfg.min_model_gain * gauss.sse_power_law;
        if (gauss_real && gauss.sse <= brick.sse)
            return {DegradationType::Blur, 0.8};
        if (brick_real && brick.sse < gauss.sse)
            return {DegradationType::LowRes, 0.6};
        // Neither decay model explains the truncation; fall through.
    }

    if (f.highfreq_ratio < cfg.highfreq_thresh)
        return {DegradationType::Blur, 0.55};
    return {DegradationType::Haze, 0.4, true};
}

struct HazeEstimate {
    double A = 0.8;
    double t = 0.5;
    double confidence = 0.0;
};

// Dark-channel prior: airlight from the brightest 0.1% of the dark channel,
// transmission from the normalized dark channel with the usual 0.95 retention.
inline HazeEstimate estimate_haze(const Image& img) {
    auto dark = detail::dark_channel(img);
    size_t n = dark.size();
    size_t top = std::max<size_t>(1, n / 1000);

    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    std::partial_sort(idx.begin(), idx.begin() + top, idx.end(),
                      [&](size_t a, size_t b) { return dark[a] > dark[b]; });

    double a_acc = 0.0;
    for (size_t i = 0; i < top; ++i) {
        size_t p = idx[i];
        a_acc += (img.data[p * 3] + img.data[p * 3 + 1] + img.data[p * 3 + 2]) / 3.0;
    }
    HazeEstimate est;
    est.A = std::clamp(a_acc / static_cast<double>(top), 0.6, 1.0);

    double dn_acc = 0.0;
    for (double v : dark) dn_acc += v / est.A;
    double t_raw = 1.0 - 0.95 * (dn_acc / static_cast<double>(n));
    est.t = std::clamp(t_raw, 0.1, 0.95);
    est.confidence = std::clamp(0.5 + (est.A - 0.6), 0.0, 1.0);
    return est;
}

struct BlurEstimate {
    double sigma = 4.0;
    double confidence = 0.0;
};

inline BlurEstimate estimate_blur_sigma(const Features& f) {
    BlurEstimate est;
    if (f.luma_var < 1e-8) {
        est.sigma = 4.0;  // midpoint of (0, 8]; nothing to measure
        est.confidence = 0.0;
        return est;
    }
    auto fit = detail::fit_power_gauss(f.profile);
    est.sigma = std::clamp(fit.sigma, 0.05, 8.0);
    double gain = fit.sse_power_law > 0.0 ? 1.0 - fit.sse / fit.sse_power_law : 0.0;
    est.confidence = std::clamp(gain, 0.0, 1.0);
    return est;
}

inline BlurEstimate estimate_blur_sigma(const Image& img) {
    return estimate_blur_sigma(extract_features(img));
}

struct LowLightEstimate {
    double gamma = 2.6;
    double gain = 0.5;
    double confidence = 0.0;
};

// The camera matrix is unobservable blind, so it is reported as identity by
// the caller. Gain comes from the surviving highlight level in linear space;
// gamma is solved so the re-linearized image lands on a mid-gray target.
inline LowLightEstimate estimate_lowlight(const Image& img) {
    std::vector<double> lin(img.data.size());
    for (size_t i = 0; i < lin.size(); ++i) lin[i] = srgb_to_linear(clamp01(img.data[i]));

    LowLightEstimate est;
    est.gain = std::clamp(detail::percentile(lin, 0.995), 0.01, 1.0);

    auto mean_for_gamma = [&](double g) {
        double acc = 0.0;
        for (double v : lin) acc += std::pow(std::min(v / est.gain, 1.0), 1.0 / g);
        return acc / static_cast<double>(lin.size());
    };
    double lo = 1.2, hi = 4.0;
    if (mean_for_gamma(lo) >= 0.45) {
        est.gamma = lo;
    } else if (mean_for_gamma(hi) <= 0.45) {
        est.gamma = hi;
    } else {
        for (int i = 0; i < 30; ++i) {
            double mid = 0.5 * (lo + hi);
            (mean_for_gamma(mid) < 0.45 ? lo : hi) = mid;
        }
        est.gamma = 0.5 * (lo + hi);
    }
    est.confidence = est.gain < 0.9 ? 0.7 : 0.3;
    return est;
}

struct ScaleEstimateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Reference mode needs the stored frame to divide the reference exactly and
// the quotient to be an allowed factor; anything else is ambiguous. Blind
// mode reads the spectral cutoff of a down-then-up image.
inline int estimate_scale(int width, int height, std::optional<std::pair<int, int>> reference,
                          const Features* f = nullptr) {
    if (reference) {
        auto [rw, rh] = *reference;
        if (rw <= 0 || rh <= 0 || width <= 0 || height <= 0)
            throw ScaleEstimateError("estimate_scale: bad dimensions");
        if (rw % width != 0 || rh % height != 0)
            throw ScaleEstimateError("estimate_scale: reference dims not an integer multiple");
        int sw = rw / width, sh = rh / height;
        if (sw != sh) throw ScaleEstimateError("estimate_scale: inconsistent per-axis factors");
        if (sw < 2 || sw > 4)
            throw ScaleEstimateError("estimate_scale: factor outside {2, 3, 4}");
        return sw;
    }
    if (!f) throw ScaleEstimateError("estimate_scale: blind mode needs features");
    double c = std::max(f->cutoff, 1e-3);
    double raw = 0.5 / c;
    int best = 2;
    double best_d = 1e300;
    for (int s : {2, 3, 4}) {
        double d = std::fabs(raw - s);
        if (d < best_d) {
            best_d = d;
            best = s;
        }
    }
    return best;
}

struct Prediction {
    DegradationSpec spec;
    double confidence = 0.0;
    bool low_confidence = false;
    bool invalid = false;  // set when the spec is known not to satisfy its invariants
    std::map<std::string, double> features;
};

struct PredictOptions {
    std::optional<std::pair<int, int>> reference_dims;
    ClassifierConfig classifier = default_classifier_config();
};

inline Prediction predict(const Image& img, const PredictOptions& opts = {}) {
    Features f = extract_features(img);
    Prediction out;
    out.features = {
        {"mean_luma", f.mean_luma},       {"luma_var", f.luma_var},
        {"dark_mean", f.dark_mean},       {"highfreq_ratio", f.highfreq_ratio},
        {"cutoff", f.cutoff},             {"p995", f.p995},
        {"width", static_cast<double>(f.width)},
        {"height", static_cast<double>(f.height)},
    };

    ClassifyResult cls = classify_type(f, opts.classifier);
    out.spec.type = cls.type;

    // Degenerate frames carry no parameter information: report range
    // midpoints and flag the prediction.
    if (f.luma_var < 1e-8) {
        out.low_confidence = true;
        out.confidence = 0.0;
        switch (cls.type) {
            case DegradationType::Haze:
                out.spec.params[ParamKey::AtmosphericLight] = 0.8;
                out.spec.params[ParamKey::Transmission] = 0.525;
                break;
            case DegradationType::LowLight:
                out.spec.params[ParamKey::Gamma] = 2.6;
                out.spec.params[ParamKey::Gain] = 0.5;
                out.spec.params[ParamKey::CamIntrinsics] = Mat3::identity();
                break;
            case DegradationType::Blur:
                out.spec.params[ParamKey::Sigma] = 4.0;
                break;
            case DegradationType::LowRes:
                out.spec.params[ParamKey::Scale] = 3.0;
                break;
        }
        return out;
    }

    double param_conf = 0.5;
    switch (cls.type) {
        case DegradationType::Haze: {
            HazeEstimate h = estimate_haze(img);
            out.spec.params[ParamKey::AtmosphericLight] = h.A;
            out.spec.params[ParamKey::Transmission] = h.t;
            param_conf = h.confidence;
            break;
        }
        case DegradationType::LowLight: {
            LowLightEstimate l = estimate_lowlight(img);
            out.spec.params[ParamKey::Gamma] = l.gamma;
            out.spec.params[ParamKey::Gain] = l.gain;
            out.spec.params[ParamKey::CamIntrinsics] = Mat3::identity();
            param_conf = l.confidence;
            break;
        }
        case DegradationType::Blur: {
            BlurEstimate b = estimate_blur_sigma(f);
            out.spec.params[ParamKey::Sigma] = b.sigma;
            param_conf = b.confidence;
            break;
        }
        case DegradationType::LowRes: {
            int s;
            try {
                s = estimate_scale(f.width, f.height, opts.reference_dims, &f);
            } catch (const ScaleEstimateError&) {
                s = 2;
                out.low_confidence = true;
            }
            out.spec.params[ParamKey::Scale] = static_cast<double>(s);
            param_conf = opts.reference_dims ? 0.95 : 0.4;
            break;
        }
    }
    out.confidence = std::clamp(cls.confidence * std::max(param_conf, 0.05), 0.0, 1.0);
    out.low_confidence = out.low_confidence || cls.fallback || out.confidence < 0.2;
    return out;
}

} // namespace duforge
