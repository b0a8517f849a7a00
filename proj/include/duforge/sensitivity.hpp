#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "duforge/dataset.hpp"
#include "duforge/metrics.hpp"
#include "duforge/png_io.hpp"
#include "duforge/restore.hpp"
#include "duforge/taxonomy.hpp"

namespace duforge {

struct SensitivityRow {
    double offset = 0.0;  // nominal |error| injected into the parameter
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    int samples = 0;
};

struct SensitivityReport {
    ParamKey key;
    std::vector<SensitivityRow> rows;          // one per nominal offset
    double pearson_abs_err_psnr = 0.0;         // over all (sample, signed offset) points
    double pearson_abs_err_ssim = 0.0;
};

namespace detail {

inline DegradationType type_owning(ParamKey key) {
    switch (key) {
        case ParamKey::AtmosphericLight:
        case ParamKey::Transmission:
            return DegradationType::Haze;
        case ParamKey::Gamma:
        case ParamKey::Gain:
        case ParamKey::CamIntrinsics:
            return DegradationType::LowLight;
        case ParamKey::Sigma:
            return DegradationType::Blur;
        case ParamKey::Scale:
            return DegradationType::LowRes;
    }
    throw std::invalid_argument("unknown parameter key");
}

// Perturbed values are clamped into the key's valid window so restoration
// stays well defined; the correlation uses the effective error after the
// clamp, not the nominal one. Gain and Sigma exclude zero.
inline double clamp_to_range(ParamKey key, double v) {
    ScalarRange r = key_range(key);
    double lo = r.lo;
    if (key == ParamKey::Gain || key == ParamKey::Sigma) lo = std::max(lo, 1e-6);
    return std::clamp(v, lo, r.hi);
}

} // namespace detail

// Parameter-error sweep: for every record of the key's type, restore with
// the true value shifted by +e and -e, and measure fidelity against the
// stored clean frame. Only scalar keys are sweepable.
inline SensitivityReport run_sensitivity(const std::vector<ManifestRecord>& records,
                                         const std::string& base_dir, ParamKey key,
                                         const std::vector<double>& offsets,
                                         const RestoreOptions& opts = {},
                                         int max_samples = 0) {
    if (key == ParamKey::CamIntrinsics || key == ParamKey::Scale)
        throw std::invalid_argument("sensitivity: only scalar continuous keys are sweepable");
    if (offsets.empty()) throw std::invalid_argument("sensitivity: no offsets given");

    DegradationType type = detail::type_owning(key);
    namespace fs = std::filesystem;

    struct Acc {
        double psnr = 0.0, ssim = 0.0;
        int n = 0;
    };
    std::map<double, Acc> by_offset;
    std::vector<double> xs, ys_psnr, ys_ssim;

    int used = 0;
    for (const auto& rec : records) {
        if (rec.spec.type != type) continue;
        auto it = rec.spec.params.find(key);
        if (it == rec.spec.params.end()) continue;
        const double* truth = std::get_if<double>(&it->second);
        if (!truth) continue;  // map-valued transmissions are not sweepable
        if (max_samples > 0 && used >= max_samples) break;
        ++used;

        Image clean = load_png((fs::path(base_dir) / rec.clean_path).string());
        Image deg = load_png((fs::path(base_dir) / rec.degraded_path).string());

        for (double e : offsets) {
            for (int sign : {+1, -1}) {
                if (e == 0.0 && sign < 0) continue;
                double v = detail::clamp_to_range(key, *truth + sign * e);
                DegradationSpec perturbed = rec.spec;
                perturbed.params[key] = v;
                Image restored = restore(deg, perturbed, opts);

                double p = psnr(restored, clean);
                double s = ssim(restored, clean);
                Acc& acc = by_offset[e];
                acc.psnr += p;
                acc.ssim += s;
                acc.n++;
                xs.push_back(std::fabs(v - *truth));
                ys_psnr.push_back(p);
                ys_ssim.push_back(s);
            }
        }
    }
    if (used == 0) throw std::invalid_argument("sensitivity: no usable records for this key");

    SensitivityReport report;
    report.key = key;
    for (const auto& [e, acc] : by_offset)
        report.rows.push_back({e, acc.psnr / acc.n, acc.ssim / acc.n, acc.n});
    report.pearson_abs_err_psnr = pearson(xs, ys_psnr);
    report.pearson_abs_err_ssim = pearson(xs, ys_ssim);
    return report;
}

} // namespace duforge
