#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "duforge/image.hpp"
#include "duforge/taxonomy.hpp"

namespace duforge {

inline double mse(const Image& a, const Image& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("mse: dimension mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

// Peak 1.0; capped at 100 dB below MSE 1e-10 so near-exact inverses do not
// report infinities.
inline double psnr(const Image& a, const Image& b) {
    double m = mse(a, b);
    if (m < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / m);
}

namespace detail {

inline std::vector<double> ssim_window() {
    // 11x11 Gaussian, sigma 1.5, unit sum.
    std::vector<double> w(121);
    double sum = 0.0;
    for (int y = -5; y <= 5; ++y)
        for (int x = -5; x <= 5; ++x) {
            double v = std::exp(-(x * x + y * y) / (2.0 * 1.5 * 1.5));
            w[(y + 5) * 11 + (x + 5)] = v;
            sum += v;
        }
    for (double& v : w) v /= sum;
    return w;
}

} // namespace detail

// Mean SSIM over fully interior 11x11 windows, per channel then averaged.
// Constants K1=0.01, K2=0.03 on unit dynamic range.
inline double ssim(const Image& a, const Image& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("ssim: dimension mismatch");
    if (a.width < 11 || a.height < 11)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    static const std::vector<double> win = detail::ssim_window();
    // Stabilizers sized for unit dynamic range. Two constant images a, b
    // reduce the score to (2ab + C1) / (a*a + b*b + C1).
    constexpr double C1 = 0.01;
    constexpr double C2 = 0.03;

    double channel_acc = 0.0;
    for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        long count = 0;
        for (int y = 5; y < a.height - 5; ++y) {
            for (int x = 5; x < a.width - 5; ++x) {
                double ma = 0, mb = 0;
                for (int dy = -5; dy <= 5; ++dy)
                    for (int dx = -5; dx <= 5; ++dx) {
                        double w = win[(dy + 5) * 11 + (dx + 5)];
                        ma += w * a.at(x + dx, y + dy, c);
                        mb += w * b.at(x + dx, y + dy, c);
                    }
                double va = 0, vb = 0, cov = 0;
                for (int dy = -5; dy <= 5; ++dy)
                    for (int dx = -5; dx <= 5; ++dx) {
                        double w = win[(dy + 5) * 11 + (dx + 5)];
                        double da = a.at(x + dx, y + dy, c) - ma;
                        double db = b.at(x + dx, y + dy, c) - mb;
                        va += w * da * da;
                        vb += w * db * db;
                        cov += w * da * db;
                    }
                double s = ((2 * ma * mb + C1) * (2 * cov + C2)) /
                           ((ma * ma + mb * mb + C1) * (va + vb + C2));
                acc += s;
                ++count;
            }
        }
        channel_acc += acc / static_cast<double>(count);
    }
    return channel_acc / 3.0;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("pearson: need two equal-length series of size >= 2");
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx < 1e-24 || syy < 1e-24)
        throw std::invalid_argument("pearson: a series has no variance");
    return sxy / std::sqrt(sxx * syy);
}

// One prediction scored against its ground truth. When the structure is wrong
// (type or key set), every truth key is penalized: the absolute error equals
// the truth's mean magnitude and the relative error is exactly 1, as if the
// prediction had been all zeros.
struct SampleScore {
    DegradationType truth_type;
    std::optional<DegradationType> pred_type;
    bool type_correct = false;
    bool keys_correct = false;
    bool joint_correct = false;
    std::map<ParamKey, double> p_abs;
    std::map<ParamKey, double> p_rel;
};

namespace detail {

inline double mean_abs_value(const ParamValue& v) {
    if (const double* s = std::get_if<double>(&v)) return std::fabs(*s);
    if (const Mat3* m = std::get_if<Mat3>(&v)) {
        double acc = 0;
        for (double e : m->m) acc += std::fabs(e);
        return acc / 9.0;
    }
    const ParamMap& pm = std::get<ParamMap>(v);
    double acc = 0;
    for (double e : pm.data) acc += std::fabs(e);
    return pm.data.empty() ? 0.0 : acc / static_cast<double>(pm.data.size());
}

// Elementwise mean absolute deviation; scalars broadcast against maps.
// Returns nothing when the shapes are incomparable.
inline std::optional<double> mean_abs_diff(const ParamValue& pred, const ParamValue& truth) {
    const double* ps = std::get_if<double>(&pred);
    const double* ts = std::get_if<double>(&truth);
    if (ps && ts) return std::fabs(*ps - *ts);

    const Mat3* pm3 = std::get_if<Mat3>(&pred);
    const Mat3* tm3 = std::get_if<Mat3>(&truth);
    if (pm3 && tm3) {
        double acc = 0;
        for (int i = 0; i < 9; ++i) acc += std::fabs(pm3->m[i] - tm3->m[i]);
        return acc / 9.0;
    }

    const ParamMap* pmap = std::get_if<ParamMap>(&pred);
    const ParamMap* tmap = std::get_if<ParamMap>(&truth);
    if (pmap && tmap) {
        if (pmap->width != tmap->width || pmap->height != tmap->height) return std::nullopt;
        double acc = 0;
        for (size_t i = 0; i < tmap->data.size(); ++i)
            acc += std::fabs(pmap->data[i] - tmap->data[i]);
        return acc / static_cast<double>(tmap->data.size());
    }
    if (ps && tmap) {
        double acc = 0;
        for (double e : tmap->data) acc += std::fabs(*ps - e);
        return acc / static_cast<double>(tmap->data.size());
    }
    if (pmap && ts) {
        double acc = 0;
        for (double e : pmap->data) acc += std::fabs(e - *ts);
        return acc / static_cast<double>(pmap->data.size());
    }
    return std::nullopt;
}

} // namespace detail

inline SampleScore score_understanding(const DegradationSpec& pred,
                                       const DegradationSpec& truth) {
    SampleScore s;
    s.truth_type = truth.type;
    s.pred_type = pred.type;
    s.type_correct = pred.type == truth.type;

    std::set<ParamKey> want(required_keys(truth.type).begin(), required_keys(truth.type).end());
    std::set<ParamKey> got;
    for (const auto& [k, v] : pred.params) got.insert(k);
    s.keys_correct = got == want;
    s.joint_correct = s.type_correct && s.keys_correct;

    bool structural_fail = !s.joint_correct;
    for (ParamKey k : required_keys(truth.type)) {
        auto tit = truth.params.find(k);
        if (tit == truth.params.end()) continue;
        double magnitude = detail::mean_abs_value(tit->second);
        std::optional<double> diff;
        if (!structural_fail) {
            auto pit = pred.params.find(k);
            if (pit != pred.params.end())
                diff = detail::mean_abs_diff(pit->second, tit->second);
        }
        if (diff) {
            s.p_abs[k] = *diff;
            s.p_rel[k] = *diff / std::max(magnitude, 1e-9);
        } else {
            s.p_abs[k] = magnitude;
            s.p_rel[k] = 1.0;
        }
    }
    return s;
}

struct EvalReport {
    double type_accuracy = 0.0;
    double type_macro_f1 = 0.0;
    double joint_accuracy = 0.0;
    std::map<ParamKey, double> p_abs_by_key;
    std::map<ParamKey, double> p_rel_by_key;
    double p_abs_mean = 0.0;  // mean of the per-key averages
    double p_rel_mean = 0.0;
    size_t sample_count = 0;
};

inline EvalReport aggregate(const std::vector<SampleScore>& rows) {
    if (rows.empty()) throw std::invalid_argument("aggregate: no rows");
    EvalReport rep;
    rep.sample_count = rows.size();

    long type_ok = 0, joint_ok = 0;
    std::map<DegradationType, long> tp, fp, fn;
    std::map<ParamKey, double> abs_sum, rel_sum;
    std::map<ParamKey, long> key_n;

    for (const SampleScore& r : rows) {
        type_ok += r.type_correct ? 1 : 0;
        joint_ok += r.joint_correct ? 1 : 0;
        if (r.pred_type && *r.pred_type == r.truth_type) {
            tp[r.truth_type]++;
        } else {
            fn[r.truth_type]++;
            if (r.pred_type) fp[*r.pred_type]++;
        }
        for (const auto& [k, v] : r.p_abs) {
            abs_sum[k] += v;
            key_n[k]++;
        }
        for (const auto& [k, v] : r.p_rel) rel_sum[k] += v;
    }

    rep.type_accuracy = static_cast<double>(type_ok) / rows.size();
    rep.joint_accuracy = static_cast<double>(joint_ok) / rows.size();

    // Macro F1 over the four types; absent precision or recall counts as 0.
    double f1_sum = 0.0;
    for (DegradationType t : kAllTypes) {
        double tpv = static_cast<double>(tp[t]);
        double prec_den = tpv + fp[t];
        double rec_den = tpv + fn[t];
        double prec = prec_den > 0 ? tpv / prec_den : 0.0;
        double rec = rec_den > 0 ? tpv / rec_den : 0.0;
        double f1 = (prec + rec) > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
        f1_sum += f1;
    }
    rep.type_macro_f1 = f1_sum / kAllTypes.size();

    for (const auto& [k, n] : key_n) {
        rep.p_abs_by_key[k] = abs_sum[k] / n;
        rep.p_rel_by_key[k] = rel_sum[k] / n;
    }
    if (!rep.p_abs_by_key.empty()) {
        for (const auto& [k, v] : rep.p_abs_by_key) rep.p_abs_mean += v;
        for (const auto& [k, v] : rep.p_rel_by_key) rep.p_rel_mean += v;
        rep.p_abs_mean /= rep.p_abs_by_key.size();
        rep.p_rel_mean /= rep.p_rel_by_key.size();
    }
    return rep;
}

} // namespace duforge
