#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "duforge/estimate.hpp"
#include "duforge/image.hpp"
#include "duforge/metrics.hpp"
#include "duforge/restore.hpp"
#include "duforge/taxonomy.hpp"

namespace duforge {

struct RewardBreakdown {
    int r_type = 0;                 // 1 iff predicted type matches truth
    int r_key = 0;                  // 1 iff key set and value ranges check out
    std::optional<double> r_rec;    // reconstruction term; absent when gated
    double total = -1.0;
    bool gated = true;
};

// Mean absolute forward difference over both axes. The reference-free
// quality proxy: residual ringing and noise raise it, smooth output lowers it.
inline double total_variation(const Image& img) {
    double acc = 0.0;
    long terms = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                if (x + 1 < img.width) {
                    acc += std::fabs(img.at(x + 1, y, c) - img.at(x, y, c));
                    ++terms;
                }
                if (y + 1 < img.height) {
                    acc += std::fabs(img.at(x, y + 1, c) - img.at(x, y, c));
                    ++terms;
                }
            }
    return terms > 0 ? acc / static_cast<double>(terms) : 0.0;
}

// Full-reference reward. The gate runs entirely before restoration: wrong
// type, wrong key set, out-of-range values, or an explicitly invalid
// prediction collapse to a flat -1 without invoking the restorer. Valid
// predictions are scored by restoring with the predicted parameters and
// taking negative MSE against the reference. A restorer that throws on a
// validated input is an infrastructure error and propagates; it must not be
// confused with the policy penalty.
inline RewardBreakdown compute_reward(const Image& deg, const Prediction& pred,
                                      const DegradationSpec& truth, const Image& clean,
                                      const RestorerFn& restorer = {}) {
    RewardBreakdown rb;
    rb.r_type = (pred.spec.type == truth.type) ? 1 : 0;

    bool keys_ok = false;
    {
        const auto& schema = required_keys(truth.type);
        keys_ok = pred.spec.params.size() == schema.size();
        if (keys_ok)
            for (ParamKey k : schema)
                if (!pred.spec.params.count(k)) { keys_ok = false; break; }
    }
    rb.r_key = (keys_ok && !pred.invalid && spec_is_valid(pred.spec)) ? 1 : 0;

    if (!rb.r_type || !rb.r_key) return rb;

    Image restored = restorer ? restorer(deg, pred.spec) : restore(deg, pred.spec);
    rb.r_rec = -mse(restored, clean);
    rb.total = *rb.r_rec;
    rb.gated = false;
    return rb;
}

using QualityFn = std::function<double(const Image&)>;

inline QualityFn negative_tv_scorer() {
    return [](const Image& img) { return -total_variation(img); };
}

// Reference-free variant for online use: no truth label exists, so the gate
// checks only that the prediction is schema-valid for its own claimed type.
// The restored frame is scored by the pluggable no-reference functional.
inline RewardBreakdown compute_reward_noref(const Image& deg, const Prediction& pred,
                                            const QualityFn& scorer = negative_tv_scorer(),
                                            const RestorerFn& restorer = {}) {
    if (!scorer) throw std::invalid_argument("compute_reward_noref: scorer missing");
    RewardBreakdown rb;
    rb.r_key = (!pred.invalid && spec_is_valid(pred.spec)) ? 1 : 0;
    rb.r_type = rb.r_key;  // no truth label to dispute the claimed type
    if (!rb.r_key) return rb;

    Image restored = restorer ? restorer(deg, pred.spec) : restore(deg, pred.spec);
    rb.r_rec = scorer(restored);
    rb.total = *rb.r_rec;
    rb.gated = false;
    return rb;
}

// Within-group baseline: center on the group mean, scale by population
// standard deviation floored at 1e-8 so an all-equal group maps to zeros.
inline std::vector<double> group_advantages(const std::vector<double>& rewards) {
    if (rewards.size() < 2)
        throw std::invalid_argument("group_advantages: group size must be at least 2");
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rewards.size());
    double sd = std::max(std::sqrt(var), 1e-8);

    std::vector<double> adv(rewards.size());
    for (size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / sd;
    return adv;
}

} // namespace duforge
