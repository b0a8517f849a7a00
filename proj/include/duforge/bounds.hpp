#pragma once

#include <cmath>
#include <stdexcept>

#include "duforge/rng.hpp"
#include "duforge/tokenizer.hpp"

namespace duforge {

// Both harnesses work on the normalized value domain the quantizer induces:
// values in [0, 1] (scaled by d_max where it matters), bins of width delta.

struct DecompositionReport {
    double mean_exact = 0.0;   // mean of -log P(bin) under the Gaussian model
    double mean_approx = 0.0;  // mean of the quadratic surrogate
    double mean_gap = 0.0;     // mean |exact - approx| per trial
};

namespace detail {

// Gaussian mass of [a, b] under N(mu, sigma^2), tail-stable via erfc.
inline double gaussian_interval_mass(double a, double b, double mu, double sigma) {
    double alpha = (a - mu) / sigma;
    double beta = (b - mu) / sigma;
    constexpr double inv_sqrt2 = 0.7071067811865476;
    double p;
    if (alpha >= 0.0)
        p = 0.5 * (std::erfc(alpha * inv_sqrt2) - std::erfc(beta * inv_sqrt2));
    else if (beta <= 0.0)
        p = 0.5 * (std::erfc(-beta * inv_sqrt2) - std::erfc(-alpha * inv_sqrt2));
    else
        p = 0.5 * (std::erf(beta * inv_sqrt2) - std::erf(alpha * inv_sqrt2));
    return std::max(p, 1e-300);
}

} // namespace detail

// Compares the exact bin negative log-likelihood under a Gaussian value model
// against the quadratic surrogate
//   ||v - mu||^2 / (2 sigma^2) - log(delta) + 0.5 log(2 pi sigma^2).
// Each trial draws the true value uniformly and offsets the model mean by a
// Gaussian of the model's own scale, so the surrogate is exercised away from
// the bin center. The gap contracts linearly in delta.
inline DecompositionReport measure_decomposition_gap(double sigma_noise, const QuantGrid& grid,
                                                     int trials, uint64_t seed = 1,
                                                     double mean_offset_scale = 1.0) {
    if (!(sigma_noise > 0.0))
        throw std::invalid_argument("measure_decomposition_gap: sigma must be positive");
    if (trials <= 0)
        throw std::invalid_argument("measure_decomposition_gap: trials must be positive");

    Rng rng(seed);
    double delta = grid.delta;
    int zmax = grid.bin_count() - 1;
    DecompositionReport rep;
    constexpr double log_2pi = 1.8378770664093453;

    for (int i = 0; i < trials; ++i) {
        double v = rng.uniform();
        double mu = v + mean_offset_scale * sigma_noise * rng.normal();
        int z = std::min(static_cast<int>(std::floor(v / delta)), zmax);
        double a = z * delta;
        double b = std::min((z + 1) * delta, 1.0);

        double exact = -std::log(detail::gaussian_interval_mass(a, b, mu, sigma_noise));
        double approx = (v - mu) * (v - mu) / (2.0 * sigma_noise * sigma_noise) -
                        std::log(delta) + 0.5 * (log_2pi + 2.0 * std::log(sigma_noise));

        rep.mean_exact += exact;
        rep.mean_approx += approx;
        rep.mean_gap += std::fabs(exact - approx);
    }
    rep.mean_exact /= trials;
    rep.mean_approx /= trials;
    rep.mean_gap /= trials;
    return rep;
}

struct RiskReport {
    double r_cls = 0.0;       // empirical bin-mismatch rate of the argmax decoder
    double r_reg = 0.0;       // empirical squared value error of centroid decoding
    double bound_cls = 0.0;   // sqrt(2 epsilon)
    double bound_reg = 0.0;   // delta^2 range^2 / 4 + d_max^2 sqrt(2 epsilon)
    double mean_kl = 0.0;     // achieved divergence budget, closed form
};

// Builds a predictive distribution at a known divergence from the truth and
// measures what the argmax/centroid decoder loses. Construction: a fixed
// fraction q of trials keep only mass c on the true bin (the rest on one
// uniformly chosen wrong bin), the others are exact; per-trial divergence is
// then -log(c) or 0, so q = epsilon / -log(c) hits the budget exactly and
// flooring the confused count keeps the measured mean at or below epsilon.
inline RiskReport measure_risk_bounds(double epsilon, double d_max, const QuantGrid& grid,
                                      int trials, uint64_t seed = 2) {
    if (epsilon < 0.0) throw std::invalid_argument("measure_risk_bounds: negative epsilon");
    if (!(d_max > 0.0)) throw std::invalid_argument("measure_risk_bounds: d_max must be positive");
    if (trials <= 0) throw std::invalid_argument("measure_risk_bounds: trials must be positive");

    constexpr double kept_mass = 0.2;
    const double per_trial_kl = -std::log(kept_mass);
    double q = epsilon / per_trial_kl;
    if (q > 1.0)
        throw std::invalid_argument("measure_risk_bounds: epsilon too large for construction");

    int z_count = grid.bin_count();
    if (z_count < 2 && epsilon > 0.0)
        throw std::invalid_argument("measure_risk_bounds: need at least two bins");
    int confused = static_cast<int>(std::floor(q * trials));

    Rng rng(seed);
    double delta = grid.delta;
    RiskReport rep;
    rep.bound_cls = std::sqrt(2.0 * epsilon);
    rep.bound_reg = delta * delta * d_max * d_max / 4.0 + d_max * d_max * rep.bound_cls;
    rep.mean_kl = static_cast<double>(confused) * per_trial_kl / trials;

    long wrong = 0;
    double sq_err = 0.0;
    for (int i = 0; i < trials; ++i) {
        double v = rng.uniform() * d_max;
        double u = v / d_max;
        int zt = std::min(static_cast<int>(std::floor(u / delta)), z_count - 1);
        int zh = zt;
        if (i < confused) {
            // argmax of the corrupted distribution lands on the wrong bin
            // because 1 - c > c.
            zh = static_cast<int>(rng.below(static_cast<uint64_t>(z_count - 1)));
            if (zh >= zt) ++zh;
            ++wrong;
        }
        double vh = std::min((zh + 0.5) * delta, 1.0) * d_max;
        sq_err += (v - vh) * (v - vh);
    }
    rep.r_cls = static_cast<double>(wrong) / trials;
    rep.r_reg = sq_err / trials;
    return rep;
}

} // namespace duforge
