#include <catch2/catch_amalgamated.hpp>

#include "duforge/dataset.hpp"
#include "duforge/degrade.hpp"
#include "duforge/estimate.hpp"
#include "duforge/restore.hpp"
#include "duforge/rng.hpp"

using namespace duforge;

namespace {

Image textured(uint64_t seed) { return quantize_to_8bit(procedural_clean(seed, 128, 128)); }

Image white_noise(int w, int h, uint64_t seed) {
    Rng rng(seed);
    Image img(w, h);
    for (double& v : img.data) v = rng.uniform();
    return img;
}

Image constant_image(int w, int h, double v) {
    Image img(w, h);
    for (double& x : img.data) x = v;
    return img;
}

} // namespace

TEST_CASE("classifier recognizes each synthetic degradation") {
    Image clean = textured(101);

    SECTION("dim gain forces the lowlight branch") {
        Image deg = quantize_to_8bit(apply_lowlight(clean, 2.5, 0.08, Mat3::identity()));
        auto r = classify_type(extract_features(deg));
        REQUIRE(r.type == DegradationType::LowLight);
    }
    SECTION("thick haze lifts the dark channel") {
        Image deg = quantize_to_8bit(apply_haze(clean, 0.9, 0.3));
        auto r = classify_type(extract_features(deg));
        REQUIRE(r.type == DegradationType::Haze);
        REQUIRE_FALSE(r.fallback);
    }
    SECTION("heavy blur truncates the spectrum") {
        Image deg = quantize_to_8bit(apply_blur(clean, 3.0));
        auto r = classify_type(extract_features(deg));
        REQUIRE(r.type == DegradationType::Blur);
    }
    SECTION("small stored frames read as downsampled") {
        Image deg = quantize_to_8bit(apply_lowres(clean, 4));
        REQUIRE(deg.width == 32);
        auto r = classify_type(extract_features(deg));
        REQUIRE(r.type == DegradationType::LowRes);
    }
}

TEST_CASE("clean sharp input lands on the documented fallback, flagged") {
    Image clean = textured(103);
    Prediction p = predict(clean);
    REQUIRE(p.low_confidence);
}

TEST_CASE("haze estimator example tolerances") {
    Image clean = textured(107);
    Image deg = quantize_to_8bit(apply_haze(clean, 0.8, 0.5));
    HazeEstimate e = estimate_haze(deg);
    REQUIRE(std::fabs(e.A - 0.8) <= 0.1);
    REQUIRE(std::fabs(e.t - 0.5) <= 0.15);
}

TEST_CASE("haze estimator degenerate and near-clear cases") {
    HazeEstimate white = estimate_haze(constant_image(64, 64, 1.0));
    REQUIRE(white.A >= 0.95);
    REQUIRE(white.t <= 0.15);

    Image clean = textured(109);
    Image near_clear = quantize_to_8bit(apply_haze(clean, 0.8, 0.95));
    REQUIRE(estimate_haze(near_clear).t >= 0.7);
}

TEST_CASE("blur estimator example tolerances") {
    Image noise = white_noise(128, 128, 113);
    Image deg = quantize_to_8bit(apply_blur(noise, 2.0));
    BlurEstimate e = estimate_blur_sigma(deg);
    REQUIRE(std::fabs(e.sigma - 2.0) <= 0.4);

    Image sharp = quantize_to_8bit(apply_blur(noise, 0.1));
    REQUIRE(estimate_blur_sigma(sharp).sigma <= 0.5);

    BlurEstimate flat = estimate_blur_sigma(constant_image(64, 64, 0.4));
    REQUIRE(flat.sigma == 4.0);
    REQUIRE(flat.confidence == 0.0);
}

TEST_CASE("lowlight estimator example tolerances") {
    Image clean = textured(127);
    Image deg = quantize_to_8bit(apply_lowlight(clean, 2.0, 0.1, Mat3::identity()));
    LowLightEstimate e = estimate_lowlight(deg);
    REQUIRE(std::fabs(e.gamma - 2.0) <= 0.6);
    REQUIRE(e.gain >= 0.01);
    REQUIRE(e.gain <= 1.0);
}

TEST_CASE("bright unmodified input pushes gain high and gamma to the clamp") {
    Image bright = white_noise(96, 96, 131);
    for (double& v : bright.data) v = 0.6 + 0.35 * v;
    LowLightEstimate e = estimate_lowlight(quantize_to_8bit(bright));
    REQUIRE(e.gain >= 0.8);
    REQUIRE(e.gamma <= 1.4);
}

TEST_CASE("all-black input degrades to flagged midpoints") {
    Prediction p = predict(constant_image(64, 64, 0.0));
    REQUIRE(p.low_confidence);
    REQUIRE(p.confidence == 0.0);
    REQUIRE(p.spec.type == DegradationType::LowLight);
    REQUIRE(scalar_param(p.spec, ParamKey::Gain) == 0.5);
}

TEST_CASE("scale from reference dimensions requires an exact integer ratio") {
    REQUIRE(estimate_scale(32, 32, std::make_pair(64, 64)) == 2);
    REQUIRE(estimate_scale(32, 32, std::make_pair(128, 128)) == 4);
    REQUIRE(estimate_scale(40, 30, std::make_pair(120, 90)) == 3);

    REQUIRE_THROWS_AS(estimate_scale(32, 32, std::make_pair(65, 65)), ScaleEstimateError);
    REQUIRE_THROWS_AS(estimate_scale(32, 32, std::make_pair(160, 160)), ScaleEstimateError);
    REQUIRE_THROWS_AS(estimate_scale(32, 32, std::make_pair(32, 32)), ScaleEstimateError);
    REQUIRE_THROWS_AS(estimate_scale(32, 30, std::make_pair(64, 64)), ScaleEstimateError);
}

TEST_CASE("blind scale reads the spectral cutoff of an upsampled frame") {
    Image clean = textured(137);
    for (int s : {2, 4}) {
        Image small = apply_lowres(clean, s);
        Image up = invert_lowres(small, s);
        Features f = extract_features(up);
        REQUIRE(estimate_scale(f.width, f.height, std::nullopt, &f) == s);
    }
}

TEST_CASE("predictions are deterministic and structurally valid") {
    Image clean = textured(139);
    std::vector<Image> degs;
    degs.push_back(quantize_to_8bit(apply_haze(clean, 0.85, 0.4)));
    degs.push_back(quantize_to_8bit(apply_lowlight(clean, 3.0, 0.06, Mat3::identity())));
    degs.push_back(quantize_to_8bit(apply_blur(clean, 2.5)));
    degs.push_back(quantize_to_8bit(apply_lowres(clean, 2)));

    for (const Image& d : degs) {
        Prediction a = predict(d);
        Prediction b = predict(d);
        REQUIRE(a.spec.type == b.spec.type);
        REQUIRE(a.confidence == b.confidence);
        REQUIRE(spec_to_json(a.spec) == spec_to_json(b.spec));
        if (!a.invalid) REQUIRE(spec_is_valid(a.spec));
        REQUIRE(a.confidence >= 0.0);
        REQUIRE(a.confidence <= 1.0);
        REQUIRE_FALSE(a.features.empty());
    }
}

TEST_CASE("feature extraction reports stable diagnostics") {
    Image clean = textured(149);
    Features f = extract_features(clean);
    REQUIRE(f.width == 128);
    REQUIRE(f.height == 128);
    REQUIRE(f.mean_luma > 0.2);
    REQUIRE(f.mean_luma < 0.8);
    REQUIRE(f.cutoff > 0.0);
    REQUIRE(f.cutoff <= 0.5);
    REQUIRE(f.highfreq_ratio >= 0.0);
    REQUIRE(f.highfreq_ratio <= 1.0);
    REQUIRE(f.profile.rho.size() == f.profile.log_amp.size());

    Features flat = extract_features(constant_image(32, 32, 0.5));
    REQUIRE(flat.luma_var < 1e-12);
}
