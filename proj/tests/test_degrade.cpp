#include <catch2/catch_amalgamated.hpp>

#include "duforge/dataset.hpp"
#include "duforge/degrade.hpp"
#include "duforge/metrics.hpp"
#include "duforge/rng.hpp"

using namespace duforge;

namespace {

Image constant_image(int w, int h, double v) {
    Image img(w, h);
    for (double& x : img.data) x = v;
    return img;
}

Image noise_image(int w, int h, uint64_t seed) {
    Rng rng(seed);
    Image img(w, h);
    for (double& x : img.data) x = rng.uniform();
    return img;
}

double variance(const Image& img) {
    double m = mean_intensity(img), acc = 0.0;
    for (double v : img.data) acc += (v - m) * (v - m);
    return acc / static_cast<double>(img.data.size());
}

} // namespace

TEST_CASE("haze mixes toward the airlight") {
    Image clean = constant_image(4, 4, 0.4);
    Image deg = apply_haze(clean, 0.8, 0.5);
    for (double v : deg.data)
        REQUIRE_THAT(v, Catch::Matchers::WithinAbs(0.4 * 0.5 + 0.8 * 0.5, 1e-15));

    // t = 0.95 leaves the image nearly unchanged; t = 0.1 pulls it to A
    Image near_clear = apply_haze(clean, 0.9, 0.95);
    REQUIRE_THAT(near_clear.at(0, 0, 0), Catch::Matchers::WithinAbs(0.425, 1e-12));
    Image thick = apply_haze(clean, 0.9, 0.1);
    REQUIRE_THAT(thick.at(0, 0, 0), Catch::Matchers::WithinAbs(0.85, 1e-12));
}

TEST_CASE("haze accepts a per-pixel transmission map") {
    Image clean = constant_image(2, 2, 0.2);
    ParamMap t(2, 2, 0.5);
    t.at(1, 1) = 0.9;
    Image deg = apply_haze(clean, 1.0, ParamValue(t));
    REQUIRE_THAT(deg.at(0, 0, 0), Catch::Matchers::WithinAbs(0.2 * 0.5 + 0.5, 1e-15));
    REQUIRE_THAT(deg.at(1, 1, 0), Catch::Matchers::WithinAbs(0.2 * 0.9 + 0.1, 1e-15));

    ParamMap wrong(3, 2, 0.5);
    REQUIRE_THROWS_AS(apply_haze(clean, 1.0, ParamValue(wrong)), std::invalid_argument);
}

TEST_CASE("haze parameter domains are enforced") {
    Image clean = constant_image(2, 2, 0.4);
    REQUIRE_THROWS_AS(apply_haze(clean, 0.5, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_haze(clean, 1.1, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_haze(clean, 0.8, 0.05), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_haze(clean, 0.8, 0.96), std::invalid_argument);
    REQUIRE_NOTHROW(apply_haze(clean, 0.6, 0.1));
    REQUIRE_NOTHROW(apply_haze(clean, 1.0, 0.95));
}

TEST_CASE("transmission_from_depth follows Beer-Lambert with clamping") {
    ParamMap depth(2, 1);
    depth.at(0, 0) = 0.0;   // exp(0) = 1 -> clamped to 0.95
    depth.at(1, 0) = 10.0;  // exp(-10 beta) deep -> clamped to 0.1
    ParamMap t = transmission_from_depth(depth, 1.0);
    REQUIRE(t.at(0, 0) == 0.95);
    REQUIRE(t.at(1, 0) == 0.1);

    depth.at(1, 0) = 1.0;
    ParamMap t2 = transmission_from_depth(depth, 0.5);
    REQUIRE_THAT(t2.at(1, 0), Catch::Matchers::WithinAbs(std::exp(-0.5), 1e-12));
}

TEST_CASE("lowlight pipeline matches the hand-computed path") {
    // srgb 0.5 -> linear 0.21404114, x0.5 gain, identity cam, gamma 2
    Image clean = constant_image(3, 3, 0.5);
    Image deg = apply_lowlight(clean, 2.0, 0.5, Mat3::identity());
    for (double v : deg.data)
        REQUIRE_THAT(v, Catch::Matchers::WithinAbs(0.327139985695904, 1e-12));

    SECTION("gain 1 and gamma such that the curve is monotone in gamma") {
        Image a = apply_lowlight(clean, 1.2, 0.3, Mat3::identity());
        Image b = apply_lowlight(clean, 4.0, 0.3, Mat3::identity());
        // larger gamma lifts the compressed value toward 1
        REQUIRE(b.at(0, 0, 0) > a.at(0, 0, 0));
    }
}

TEST_CASE("lowlight applies the camera mix before the tone curve") {
    Image clean = constant_image(2, 2, 0.5);
    Mat3 cam = Mat3::identity();
    cam.m[0] = 0.5;  // halve red
    Image deg = apply_lowlight(clean, 2.0, 1.0, cam);
    double lin = 0.21404114048223255;
    REQUIRE_THAT(deg.at(0, 0, 0), Catch::Matchers::WithinAbs(std::sqrt(0.5 * lin), 1e-12));
    REQUIRE_THAT(deg.at(0, 0, 1), Catch::Matchers::WithinAbs(std::sqrt(lin), 1e-12));
}

TEST_CASE("lowlight parameter domains are enforced") {
    Image clean = constant_image(2, 2, 0.5);
    REQUIRE_THROWS_AS(apply_lowlight(clean, 1.0, 0.5, Mat3::identity()), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_lowlight(clean, 4.5, 0.5, Mat3::identity()), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_lowlight(clean, 2.0, 0.0, Mat3::identity()), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_lowlight(clean, 2.0, 1.5, Mat3::identity()), std::invalid_argument);

    Mat3 bad = Mat3::identity();
    bad.m[0] = 2.0;  // entry outside [-1.5, 1.5]
    REQUIRE_THROWS_AS(apply_lowlight(clean, 2.0, 0.5, bad), std::invalid_argument);
}

TEST_CASE("clamp statistics separate clean from clipped forward passes") {
    Image clean = noise_image(16, 16, 5);

    // In-domain haze can never leave [0,1]: max value is t + A(1-t) <= 1.
    ClampStats hs;
    apply_haze(clean, 0.8, 0.45, &hs);
    REQUIRE(hs.total == clean.data.size());
    REQUIRE(hs.clamped == 0);
    REQUIRE(hs.fraction() == 0.0);

    // A camera mix with a strongly negative row drives dark pixels below zero.
    Mat3 cam = Mat3::identity();
    cam.m[1] = -1.2;
    ClampStats ls;
    apply_lowlight(clean, 2.0, 1.0, cam, &ls);
    REQUIRE(ls.total == clean.data.size());
    REQUIRE(ls.clamped > 0);
    REQUIRE(ls.fraction() > 0.0);
}

TEST_CASE("blur preserves constants and the mean while shrinking variance") {
    Image flat = constant_image(12, 9, 0.37);
    Image bflat = apply_blur(flat, 2.0);
    for (double v : bflat.data) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(0.37, 1e-12));

    Image tex = noise_image(32, 32, 9);
    Image btex = apply_blur(tex, 1.5);
    // reflect boundary is mass-preserving
    REQUIRE_THAT(mean_intensity(btex), Catch::Matchers::WithinAbs(mean_intensity(tex), 1e-4));
    REQUIRE(variance(btex) < 0.5 * variance(tex));

    REQUIRE_THROWS_AS(apply_blur(tex, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_blur(tex, 8.5), std::invalid_argument);
}

TEST_CASE("blur of an impulse reproduces the kernel taps") {
    Image img(15, 15);
    for (double& v : img.data) v = 0.0;
    for (int c = 0; c < 3; ++c) img.at(7, 7, c) = 1.0;
    Image b = apply_blur(img, 1.0);
    auto k = gaussian_kernel(1.0);
    for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx)
            REQUIRE_THAT(b.at(7 + dx, 7 + dy, 0),
                         Catch::Matchers::WithinAbs(k.tap(dx, dy), 1e-12));
}

TEST_CASE("lowres downsamples by an exact integer factor") {
    Image clean = noise_image(64, 48, 11);
    Image d2 = apply_lowres(clean, 2);
    REQUIRE(d2.width == 32);
    REQUIRE(d2.height == 24);
    Image d4 = apply_lowres(clean, 4);
    REQUIRE(d4.width == 16);
    REQUIRE(d4.height == 12);

    Image flat = constant_image(30, 30, 0.61);
    Image df = apply_lowres(flat, 3);
    for (double v : df.data) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(0.61, 1e-12));

    Image odd(33, 32);
    REQUIRE_THROWS_AS(apply_lowres(odd, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_lowres(clean, 5), std::invalid_argument);
}

TEST_CASE("degrade dispatches on the spec type") {
    Image clean = noise_image(24, 24, 21);

    DegradationSpec haze{DegradationType::Haze,
                        {{ParamKey::AtmosphericLight, 0.8}, {ParamKey::Transmission, 0.5}}};
    Image via_spec = degrade(clean, haze);
    Image direct = apply_haze(clean, 0.8, 0.5);
    REQUIRE(via_spec.data == direct.data);

    DegradationSpec blur{DegradationType::Blur, {{ParamKey::Sigma, 1.25}}};
    REQUIRE(degrade(clean, blur).data == apply_blur(clean, 1.25).data);

    DegradationSpec lr{DegradationType::LowRes, {{ParamKey::Scale, 2.0}}};
    Image small = degrade(clean, lr);
    REQUIRE(small.width == 12);

    DegradationSpec ll{DegradationType::LowLight,
                       {{ParamKey::Gamma, 2.5},
                        {ParamKey::Gain, 0.1},
                        {ParamKey::CamIntrinsics, Mat3::identity()}}};
    Image dark = degrade(clean, ll);
    REQUIRE(mean_intensity(dark) < mean_intensity(clean));

    DegradationSpec missing{DegradationType::Haze, {{ParamKey::AtmosphericLight, 0.8}}};
    REQUIRE_THROWS(degrade(clean, missing));
}

TEST_CASE("scale values snap to the nearest integer factor") {
    Image clean = noise_image(24, 24, 2);
    // centroid-decoded scale like 3.005 must behave as 3
    DegradationSpec lr{DegradationType::LowRes, {{ParamKey::Scale, 3.005}}};
    Image small = degrade(clean, lr);
    REQUIRE(small.width == 8);
    DegradationSpec bad{DegradationType::LowRes, {{ParamKey::Scale, 2.5}}};
    REQUIRE_THROWS(degrade(clean, bad));
}
