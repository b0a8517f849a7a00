#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "duforge/dataset.hpp"
#include "duforge/degrade.hpp"
#include "duforge/metrics.hpp"
#include "duforge/process_restorer.hpp"
#include "duforge/restore.hpp"
#include "duforge/rng.hpp"

using namespace duforge;

namespace {

Image noise_image(int w, int h, uint64_t seed) {
    Rng rng(seed);
    Image img(w, h);
    for (double& x : img.data) x = 0.1 + 0.8 * rng.uniform();
    return img;
}

Image constant_image(int w, int h, double v) {
    Image img(w, h);
    for (double& x : img.data) x = v;
    return img;
}

double max_abs_diff(const Image& a, const Image& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

} // namespace

TEST_CASE("haze inversion is exact above the transmission floor") {
    Image clean = noise_image(24, 18, 3);
    Image deg = apply_haze(clean, 0.85, 0.4);
    Image back = invert_haze(deg, 0.85, 0.4);
    REQUIRE(max_abs_diff(back, clean) < 1e-12);

    ParamMap t(24, 18, 0.5);
    for (int y = 0; y < 18; ++y)
        for (int x = 0; x < 24; ++x) t.at(x, y) = 0.2 + 0.7 * ((x + y) % 7) / 7.0;
    Image deg_map = apply_haze(clean, 0.7, ParamValue(t));
    Image back_map = invert_haze(deg_map, 0.7, ParamValue(t));
    REQUIRE(max_abs_diff(back_map, clean) < 1e-12);
}

TEST_CASE("haze inversion floors the transmission") {
    Image deg = constant_image(4, 4, 0.6);
    // t below the floor is accepted and divides by the floor instead
    Image a = invert_haze(deg, 0.8, 0.05);
    Image b = invert_haze(deg, 0.8, 0.1);
    REQUIRE(max_abs_diff(a, b) == 0.0);

    RestoreOptions opts;
    opts.t_floor = 0.3;
    Image c = invert_haze(deg, 0.8, 0.2, opts);
    Image d = invert_haze(deg, 0.8, 0.3, opts);
    REQUIRE(max_abs_diff(c, d) == 0.0);

    RestoreOptions bad;
    bad.t_floor = 0.0;
    REQUIRE_THROWS_AS(invert_haze(deg, 0.8, 0.5, bad), std::invalid_argument);
    bad.t_floor = 0.6;
    REQUIRE_THROWS_AS(invert_haze(deg, 0.8, 0.5, bad), std::invalid_argument);
}

TEST_CASE("haze inversion clamps output unless told otherwise") {
    // degraded value above the haze model's reachable range inverts past 1
    Image deg = constant_image(2, 2, 1.0);
    Image clamped = invert_haze(deg, 0.6, 0.5);
    REQUIRE(clamped.at(0, 0, 0) == 1.0);

    RestoreOptions opts;
    opts.clamp_output = false;
    Image raw = invert_haze(deg, 0.6, 0.5, opts);
    REQUIRE_THAT(raw.at(0, 0, 0), Catch::Matchers::WithinAbs(1.4, 1e-12));
}

TEST_CASE("lowlight inversion recovers the clean image") {
    Image clean = noise_image(20, 20, 7);
    Mat3 cam = Mat3::identity();
    cam.m[1] = 0.08;
    cam.m[3] = -0.05;
    Image deg = apply_lowlight(clean, 2.4, 0.2, cam);
    Image back = invert_lowlight(deg, 2.4, 0.2, cam);
    REQUIRE(max_abs_diff(back, clean) < 1e-9);
}

TEST_CASE("lowlight inversion tolerates out-of-domain parameters") {
    Image deg = constant_image(4, 4, 0.3);
    // gamma = 1 sits outside the forward domain yet must invert cleanly
    REQUIRE_NOTHROW(invert_lowlight(deg, 1.0, 0.5, Mat3::identity()));
    REQUIRE_THROWS_AS(invert_lowlight(deg, 2.0, 0.0, Mat3::identity()), std::invalid_argument);

    Mat3 singular{};  // all zeros
    REQUIRE_THROWS_AS(invert_lowlight(deg, 2.0, 0.5, singular), RestorationError);
}

TEST_CASE("wiener deblur leaves constants almost unchanged") {
    Image flat = constant_image(32, 32, 0.5);

    RestoreOptions exact;
    exact.wiener_lambda = 0.0;
    Image r0 = invert_blur_wiener(flat, 2.0, exact);
    REQUIRE(max_abs_diff(r0, flat) < 1e-9);

    // default lambda shrinks the zero-frequency response by 1/(1+lambda)
    Image r1 = invert_blur_wiener(flat, 2.0);
    REQUIRE(max_abs_diff(r1, flat) < 2e-3);
    REQUIRE(max_abs_diff(r1, flat) > 1e-5);
}

TEST_CASE("wiener deblur sharpens a blurred procedural image") {
    Image clean = quantize_to_8bit(procedural_clean(17, 96, 96));
    for (double sigma : {0.8, 1.5, 2.0}) {
        Image deg = apply_blur(clean, sigma);
        Image back = invert_blur_wiener(deg, sigma);
        REQUIRE(psnr(back, clean) > psnr(deg, clean));
        REQUIRE(psnr(back, clean) >= 28.0);
    }
}

TEST_CASE("wiener deblur accepts any positive sigma and validates lambda") {
    Image img = noise_image(16, 16, 1);
    REQUIRE_NOTHROW(invert_blur_wiener(img, 9.5));
    RestoreOptions bad;
    bad.wiener_lambda = -0.1;
    REQUIRE_THROWS_AS(invert_blur_wiener(img, 1.0, bad), std::invalid_argument);
    bad.wiener_lambda = 1.5;
    REQUIRE_THROWS_AS(invert_blur_wiener(img, 1.0, bad), std::invalid_argument);
}

TEST_CASE("lowres inversion upsamples to the stated target") {
    Image clean = noise_image(48, 32, 13);
    Image small = apply_lowres(clean, 2);
    Image up = invert_lowres(small, 2, 48, 32);
    REQUIRE(up.width == 48);
    REQUIRE(up.height == 32);
    REQUIRE(psnr(up, clean) > 20.0);

    Image up2 = invert_lowres(small, 2);
    REQUIRE(up2.data == up.data);

    REQUIRE_THROWS_AS(invert_lowres(small, 2, 50, 32), std::invalid_argument);
    REQUIRE_THROWS_AS(invert_lowres(small, 5, 120, 80), std::invalid_argument);
}

TEST_CASE("restore dispatches on the spec and honors options") {
    Image clean = noise_image(24, 24, 19);
    DegradationSpec haze{DegradationType::Haze,
                        {{ParamKey::AtmosphericLight, 0.9}, {ParamKey::Transmission, 0.45}}};
    Image deg = degrade(clean, haze);
    Image back = restore(deg, haze);
    REQUIRE(max_abs_diff(back, clean) < 1e-12);

    DegradationSpec ll{DegradationType::LowLight,
                       {{ParamKey::Gamma, 2.0},
                        {ParamKey::Gain, 0.3},
                        {ParamKey::CamIntrinsics, Mat3::identity()}}};
    Image dark = degrade(clean, ll);
    REQUIRE(max_abs_diff(restore(dark, ll), clean) < 1e-9);

    DegradationSpec lr{DegradationType::LowRes, {{ParamKey::Scale, 3.0}}};
    Image small = degrade(clean, lr);
    Image up = restore(small, lr);
    REQUIRE(up.width == 24);
    REQUIRE(up.height == 24);
}

TEST_CASE("external restorer round trips through a child process") {
    Image clean = noise_image(16, 16, 23);
    Image deg = quantize_to_8bit(apply_haze(clean, 0.8, 0.5));
    DegradationSpec spec{DegradationType::Haze,
                        {{ParamKey::AtmosphericLight, 0.8}, {ParamKey::Transmission, 0.5}}};

    // The child answers with the degraded path itself: an identity restorer.
    std::string script =
        "read line; path=$(printf '%s' \"$line\" | sed 's/.*degraded_path\":\"//;s/\".*//'); "
        "printf '{\"restored_path\":\"%s\"}\\n' \"$path\"";
    Image out = run_process_restorer(script, deg, spec, 30.0);
    REQUIRE(out.width == deg.width);
    REQUIRE(max_abs_diff(out, deg) == 0.0);

    SECTION("silent child times out") {
        REQUIRE_THROWS_AS(run_process_restorer("sleep 30", deg, spec, 0.3), RestorationError);
    }
    SECTION("garbage reply is a restoration error") {
        REQUIRE_THROWS_AS(run_process_restorer("read line; echo not-json", deg, spec, 10.0),
                          RestorationError);
    }
}

TEST_CASE("restorer registry maps names to functions") {
    REQUIRE_THROWS_AS(register_external_restorer("x", RestorerFn{}), std::invalid_argument);

    std::string name = "test_restorer_registry_entry";
    register_external_restorer(name, [](const Image& d, const DegradationSpec&) { return d; });
    REQUIRE(has_external_restorer(name));
    REQUIRE_FALSE(has_external_restorer("no_such_restorer"));

    Image img(4, 4);
    DegradationSpec spec{DegradationType::Blur, {{ParamKey::Sigma, 1.0}}};
    Image out = run_external_restorer(name, img, spec);
    REQUIRE(out.data == img.data);
    REQUIRE_THROWS_AS(run_external_restorer("no_such_restorer", img, spec),
                      std::invalid_argument);
}
