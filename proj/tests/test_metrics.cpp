#include <catch2/catch_amalgamated.hpp>

#include "duforge/dataset.hpp"
#include "duforge/metrics.hpp"
#include "duforge/rng.hpp"

using namespace duforge;

namespace {

Image constant_image(int w, int h, double v) {
    Image img(w, h);
    for (double& x : img.data) x = v;
    return img;
}

DegradationSpec haze_spec(double A, double t) {
    return {DegradationType::Haze,
            {{ParamKey::AtmosphericLight, A}, {ParamKey::Transmission, t}}};
}

DegradationSpec blur_spec(double sigma) {
    return {DegradationType::Blur, {{ParamKey::Sigma, sigma}}};
}

} // namespace

TEST_CASE("mse and psnr hand values") {
    Image a = constant_image(8, 8, 0.0);
    Image b = constant_image(8, 8, 0.1);
    REQUIRE_THAT(mse(a, b), Catch::Matchers::WithinAbs(0.01, 1e-15));
    REQUIRE_THAT(psnr(a, b), Catch::Matchers::WithinAbs(20.0, 1e-9));
    REQUIRE(psnr(a, b) == psnr(b, a));

    // identical frames hit the cap instead of infinity
    REQUIRE(psnr(a, a) == 100.0);

    Image c = constant_image(4, 4, 0.0);
    REQUIRE_THROWS_AS(mse(a, c), std::invalid_argument);
}

TEST_CASE("ssim closed forms on constant images") {
    Image a = constant_image(16, 16, 0.5);
    Image b = constant_image(16, 16, 0.6);
    REQUIRE_THAT(ssim(a, b), Catch::Matchers::WithinAbs(0.9838709677419355, 1e-9));
    REQUIRE_THAT(ssim(a, a), Catch::Matchers::WithinAbs(1.0, 1e-9));
    REQUIRE(ssim(a, b) == ssim(b, a));
}

TEST_CASE("ssim penalizes inverted structure") {
    Image a = quantize_to_8bit(procedural_clean(3, 32, 32));
    Image inv = a;
    for (double& v : inv.data) v = 1.0 - v;
    double s = ssim(a, inv);
    REQUIRE(s < 1.0);
    REQUIRE_THAT(ssim(inv, a), Catch::Matchers::WithinAbs(s, 1e-12));
    REQUIRE(s >= -1.0);

    REQUIRE_THROWS_AS(ssim(a, constant_image(16, 16, 0.5)), std::invalid_argument);
    REQUIRE_THROWS_AS(ssim(constant_image(8, 8, 0.5), constant_image(8, 8, 0.5)),
                      std::invalid_argument);
}

TEST_CASE("ssim orders reconstructions by fidelity") {
    Image clean = quantize_to_8bit(procedural_clean(7, 48, 48));
    Rng rng(99);
    Image mild = clean, harsh = clean;
    for (double& v : mild.data) v = clamp01(v + 0.02 * (rng.uniform() - 0.5));
    for (double& v : harsh.data) v = clamp01(v + 0.4 * (rng.uniform() - 0.5));
    REQUIRE(ssim(mild, clean) > ssim(harsh, clean));
}

TEST_CASE("pearson correlation hand values") {
    REQUIRE_THAT(pearson({1, 2, 3, 4}, {2, 4, 6, 8}), Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(pearson({1, 2, 3, 4}, {8, 6, 4, 2}), Catch::Matchers::WithinAbs(-1.0, 1e-12));
    REQUIRE_THAT(pearson({1, 2, 3}, {5, 5, 5}), Catch::Matchers::WithinAbs(0.0, 1e-12));
    REQUIRE_THROWS_AS(pearson({1.0}, {2.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(pearson({1, 2}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("matching structure scores per-key deviations") {
    SampleScore s = score_understanding(haze_spec(0.9, 0.5), haze_spec(0.8, 0.45));
    REQUIRE(s.type_correct);
    REQUIRE(s.keys_correct);
    REQUIRE(s.joint_correct);
    REQUIRE_THAT(s.p_abs.at(ParamKey::AtmosphericLight),
                 Catch::Matchers::WithinAbs(0.1, 1e-12));
    REQUIRE_THAT(s.p_abs.at(ParamKey::Transmission), Catch::Matchers::WithinAbs(0.05, 1e-12));
    REQUIRE_THAT(s.p_rel.at(ParamKey::AtmosphericLight),
                 Catch::Matchers::WithinAbs(0.1 / 0.8, 1e-12));
    REQUIRE_THAT(s.p_rel.at(ParamKey::Transmission),
                 Catch::Matchers::WithinAbs(0.05 / 0.45, 1e-12));
}

TEST_CASE("wrong type collapses to the worst-case penalty") {
    SampleScore s = score_understanding(blur_spec(2.0), haze_spec(0.8, 0.45));
    REQUIRE_FALSE(s.type_correct);
    REQUIRE_FALSE(s.joint_correct);
    // penalties read as if the prediction were all zeros
    REQUIRE(s.p_abs.at(ParamKey::AtmosphericLight) == 0.8);
    REQUIRE(s.p_abs.at(ParamKey::Transmission) == 0.45);
    REQUIRE(s.p_rel.at(ParamKey::AtmosphericLight) == 1.0);
    REQUIRE(s.p_rel.at(ParamKey::Transmission) == 1.0);
}

TEST_CASE("right type with a broken key set is still a structural failure") {
    DegradationSpec pred = haze_spec(0.8, 0.45);
    pred.params.erase(ParamKey::Transmission);
    SampleScore s = score_understanding(pred, haze_spec(0.8, 0.45));
    REQUIRE(s.type_correct);
    REQUIRE_FALSE(s.keys_correct);
    REQUIRE_FALSE(s.joint_correct);
    REQUIRE(s.p_rel.at(ParamKey::AtmosphericLight) == 1.0);
    REQUIRE(s.p_rel.at(ParamKey::Transmission) == 1.0);
}

TEST_CASE("camera matrices score by mean absolute entry deviation") {
    Mat3 truth_cam = Mat3::identity();
    Mat3 pred_cam = Mat3::identity();
    pred_cam.m[0] = 1.09;  // nine entries, one off by 0.09
    DegradationSpec t{DegradationType::LowLight,
                      {{ParamKey::Gamma, 2.0},
                       {ParamKey::Gain, 0.1},
                       {ParamKey::CamIntrinsics, truth_cam}}};
    DegradationSpec p = t;
    p.params[ParamKey::CamIntrinsics] = pred_cam;
    SampleScore s = score_understanding(p, t);
    REQUIRE_THAT(s.p_abs.at(ParamKey::CamIntrinsics),
                 Catch::Matchers::WithinAbs(0.01, 1e-12));
}

TEST_CASE("scalar transmission predictions broadcast against a truth map") {
    ParamMap t(2, 2);
    t.at(0, 0) = 0.2;
    t.at(1, 0) = 0.4;
    t.at(0, 1) = 0.6;
    t.at(1, 1) = 0.8;
    DegradationSpec truth{DegradationType::Haze,
                          {{ParamKey::AtmosphericLight, 0.8}, {ParamKey::Transmission, t}}};
    SampleScore s = score_understanding(haze_spec(0.8, 0.5), truth);
    // |0.5-0.2|+|0.5-0.4|+|0.5-0.6|+|0.5-0.8| over 4
    REQUIRE_THAT(s.p_abs.at(ParamKey::Transmission), Catch::Matchers::WithinAbs(0.2, 1e-12));
}

TEST_CASE("aggregate reproduces hand-computed accuracies") {
    std::vector<SampleScore> rows;
    rows.push_back(score_understanding(haze_spec(0.8, 0.45), haze_spec(0.8, 0.45)));
    rows.push_back(score_understanding(blur_spec(2.0), haze_spec(0.8, 0.45)));
    rows.push_back(score_understanding(blur_spec(1.0), blur_spec(1.5)));
    rows.push_back(score_understanding(blur_spec(3.0), blur_spec(3.0)));

    EvalReport rep = aggregate(rows);
    REQUIRE(rep.sample_count == 4);
    REQUIRE_THAT(rep.type_accuracy, Catch::Matchers::WithinAbs(0.75, 1e-12));
    REQUIRE_THAT(rep.joint_accuracy, Catch::Matchers::WithinAbs(0.75, 1e-12));
    REQUIRE(rep.joint_accuracy <= rep.type_accuracy);

    // haze: tp 1, fn 1 -> recall 1/2, precision 1 -> f1 2/3
    // blur: tp 2, fp 1 -> recall 1, precision 2/3 -> f1 4/5
    // lowlight and lowres have no mass -> f1 0
    double expect_f1 = (2.0 / 3.0 + 4.0 / 5.0 + 0.0 + 0.0) / 4.0;
    REQUIRE_THAT(rep.type_macro_f1, Catch::Matchers::WithinAbs(expect_f1, 1e-12));

    REQUIRE(rep.p_abs_by_key.count(ParamKey::Sigma) == 1);
    REQUIRE_THAT(rep.p_abs_by_key.at(ParamKey::Sigma),
                 Catch::Matchers::WithinAbs((3.0 + 0.5 + 0.0) / 3.0, 1e-12));

    REQUIRE_THROWS_AS(aggregate({}), std::invalid_argument);
}

TEST_CASE("joint accuracy never exceeds type accuracy") {
    Rng rng(41);
    std::vector<SampleScore> rows;
    for (int i = 0; i < 50; ++i) {
        DegradationSpec truth = haze_spec(0.8, 0.45);
        DegradationSpec pred =
            rng.uniform() < 0.5 ? haze_spec(0.7, 0.5) : blur_spec(1.0 + rng.uniform());
        if (rng.uniform() < 0.3) pred.params.erase(pred.params.begin()->first);
        rows.push_back(score_understanding(pred, truth));
    }
    EvalReport rep = aggregate(rows);
    REQUIRE(rep.joint_accuracy <= rep.type_accuracy);
}
