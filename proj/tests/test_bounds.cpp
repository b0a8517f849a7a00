#include <catch2/catch_amalgamated.hpp>

#include "duforge/bounds.hpp"

using namespace duforge;

TEST_CASE("decomposition gap shrinks linearly with the bin width") {
    // identical trial streams, two grids
    auto coarse = measure_decomposition_gap(0.05, QuantGrid(0.1), 4000, 77);
    auto fine = measure_decomposition_gap(0.05, QuantGrid(0.01), 4000, 77);

    REQUIRE(coarse.mean_gap > 0.0);
    REQUIRE(fine.mean_gap > 0.0);
    REQUIRE(fine.mean_gap < 0.25 * coarse.mean_gap);

    // the surrogate tracks the exact loss closely at fine resolution
    REQUIRE(std::fabs(fine.mean_exact - fine.mean_approx) < 0.05);
}

TEST_CASE("decomposition gap vanishes when the model sits on the value") {
    // with the model mean pinned to the true value, the quadratic term is zero
    // and the exact bin mass is the widest possible, so the gap is small and
    // strictly positive
    auto rep = measure_decomposition_gap(0.05, QuantGrid(0.01), 2000, 3, 0.0);
    REQUIRE(rep.mean_gap > 0.0);
    REQUIRE(rep.mean_gap < 0.01);
}

TEST_CASE("decomposition harness rejects bad arguments") {
    REQUIRE_THROWS_AS(measure_decomposition_gap(0.0, QuantGrid(0.01), 100), std::invalid_argument);
    REQUIRE_THROWS_AS(measure_decomposition_gap(0.05, QuantGrid(0.01), 0), std::invalid_argument);
}

TEST_CASE("risk harness meets its divergence budget exactly") {
    auto rep = measure_risk_bounds(0.02, 1.0, QuantGrid(0.05), 20000, 5);
    // per-trial divergence is -log(0.2); the confused count is floored
    REQUIRE(rep.mean_kl <= 0.02 + 1e-12);
    REQUIRE(rep.mean_kl > 0.02 - 2.0 * 1.61 / 20000);
    REQUIRE(rep.bound_cls == std::sqrt(2.0 * 0.02));
}

TEST_CASE("classification and regression risks sit under their bounds") {
    for (double eps : {0.005, 0.02, 0.08}) {
        for (double delta : {0.01, 0.05, 0.1}) {
            auto rep = measure_risk_bounds(eps, 1.0, QuantGrid(delta), 20000, 11);
            CAPTURE(eps, delta);
            REQUIRE(rep.r_cls <= rep.bound_cls);
            REQUIRE(rep.r_reg <= rep.bound_reg);
        }
    }
}

TEST_CASE("zero divergence leaves only quantization error") {
    for (double delta : {0.01, 0.05, 0.1}) {
        auto rep = measure_risk_bounds(0.0, 1.0, QuantGrid(delta), 20000, 13);
        CAPTURE(delta);
        REQUIRE(rep.r_cls == 0.0);
        REQUIRE(rep.mean_kl == 0.0);
        REQUIRE(rep.r_reg <= delta * delta / 4.0);
        REQUIRE(rep.r_reg > 0.0);
    }
}

TEST_CASE("risk harness scales with the value range") {
    auto unit = measure_risk_bounds(0.0, 1.0, QuantGrid(0.1), 10000, 17);
    auto wide = measure_risk_bounds(0.0, 2.5, QuantGrid(0.1), 10000, 17);
    // same normalized stream, so squared error scales by d_max^2
    REQUIRE_THAT(wide.r_reg, Catch::Matchers::WithinRel(unit.r_reg * 2.5 * 2.5, 1e-9));
    REQUIRE(wide.r_reg <= 0.1 * 0.1 * 2.5 * 2.5 / 4.0);
}

TEST_CASE("risk harness rejects impossible configurations") {
    REQUIRE_THROWS_AS(measure_risk_bounds(-0.1, 1.0, QuantGrid(0.1), 100), std::invalid_argument);
    REQUIRE_THROWS_AS(measure_risk_bounds(0.02, 0.0, QuantGrid(0.1), 100), std::invalid_argument);
    REQUIRE_THROWS_AS(measure_risk_bounds(0.02, 1.0, QuantGrid(0.1), 0), std::invalid_argument);
    // a budget larger than one confused trial per trial cannot be met
    REQUIRE_THROWS_AS(measure_risk_bounds(2.0, 1.0, QuantGrid(0.1), 100), std::invalid_argument);
}
