#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cimcs/datagen.hpp"

using namespace cimcs;

TEST_CASE("rounding is half away from zero") {
    CHECK(round_half_away(2.5) == 3);
    CHECK(round_half_away(-2.5) == -3);
    CHECK(round_half_away(2.4) == 2);
    CHECK(round_half_away(0.5) == 1);
    CHECK(round_half_away(0.0) == 0);
}

TEST_CASE("row count follows the compression ratio") {
    CHECK(gen_instance(500, 0.6, 0.1, 0.0, 1).M() == 300);
    CHECK(gen_instance(12, 8.0 / 12.0, 0.25, 0.0, 1).M() == 8);
    CHECK(gen_instance(3, 0.5, 0.0, 0.0, 1).M() == 2);  // 1.5 rounds away
}

TEST_CASE("support size is exact") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const ProblemInstance inst = gen_instance(40, 0.5, 0.2, 0.1, seed);
        CHECK(inst.xi_true.sum() == 8);
        for (int r = 0; r < 40; ++r)
            CHECK((inst.xi_true[r] == 0 || inst.xi_true[r] == 1));
    }
    CHECK(gen_instance(10, 1.0, 1.0, 0.0, 2).xi_true.sum() == 10);
    CHECK(gen_instance(10, 1.0, 0.0, 0.0, 2).xi_true.sum() == 0);
}

TEST_CASE("noiseless observation is an exact product") {
    const ProblemInstance inst = gen_instance(30, 0.7, 0.3, 0.0, 11);
    const VectorXd w = inst.x_true.cwiseProduct(inst.xi_true.cast<double>());
    CHECK((inst.y - inst.A * w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noise level shows in the residual") {
    const ProblemInstance inst = gen_instance(200, 0.6, 0.2, 0.5, 11);
    const VectorXd w = inst.x_true.cwiseProduct(inst.xi_true.cast<double>());
    const VectorXd resid = inst.y - inst.A * w;
    const double var = resid.squaredNorm() / resid.size();
    // nu^2 = 0.25, sample variance over 120 draws: 3 SEs
    const double se = 0.25 * std::sqrt(2.0 / (resid.size() - 1));
    CHECK(std::abs(var - 0.25) < 3.0 * se);
}

TEST_CASE("entry statistics match the observation model") {
    const ProblemInstance inst = gen_instance(2000, 0.6, 0.2, 0.1, 7);
    REQUIRE(inst.M() == 1200);

    const double n_entries = 2000.0 * 1200.0;
    const double a_var = inst.A.squaredNorm() / n_entries;
    const double a_se = (1.0 / 1200.0) * std::sqrt(2.0 / (n_entries - 1));
    CHECK(std::abs(a_var - 1.0 / 1200.0) < 3.0 * a_se);

    const double x_var = inst.x_true.squaredNorm() / 2000.0;
    const double x_se = std::sqrt(2.0 / 1999.0);
    CHECK(std::abs(x_var - 1.0) < 3.0 * x_se);

    // distinct columns nearly orthogonal: |<A_r, A_r'>| has mean 0, sd 1/(M sqrt(M))
    double max_cross = 0.0;
    for (int r = 1; r < 20; ++r)
        max_cross = std::max(max_cross, std::abs(inst.A.col(0).dot(inst.A.col(r))));
    CHECK(max_cross < 6.0 / (1200.0 / std::sqrt(1200.0)));
}

TEST_CASE("same seed reproduces the instance bit for bit") {
    const ProblemInstance a = gen_instance(50, 0.6, 0.2, 0.3, 99);
    const ProblemInstance b = gen_instance(50, 0.6, 0.2, 0.3, 99);
    CHECK(a.A == b.A);
    CHECK(a.y == b.y);
    CHECK(a.x_true == b.x_true);
    CHECK(a.xi_true == b.xi_true);

    const ProblemInstance c = gen_instance(50, 0.6, 0.2, 0.3, 100);
    CHECK(a.A != c.A);
}

TEST_CASE("invalid ratios are rejected") {
    CHECK_THROWS_AS(gen_instance(10, 0.0, 0.2, 0.0, 1), input_error);
    CHECK_THROWS_AS(gen_instance(10, 1.5, 0.2, 0.0, 1), input_error);
    CHECK_THROWS_AS(gen_instance(10, 0.5, -0.1, 0.0, 1), input_error);
    CHECK_THROWS_AS(gen_instance(10, 0.5, 1.1, 0.0, 1), input_error);
    CHECK_THROWS_AS(gen_instance(10, 0.5, 0.2, -0.1, 1), input_error);
    CHECK_THROWS_AS(gen_instance(0, 0.5, 0.2, 0.0, 1), input_error);
}
