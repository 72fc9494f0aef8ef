#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cimcs/datagen.hpp"
#include "cimcs/model.hpp"
#include "cimcs/solver_pp.hpp"

using namespace cimcs;

namespace {

CouplingForm zero_coupling(int N) {
    CouplingForm cf;
    cf.J = MatrixXd::Zero(N, N);
    cf.hz = VectorXd::Zero(N);
    return cf;
}

}  // namespace

TEST_CASE("initial state is vacuum with unit feedback gain") {
    const PpState s = init_pp(4);
    CHECK(s.mu == VectorXd::Zero(4));
    CHECK(s.n == VectorXd::Zero(4));
    CHECK(s.m == VectorXd::Zero(4));
    CHECK(s.e == VectorXd::Ones(4));
    CHECK(s.t == 0.0);
    CHECK_THROWS_AS(init_pp(0), input_error);
}

TEST_CASE("measurement is exact when the saturation vanishes") {
    PpState s = init_pp(3);
    s.mu << 1.5, -0.25, 1e-10;
    HyperParams hp;
    hp.g2 = 0.0;
    Rng rng(1);
    const NoiseDraw noise = make_noise_draw(3, rng);
    CHECK(measured_amplitude(s, noise, hp) == s.mu);
}

TEST_CASE("measurement rejects bad inputs") {
    PpState s = init_pp(3);
    HyperParams hp;
    Rng rng(1);
    const NoiseDraw noise = make_noise_draw(3, rng);
    hp.j = 0.0;
    CHECK_THROWS_AS(measured_amplitude(s, noise, hp), config_error);
    hp.j = -1.0;
    CHECK_THROWS_AS(measured_amplitude(s, noise, hp), config_error);
    hp.j = 1.0;
    const NoiseDraw short_noise = {VectorXd::Zero(2)};
    CHECK_THROWS_AS(measured_amplitude(s, short_noise, hp), input_error);
}

TEST_CASE("measurement noise has the advertised variance") {
    const int N = 100000;
    PpState s = init_pp(N);
    s.mu = VectorXd::Constant(N, 5.0);
    HyperParams hp;
    hp.g2 = 0.4;
    hp.j = 1.0;
    hp.dt = 0.1;  // g2/(4 j dt) = 1
    Rng rng(77);
    const VectorXd mt = measured_amplitude(s, make_noise_draw(N, rng), hp);
    const VectorXd dev = mt.array() - 5.0;
    const double var = dev.squaredNorm() / N;
    const double se = std::sqrt(2.0 / (N - 1));
    CHECK(std::abs(var - 1.0) < 3.0 * se);
    CHECK(std::abs(dev.mean()) < 3.0 / std::sqrt(double(N)));
}

TEST_CASE("one pump step from vacuum fills the anomalous moment only") {
    HyperParams hp;
    hp.K = 0.0;  // keep mu pinned at the origin
    const PpState s = init_pp(5);
    Rng rng(3);
    const NoiseDraw noise = make_noise_draw(5, rng);
    const PpState out =
        pp_step(s, 1.0, hp, 0.3, VectorXd::Ones(5), VectorXd::Zero(5), noise);
    CHECK(out.mu == VectorXd::Zero(5));
    CHECK(out.n == VectorXd::Zero(5));  // driven by the pre-step m, still zero
    CHECK(out.m == VectorXd::Constant(5, 0.02));
    CHECK(out.t == 0.02);
}

TEST_CASE("fluctuations feed the photon number one step later") {
    HyperParams hp;
    hp.K = 0.0;
    hp.g2 = 0.0;  // kill the diffusion term so mu stays pinned
    PpState s = init_pp(2);
    Rng rng(3);
    s = pp_step(s, 1.0, hp, 0.3, VectorXd::Ones(2), VectorXd::Zero(2),
                make_noise_draw(2, rng));
    s = pp_step(s, 1.0, hp, 0.3, VectorXd::Ones(2), VectorXd::Zero(2),
                make_noise_draw(2, rng));
    CHECK(s.n[0] > 0.0);
    CHECK(s.mu == VectorXd::Zero(2));
}

TEST_CASE("below threshold with no injection the state stays at vacuum") {
    HyperParams hp;
    hp.K = 0.0;
    PpState s = init_pp(3);
    Rng rng(9);
    for (int step = 0; step < 100; ++step)
        s = pp_step(s, 0.0, hp, 0.4, VectorXd::Ones(3), VectorXd::Zero(3),
                    make_noise_draw(3, rng));
    CHECK(s.mu == VectorXd::Zero(3));
    CHECK(s.n == VectorXd::Zero(3));
    CHECK(s.m == VectorXd::Zero(3));
    CHECK(s.t == doctest::Approx(2.0));
}

TEST_CASE("mean field decouples and saturates when g2 is zero") {
    HyperParams hp;
    hp.K = 0.0;
    hp.g2 = 0.0;
    hp.j = 1.0;
    PpState s = init_pp(2);
    s.mu << 0.3, -0.3;
    Rng rng(5);
    for (int step = 0; step < 1500; ++step)
        s = pp_step(s, 2.4, hp, 0.3, VectorXd::Zero(2), VectorXd::Zero(2),
                    make_noise_draw(2, rng));
    const double target = std::sqrt(0.4);  // (p - 1 - j) mu - mu^3 = 0
    CHECK(std::abs(s.mu[0] - target) < 1e-4);
    CHECK(std::abs(s.mu[1] + target) < 1e-4);
    CHECK(std::isfinite(s.n[0]));
    CHECK(std::isfinite(s.m[0]));
}

TEST_CASE("feedback gain is exact when the measurement is noiseless") {
    HyperParams hp;
    hp.g2 = 0.0;
    hp.K = 0.0;
    const PpState s = init_pp(1);
    Rng rng(2);
    const PpState out = pp_step(s, 1.0, hp, 0.3, VectorXd::Ones(1), VectorXd::Zero(1),
                                make_noise_draw(1, rng));
    const double expect = 1.0 + hp.dt * (-hp.beta * (0.0 - hp.tau) * 1.0);
    CHECK(out.e[0] == expect);
}

TEST_CASE("a full call consumes exactly one deviate per mode per step") {
    const ProblemInstance inst = gen_instance(7, 0.6, 0.2, 0.0, 13);
    const CouplingForm cf = coupling_from_observation(inst.A, inst.y);
    HyperParams hp;
    hp.n_steps = 50;
    Rng rng(21);
    const std::uint64_t before = rng.gauss_count();
    run_pp(cf, cf.hz, hp, 0.4, rng);
    CHECK(rng.gauss_count() - before == 50u * 7u);
}

TEST_CASE("local field reduces to the scaled bias") {
    CouplingForm cf = zero_coupling(1);
    cf.hz << -1.5;
    const VectorXd R = VectorXd::Constant(1, 3.0);
    const VectorXd mt = VectorXd::Constant(1, 0.7);
    const VectorXd h = local_field_pp(cf, R, mt, 4.0);
    CHECK(h[0] == 2.0 * -1.5);

    // mu_tilde == -sqrt(tau) zeroes the coupled term for any coupling
    const ProblemInstance inst = gen_instance(8, 0.75, 0.25, 0.0, 17);
    const CouplingForm cf2 = coupling_from_observation(inst.A, inst.y);
    const double tau = 0.15;
    const VectorXd mt2 = VectorXd::Constant(8, -std::sqrt(tau));
    const VectorXd h2 = local_field_pp(cf2, VectorXd::Ones(8), mt2, tau);
    CHECK(h2 == std::sqrt(tau) * cf2.hz);
}

TEST_CASE("matrix-free and dense local fields agree") {
    const ProblemInstance inst = gen_instance(12, 0.7, 0.3, 0.05, 23);
    const CouplingForm cf = coupling_from_observation(inst.A, inst.y);
    const CouplingOp op = make_coupling_op(cf);
    Rng rng(4);
    const VectorXd R = rng.gauss_vector(12);
    const VectorXd mt = rng.gauss_vector(12);
    CHECK(local_field_pp(cf, R, mt, 0.21) == local_field_pp(op, R, mt, 0.21));
}

TEST_CASE("step rejects mismatched lengths and flags blow-ups by spin") {
    HyperParams hp;
    PpState s = init_pp(4);
    Rng rng(6);
    const NoiseDraw noise = make_noise_draw(4, rng);
    CHECK_THROWS_AS(pp_step(s, 1.0, hp, 0.3, VectorXd::Zero(3), VectorXd::Zero(4), noise),
                    input_error);
    CHECK_THROWS_AS(pp_step(s, 1.0, hp, 0.3, VectorXd::Zero(4), VectorXd::Zero(2), noise),
                    input_error);

    s.mu[3] = 1e200;  // mu^3 overflows
    try {
        pp_step(s, 1.0, hp, 0.3, VectorXd::Zero(4), VectorXd::Zero(4), noise);
        FAIL("expected divergence_error");
    } catch (const divergence_error& err) {
        CHECK(err.offending_index == 3);
    }
}

TEST_CASE("runaway trajectories abort with the guard") {
    CouplingForm cf = zero_coupling(3);
    cf.hz = VectorXd::Ones(3);
    HyperParams hp;
    hp.mu_abort = 1e-6;
    hp.n_steps = 10;
    Rng rng(8);
    CHECK_THROWS_AS(run_pp(cf, VectorXd::Ones(3), hp, 0.0, rng), divergence_error);
}

TEST_CASE("full calls are reproducible and tracing does not disturb them") {
    const ProblemInstance inst = gen_instance(10, 0.6, 0.2, 0.05, 29);
    const CouplingForm cf = coupling_from_observation(inst.A, inst.y);
    HyperParams hp;
    hp.n_steps = 120;
    hp.tau = 0.21;
    hp.K = 0.01;

    Rng r1(14), r2(14), r3(14);
    const PpRunResult a = run_pp(cf, cf.hz, hp, 0.4, r1);
    const PpRunResult b = run_pp(cf, cf.hz, hp, 0.4, r2);
    const PpRunResult c = run_pp(cf, cf.hz, hp, 0.4, r3, TraceMode::Full);
    CHECK(a.state.mu == b.state.mu);
    CHECK(a.sigma == b.sigma);
    CHECK(a.mu_tilde == b.mu_tilde);
    CHECK(a.state.mu == c.state.mu);

    CHECK(c.trace.size() == 121);
    CHECK(c.trace.front().step == 0);
    CHECK(c.trace.back().step == 120);
    CHECK(c.trace.back().mu_tilde == a.mu_tilde);
    for (int r = 0; r < 10; ++r)
        CHECK(a.sigma[r] == (a.mu_tilde[r] > 0.0 ? 1 : 0));
    CHECK(a.min_e <= 1.0);
}

TEST_CASE("decimated traces respect the sample budget") {
    CouplingForm cf = zero_coupling(2);
    HyperParams hp;
    hp.n_steps = 1000;
    Rng rng(15);
    const PpRunResult res =
        run_pp(cf, VectorXd::Zero(2), hp, 0.0, rng, TraceMode::Decimated);
    CHECK(res.trace.size() <= 500);
    CHECK(res.trace.front().step == 0);
    CHECK(res.trace.back().step == 1000);
}
