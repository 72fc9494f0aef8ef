#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "cimcs/mri.hpp"
#include "cimcs/rng.hpp"

using namespace cimcs;

TEST_CASE("image flattening is row-major and invertible") {
    MatrixXd img(2, 3);
    img << 1, 2, 3,
           4, 5, 6;
    const VectorXd v = vec_image(img);
    VectorXd expect(6);
    expect << 1, 2, 3, 4, 5, 6;
    CHECK(v == expect);
    CHECK(unvec_image(v, 2, 3) == img);
    CHECK_THROWS_AS(unvec_image(v, 2, 2), input_error);
}

TEST_CASE("bilinear resampling basics") {
    // constants stay constant
    const MatrixXd c = bilinear_resize(MatrixXd::Constant(3, 5, 0.7), 7, 2);
    CHECK(c.minCoeff() == 0.7);
    CHECK(c.maxCoeff() == 0.7);

    // a step edge interpolates its midpoint exactly
    MatrixXd img(2, 2);
    img << 0, 1,
           0, 1;
    const MatrixXd out = bilinear_resize(img, 2, 3);
    CHECK(out(0, 0) == 0.0);
    CHECK(out(0, 1) == 0.5);
    CHECK(out(0, 2) == 1.0);
    CHECK(out.row(0) == out.row(1));

    // same-size resampling is the identity
    const MatrixXd ph = phantom_image(8, 8);
    CHECK(bilinear_resize(ph, 8, 8) == ph);

    // upsampling a monotone ramp stays monotone
    MatrixXd ramp(1, 4);
    ramp << 0.0, 0.1, 0.5, 1.0;
    const MatrixXd up = bilinear_resize(ramp, 1, 11);
    for (int j = 1; j < 11; ++j) CHECK(up(0, j) >= up(0, j - 1));

    CHECK_THROWS_AS(bilinear_resize(img, 0, 3), input_error);
}

TEST_CASE("wavelet transform is orthonormal and invertible") {
    Rng rng(33);
    for (auto [h, w] : {std::pair{8, 8}, std::pair{4, 8}, std::pair{16, 2}}) {
        MatrixXd img(h, w);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) img(i, j) = rng.gauss();
        const MatrixXd coeffs = haar2_forward(img);
        CHECK((haar2_inverse(coeffs) - img).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(coeffs.norm() == doctest::Approx(img.norm()).epsilon(1e-12));
    }
    CHECK_THROWS_AS(haar2_forward(MatrixXd::Zero(3, 4)), input_error);
    CHECK_THROWS_AS(haar2_inverse(MatrixXd::Zero(4, 6)), input_error);
}

TEST_CASE("constants compress to the single scaling coefficient") {
    const MatrixXd c2 = haar2_forward(MatrixXd::Constant(2, 2, 0.7));
    CHECK(c2(0, 0) == doctest::Approx(1.4).epsilon(1e-12));
    CHECK(c2(0, 1) == 0.0);
    CHECK(c2(1, 0) == 0.0);
    CHECK(c2(1, 1) == 0.0);

    const MatrixXd c4 = haar2_forward(MatrixXd::Constant(4, 4, 0.3));
    CHECK(c4(0, 0) == doctest::Approx(4.0 * 0.3).epsilon(1e-12));
    int zeros = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (c4(i, j) == 0.0) ++zeros;
    CHECK(zeros == 15);
}

TEST_CASE("sparsify keeps the advertised count and full target is lossless") {
    const MatrixXd ph = phantom_image(64, 64);
    const SparsifyResult all = sparsify_wavelet(ph, 1.0);
    CHECK((all.image - ph).cwiseAbs().maxCoeff() < 1e-12);

    const SparsifyResult sp = sparsify_wavelet(ph, 0.212);
    int nnz = 0;
    for (int i = 0; i < sp.coeffs.size(); ++i)
        if (sp.coeffs[i] != 0.0) ++nnz;
    CHECK(nnz == 868);  // round(0.212 * 4096)
    CHECK(sp.coeffs.size() == 4096);
    // kept coefficients agree with the full transform
    const VectorXd full = vec_image(haar2_forward(ph));
    for (int i = 0; i < 4096; ++i)
        if (sp.coeffs[i] != 0.0) CHECK(sp.coeffs[i] == full[i]);

    CHECK_THROWS_AS(sparsify_wavelet(ph, 0.0), input_error);
    CHECK_THROWS_AS(sparsify_wavelet(ph, 1.5), input_error);
}

TEST_CASE("sparsify breaks magnitude ties toward the lower index") {
    // two symmetric blocks produce bitwise-identical coefficient magnitudes
    MatrixXd img(4, 4);
    img << 1, 1, 0, 0,
           1, 1, 0, 0,
           0, 0, 1, 1,
           0, 0, 1, 1;
    const MatrixXd F = haar2_forward(img);
    REQUIRE(F(0, 0) == F(1, 1));  // the tie this test relies on
    REQUIRE(F(0, 0) > 0.0);

    const SparsifyResult sp = sparsify_wavelet(img, 1.0 / 16.0);  // keep one
    int nnz = 0;
    for (int i = 0; i < 16; ++i)
        if (sp.coeffs[i] != 0.0) ++nnz;
    CHECK(nnz == 1);
    CHECK(sp.coeffs[0] == F(0, 0));  // linear index 0 wins over index 5
    CHECK(sp.coeffs[5] == 0.0);
}

TEST_CASE("sampling masks are sorted, unique, deterministic") {
    const SamplingMask mask = make_mask(64, 64, 1638, 3);
    CHECK(mask.M() == 1638);
    CHECK(mask.compression() == 0.39990234375);  // 1638/4096
    CHECK(mask.indices.front() >= 0);
    CHECK(mask.indices.back() < 4096);
    for (size_t i = 1; i < mask.indices.size(); ++i)
        CHECK(mask.indices[i] > mask.indices[i - 1]);

    const SamplingMask again = make_mask(64, 64, 1638, 3);
    CHECK(again.indices == mask.indices);
    const SamplingMask other = make_mask(64, 64, 1638, 4);
    CHECK(other.indices != mask.indices);

    const SamplingMask full = make_mask(4, 4, 16, 1);
    for (int i = 0; i < 16; ++i) CHECK(full.indices[i] == i);

    CHECK_THROWS_AS(make_mask(4, 4, 17, 1), input_error);
    CHECK_THROWS_AS(make_mask(4, 4, 0, 1), input_error);
}

TEST_CASE("fully sampled unregularized chain is the identity form") {
    const MatrixXd target = sparsify_wavelet(phantom_image(16, 16), 0.1).image;
    const MriTransform t(target, make_mask(16, 16, 256, 1), 0.0);
    CHECK(t.N() == 256);
    Rng rng(44);
    const VectorXd v = rng.gauss_vector(256);
    CHECK((t.apply_fit(v) - v).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((t.apply_full(v) - v).cwiseAbs().maxCoeff() < 1e-10);

    // the bias vector is the target's own transform
    const VectorXd coeffs = vec_image(haar2_forward(target));
    CHECK((t.hz() - coeffs).cwiseAbs().maxCoeff() < 1e-10);

    // fit error vanishes on the exact solution and is 1/2||y||^2 at zero
    CHECK(t.fit_error(coeffs) < 1e-18);
    CHECK(t.fit_error(VectorXd::Zero(256)) ==
          doctest::Approx(0.5 * t.observed().squaredNorm()).epsilon(1e-12));
}

TEST_CASE("quadratic form is symmetric and the smoothness part is psd") {
    const MatrixXd target = phantom_image(16, 16);
    const MriTransform t(target, make_mask(16, 16, 100, 7), 1e-4);
    Rng rng(45);
    for (int probe = 0; probe < 5; ++probe) {
        const VectorXd u = rng.gauss_vector(256);
        const VectorXd v = rng.gauss_vector(256);
        const double uGv = u.dot(t.apply_full(v));
        const double vGu = v.dot(t.apply_full(u));
        CHECK(uGv == doctest::Approx(vGu).epsilon(1e-10));
        // gamma-weighted second-difference penalty never subtracts energy
        const double smooth = v.dot(t.apply_full(v)) - v.dot(t.apply_fit(v));
        CHECK(smooth >= -1e-12);
        // the fit part itself is psd: x' Re(A^H A) x = ||A x||^2 >= 0
        CHECK(v.dot(t.apply_fit(v)) >= -1e-12);
    }
}

TEST_CASE("assembled matrices match the matrix-free chain") {
    const MatrixXd target = phantom_image(16, 16);
    const SamplingMask mask = make_mask(16, 16, 100, 11);
    const double gamma = 1e-4;
    const MriTransform t(target, mask, gamma);
    const MriOperators ops = assemble_operators(target, mask, gamma);

    CHECK((ops.hz - t.hz()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((ops.J.diagonal() - t.diag()).cwiseAbs().maxCoeff() < 1e-10);

    Rng rng(46);
    const VectorXd v = rng.gauss_vector(256);
    CHECK((ops.J * v - t.apply_full(v)).cwiseAbs().maxCoeff() < 1e-10);

    const MatrixXd C = ops.coupling_zero_diag();
    for (int r = 0; r < 256; ++r) CHECK(C(r, r) == 0.0);
    const MatrixXd D = ops.J.diagonal().asDiagonal();
    CHECK((C + ops.J - D).cwiseAbs().maxCoeff() == 0.0);  // C == -(J - diag J)
}

TEST_CASE("transform construction validates its inputs") {
    const MatrixXd ok = phantom_image(8, 8);
    CHECK_THROWS_AS(MriTransform(phantom_image(12, 16), make_mask(12, 16, 10, 1), 0.0),
                    input_error);
    CHECK_THROWS_AS(MriTransform(ok, make_mask(16, 16, 10, 1), 0.0), input_error);
    CHECK_THROWS_AS(MriTransform(ok, make_mask(8, 8, 10, 1), -0.5), input_error);

    SamplingMask dup;
    dup.H = 8;
    dup.W = 8;
    dup.indices = {0, 3, 3, 9};
    CHECK_THROWS_AS(MriTransform(ok, dup, 0.0), input_error);
    SamplingMask oob;
    oob.H = 8;
    oob.W = 8;
    oob.indices = {0, 64};
    CHECK_THROWS_AS(MriTransform(ok, oob, 0.0), input_error);
}

TEST_CASE("shrinkage on an identity design is a soft threshold") {
    VectorXd y(4);
    y << 0.5, -0.3, 0.05, 0.0;
    const VectorXd x = lasso_init(MatrixXd::Identity(4, 4), y, 0.1);
    CHECK(x[0] == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(x[1] == doctest::Approx(-0.2).epsilon(1e-9));
    CHECK(x[2] == 0.0);
    CHECK(x[3] == 0.0);
}

TEST_CASE("zero shrinkage solves the normal equations") {
    Rng rng(47);
    MatrixXd A(8, 5);
    for (int c = 0; c < 5; ++c) A.col(c) = rng.gauss_vector(8);
    const VectorXd y = rng.gauss_vector(8);
    const VectorXd direct = A.colPivHouseholderQr().solve(y);

    const MatrixXd G = A.transpose() * A;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
    LassoOptions opts;
    opts.lambda_l1 = 0.0;
    opts.step = 1.0 / es.eigenvalues().maxCoeff();
    opts.max_iters = 200000;
    opts.tol = 1e-15;
    const VectorXd x = lasso_normal_form(
        [&G](const VectorXd& v) -> VectorXd { return G * v; }, A.transpose() * y, opts);
    CHECK((x - direct).norm() < 1e-6 * direct.norm());
}

TEST_CASE("overwhelming shrinkage returns the zero vector exactly") {
    Rng rng(48);
    MatrixXd A(6, 4);
    for (int c = 0; c < 4; ++c) A.col(c) = rng.gauss_vector(6);
    const VectorXd y = rng.gauss_vector(6);
    const double huge = 10.0 * (A.transpose() * y).cwiseAbs().maxCoeff();
    const VectorXd x = lasso_init(A, y, huge);
    CHECK(x.cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(lasso_init(A, VectorXd::Zero(5), 0.1), input_error);
}

TEST_CASE("transform problems carry the attached ground truth") {
    const SparsifyResult sp = sparsify_wavelet(phantom_image(16, 16), 0.1);
    auto t = std::make_shared<const MriTransform>(sp.image, make_mask(16, 16, 256, 1),
                                                  0.0);
    const SolverProblem prob = make_problem(t, &sp.coeffs);
    CHECK(prob.N == 256);
    CHECK(prob.has_truth);
    CHECK(prob.x_true == sp.coeffs);
    int on = 0;
    for (int r = 0; r < 256; ++r) {
        CHECK(prob.xi_true[r] == (sp.coeffs[r] != 0.0 ? 1 : 0));
        on += prob.xi_true[r];
    }
    CHECK(on == 26);  // round(0.1 * 256)

    const SolverProblem blind = make_problem(t);
    CHECK(!blind.has_truth);

    VectorXd wrong(10);
    CHECK_THROWS_AS(make_problem(t, &wrong), input_error);
    CHECK_THROWS_AS(make_problem(nullptr), input_error);
}

TEST_CASE("full sampling recovers the sparse image end to end") {
    const SparsifyResult sp = sparsify_wavelet(phantom_image(16, 16), 0.1);
    auto t = std::make_shared<const MriTransform>(sp.image, make_mask(16, 16, 256, 1),
                                                  0.0);
    const SolverProblem prob = make_problem(t, &sp.coeffs);

    HyperParams hp;
    hp.K = 1.0;  // strong feedback so the threshold push settles every spin
    hp.velo = 3;
    hp.eta_init = 0.1;
    hp.eta_end = 0.1;  // flat schedule
    AlternateOptions opts;
    opts.method = CdpMethod::ConjugateGradient;
    Rng rng(19);
    const AlternatingResult res =
        alternating_minimize(prob, Backend::MfzBN, hp, default_r_init(prob), rng, opts);
    REQUIRE(!res.failed);
    CHECK(res.final_rmse() < 1e-6);
    CHECK(res.final_hamming() == 0.0);
    CHECK(res.sigma.sum() == 26);
}

TEST_CASE("phantom is deterministic, bounded and structured") {
    const MatrixXd a = phantom_image(64, 64);
    const MatrixXd b = phantom_image(64, 64);
    CHECK(a == b);
    CHECK(a.minCoeff() >= 0.0);
    CHECK(a.maxCoeff() <= 1.0);
    CHECK(a.maxCoeff() - a.minCoeff() > 0.1);  // not flat
    const MatrixXd small = phantom_image(32, 16);
    CHECK(small.rows() == 32);
    CHECK(small.cols() == 16);
    CHECK_THROWS_AS(phantom_image(0, 4), input_error);
}
