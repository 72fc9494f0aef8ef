#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "cimcs/orchestrator.hpp"
#include "cimcs/types.hpp"

namespace cimcs {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

// Row-major flattening shared by every image <-> vector conversion here.
VectorXd vec_image(const MatrixXd& img);
MatrixXd unvec_image(const VectorXd& v, int H, int W);

// Center-aligned bilinear resampling with edge clamping.
MatrixXd bilinear_resize(const MatrixXd& img, int outH, int outW);

// Full multi-level orthonormal 2-D Haar transform (Mallat layout); dims
// must be powers of two. inverse(forward(x)) == x to machine precision.
MatrixXd haar2_forward(const MatrixXd& img);
MatrixXd haar2_inverse(const MatrixXd& coeffs);

struct SparsifyResult {
    MatrixXd image;   // inverse transform of the kept coefficients
    VectorXd coeffs;  // kept coefficients, vec_image order
};

// Keeps the round(target_sparseness * N) largest-magnitude Haar
// coefficients (ties at the cutoff keep the lower linear index).
SparsifyResult sparsify_wavelet(const MatrixXd& img, double target_sparseness);

struct SamplingMask {
    int H = 0;
    int W = 0;
    std::vector<int> indices;  // sorted unique k-space positions, vec_image order

    int M() const { return static_cast<int>(indices.size()); }
    double compression() const { return static_cast<double>(M()) / (H * W); }
};

// M distinct positions drawn uniformly at random.
SamplingMask make_mask(int H, int W, int M, std::uint64_t seed);

/**
 * The undersampled-Fourier-of-wavelet-coefficients sensing chain
 * A = S F Psi^T (S mask selection, F unitary 2-D DFT, Psi orthonormal Haar)
 * applied matrix-free, plus the smoothness-regularized quadratic form
 *
 *   G = Re(A^H A) + gamma * Psi (Dv^T Dv + Dh^T Dh) Psi^T
 *
 * with Dv/Dh second differences (reflective ends) along columns/rows.
 * FFT plans execute on internal buffers: use one instance per thread.
 */
class MriTransform {
public:
    MriTransform(const MatrixXd& target_image, SamplingMask mask, double gamma);
    ~MriTransform();
    MriTransform(const MriTransform&) = delete;
    MriTransform& operator=(const MriTransform&) = delete;

    int N() const { return H_ * W_; }
    int H() const { return H_; }
    int W() const { return W_; }
    double gamma() const { return gamma_; }
    const SamplingMask& mask() const { return mask_; }
    const VectorXcd& observed() const { return y_; }  // masked k-space of the target
    const VectorXd& hz() const { return hz_; }        // Re(A^H y)
    const VectorXd& diag() const { return diag_; }    // diagonal of G

    VectorXcd forward(const VectorXd& coeffs) const;  // A x
    VectorXd apply_fit(const VectorXd& coeffs) const;   // Re(A^H A) x
    VectorXd apply_full(const VectorXd& coeffs) const;  // G x

    // 1/2 ||y - A x||^2 for reporting.
    double fit_error(const VectorXd& coeffs) const;

private:
    MatrixXcd dft2(const MatrixXd& real_img) const;
    MatrixXd idft2_masked_real(const VectorXcd& kvec) const;

    int H_, W_;
    double gamma_;
    SamplingMask mask_;
    VectorXcd y_;
    VectorXd hz_;
    VectorXd diag_;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

// Explicit matrices for small sizes (tests, direct inspection).
struct MriOperators {
    MatrixXd J;   // full-diagonal quadratic form
    VectorXd hz;
    double gamma = 0.0;
    SamplingMask mask;

    MatrixXd coupling_zero_diag() const;  // -offdiag(J): solver-side coupling
};

MriOperators assemble_operators(const MatrixXd& target_image, const SamplingMask& mask,
                                double gamma);

struct LassoOptions {
    double lambda_l1 = 3e-4;
    int max_iters = 5000;
    double tol = 1e-8;  // relative objective change
    double step = 1.0;  // 1/L; the sensing chain has operator norm <= 1
};

// Momentum-accelerated iterative shrinkage on the normal-equations form
// 1/2 x'Gx - hz.x + lambda_l1 ||x||_1.
VectorXd lasso_normal_form(const std::function<VectorXd(const VectorXd&)>& applyG,
                           const VectorXd& hz, const LassoOptions& opts);
VectorXd lasso_init(const MriTransform& t, double lambda_l1);
VectorXd lasso_init(const MatrixXd& A, const VectorXd& y, double lambda_l1);

// Alternation-ready problem over the transform chain; attaches the
// sparsified coefficients as ground truth when given.
SolverProblem make_problem(std::shared_ptr<const MriTransform> t,
                           const VectorXd* truth_coeffs = nullptr);

// Deterministic smooth test image (blobs + edges), values in [0,1].
MatrixXd phantom_image(int H, int W);

}  // namespace cimcs
