#pragma once

#include <functional>
#include <vector>

#include "cimcs/types.hpp"

namespace cimcs {

// Normal equations restricted to the active support: G R = b with
// G = Gram of the active columns (full diagonal, plus any smoothness terms
// already baked into a supplied operator) and b the Zeeman vector on the
// support.
struct QuadraticSubproblem {
    MatrixXd G;
    VectorXd b;
    std::vector<int> active;

    bool empty() const { return active.empty(); }
    int size() const { return static_cast<int>(active.size()); }
};

std::vector<int> active_indices(const VectorXi& sigma);

QuadraticSubproblem build_subproblem(const ProblemInstance& inst, const VectorXi& sigma);
// G_full must carry its full diagonal (it is the quadratic form itself, not a
// zero-diagonal coupling matrix).
QuadraticSubproblem build_subproblem(const MatrixXd& G_full, const VectorXd& hz,
                                     const VectorXi& sigma);

// Damped Jacobi sweeps: R <- (1-dt_c) R + dt_c * (b - offdiag(G) R) / diag(G).
VectorXd jacobi_solve(const QuadraticSubproblem& sub, VectorXd R0, double dt_c,
                      int iters);

struct CgInfo {
    int iterations = 0;
    bool breakdown = false;
    double rel_residual = 0.0;
};

VectorXd cg_solve(const QuadraticSubproblem& sub, VectorXd R0, int max_iters,
                  double tol, CgInfo* info = nullptr);

// Same iteration with G supplied as a callable, for operators too large to
// assemble.
VectorXd cg_solve_operator(const std::function<VectorXd(const VectorXd&)>& applyG,
                           const VectorXd& b, VectorXd R0, int max_iters, double tol,
                           CgInfo* info = nullptr);

enum class CdpMethod { Jacobi, ConjugateGradient };

// Full-length update: active entries solve the subproblem started from
// R_prev's values on the support; entries with sigma_r = 0 are returned
// untouched.
VectorXd cdp_minimize(const ProblemInstance& inst, const VectorXi& sigma,
                      const VectorXd& R_prev, CdpMethod method,
                      const HyperParams& params);
VectorXd cdp_minimize(const MatrixXd& G_full, const VectorXd& hz, const VectorXi& sigma,
                      const VectorXd& R_prev, CdpMethod method,
                      const HyperParams& params);
// applyG_full acts on full-length vectors; the restriction to the support is
// formed by zero-padding, applying, and selecting (P G P^T).
VectorXd cdp_minimize_operator(const std::function<VectorXd(const VectorXd&)>& applyG_full,
                               const VectorXd& hz, const VectorXi& sigma,
                               const VectorXd& R_prev, CdpMethod method,
                               const HyperParams& params);

}  // namespace cimcs
