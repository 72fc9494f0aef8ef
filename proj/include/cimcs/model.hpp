#pragma once

#include "cimcs/types.hpp"

namespace cimcs {

/**
 * Ising-form energy of a support/signal pair:
 *
 *   H = sum_{r<r'} sum_k A_r^k A_{r'}^k R_r R_{r'} sigma_r sigma_{r'}
 *       - sum_r sum_k y^k A_r^k R_r sigma_r + lambda * ||sigma||_0
 *
 * Note the pair sum is strictly r < r': there is no diagonal quadratic
 * term, so H is multilinear in sigma (see injection-field tests).
 */
double hamiltonian(const ProblemInstance& inst, const VectorXd& R,
                   const VectorXi& sigma, double lambda);

/**
 * The fit objective the oracle and the CDP descend:
 *
 *   objective = 1/2 ||y - A(sigma o R)||^2 - 1/2 ||y||^2 + lambda ||sigma||_0
 *             = hamiltonian + 1/2 sum_r ||A_r||^2 R_r^2 sigma_r
 *
 * Bounded below by -1/2||y||^2, unlike the Ising form.
 */
double objective(const ProblemInstance& inst, const VectorXd& R,
                 const VectorXi& sigma, double lambda);

// J_{rr'} = -sum_k A_r^k A_{r'}^k for r != r', zero diagonal; hz = A^T y.
CouplingForm coupling_from_observation(const MatrixXd& A, const VectorXd& y);

struct BruteForceResult {
    VectorXd R;
    VectorXi sigma;
    double H = 0.0;  // objective() at the optimum
};

/**
 * Exhaustive ground-state search for tests: enumerates all 2^N supports,
 * least-squares fits each, and returns the objective() minimizer. Ties go
 * to the smaller support, then the lexicographically smaller sigma.
 * Refuses N > 20.
 */
BruteForceResult brute_force_l0rbcs(const ProblemInstance& inst, double lambda);

// sqrt( 1/N sum_r (R_r sigma_r - x_r xi_r)^2 ); requires ground truth.
double rmse(const VectorXd& R, const VectorXi& sigma, const VectorXd& x_true,
            const VectorXi& xi_true);
double rmse(const ProblemInstance& inst, const VectorXd& R, const VectorXi& sigma);

// 1/N sum_r |sigma_r - xi_r| over binary vectors.
double hamming_loss(const VectorXi& sigma, const VectorXi& xi_true);

}  // namespace cimcs
