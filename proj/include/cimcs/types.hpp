#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cimcs {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

// Bad dimensions, non-binary support vectors, missing ground truth, ...
class input_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Inconsistent or out-of-range solver/CLI configuration.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Trajectory blew up (non-finite state or |mu| beyond the abort bound).
class divergence_error : public std::runtime_error {
public:
    divergence_error(const std::string& what, int index)
        : std::runtime_error(what), offending_index(index) {}
    int offending_index = -1;
};

/**
 * One compressed-sensing instance: y = A(xi o x) + noise.
 *
 * x_true/xi_true are empty when ground truth is unknown (e.g. instances
 * loaded from observation data only).
 */
struct ProblemInstance {
    MatrixXd A;       // M x N observation matrix
    VectorXd y;       // length M
    VectorXd x_true;  // length N or empty
    VectorXi xi_true; // length N binary, or empty
    double a = 0.0;     // sparseness ratio
    double alpha = 0.0; // compression ratio M/N
    double nu = 0.0;    // observation noise std
    std::uint64_t seed = 0;

    int N() const { return static_cast<int>(A.cols()); }
    int M() const { return static_cast<int>(A.rows()); }
    bool has_truth() const { return x_true.size() > 0 && xi_true.size() > 0; }
};

/**
 * Ising-side view of an instance: zero-diagonal coupling J and Zeeman
 * vector hz = A^T y. The solvers scale hz by the sqrt(tau) factors
 * themselves, so hz is stored unscaled.
 */
struct CouplingForm {
    MatrixXd J;   // N x N, symmetric, zero diagonal
    VectorXd hz;  // length N

    int N() const { return static_cast<int>(hz.size()); }
};

struct SupportSignalPair {
    VectorXi sigma;  // binary support
    VectorXd R;      // continuous signal
};

/**
 * Every scalar knob of the pipeline. Defaults are the paper's random-data
 * settings; the MRI path overrides K, d, velo, gamma and the eta schedule.
 */
struct HyperParams {
    double g2 = 1e-7;       // nonlinear saturation
    double j = 1.0;         // out-coupling rate
    double K = 1.0;         // injection feedback strength
    double beta = 0.2;      // error-feedback rate
    double tau = 1.0;       // target squared amplitude
    double dt = 0.02;       // time increment
    int n_steps = 1000;     // steps per CIM call (20 photon lifetimes)
    double p_thr = 1.0;     // oscillation threshold pump
    double d = 0.4;         // pump swing
    double eta_init = 0.8;  // threshold schedule start
    double eta_end = 0.18;  // threshold schedule floor
    int velo = 51;          // alternation count parameter (velo+1 alternations)
    double dt_c = 0.1;      // Jacobi damping increment
    int jacobi_iters = 100;
    int cg_max_iters = 10000;
    double cg_tol = 1e-10;
    double gamma = 1e-4;      // MRI smoothness weight
    bool mfz_loss_minus_j = false;  // variant loss term (-1+p-j-c^2)c
    double mu_abort = 100.0;        // Positive-P divergence guard

    void validate() const {
        if (!(dt > 0)) throw config_error("dt must be > 0");
        if (n_steps < 1) throw config_error("n_steps must be >= 1");
        if (!(tau > 0)) throw config_error("tau must be > 0");
        if (g2 < 0) throw config_error("g2 must be >= 0");
        if (eta_init < eta_end || eta_end < 0)
            throw config_error("need eta_init >= eta_end >= 0");
        if (velo < 1) throw config_error("velo must be >= 1");
    }
};

inline void check_binary(const VectorXi& sigma, const char* who) {
    for (Eigen::Index r = 0; r < sigma.size(); ++r)
        if (sigma[r] != 0 && sigma[r] != 1)
            throw input_error(std::string(who) + ": sigma must be 0/1");
}

}  // namespace cimcs
