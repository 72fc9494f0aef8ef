#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "cimcs/rng.hpp"
#include "cimcs/types.hpp"

namespace cimcs {

/**
 * Coupling seen by the solvers: w -> J*w with J zero-diagonal, plus the
 * Zeeman vector. Dense instances wrap the CouplingForm matrix; the MRI
 * path supplies a transform chain instead.
 */
struct CouplingOp {
    int N = 0;
    const VectorXd* hz = nullptr;
    std::function<VectorXd(const VectorXd&)> apply;
};

CouplingOp make_coupling_op(const CouplingForm& cf);

struct MfzState {
    VectorXd c;  // normalized amplitudes
    VectorXd e;  // error-feedback amplitudes
    double t = 0.0;
};

enum class LocalFieldMode { Continuous, Binarized };

// How much trajectory to keep: None, Decimated (<= 500 samples/spin), Full.
enum class TraceMode { None, Decimated, Full };

struct MfzTraceSample {
    int step;
    double t;
    VectorXd c;
    VectorXd e;
};

using MfzTrace = std::vector<MfzTraceSample>;

// Sampling stride so a run keeps at most `cap` samples per spin.
int trace_stride(int n_steps, int cap = 500);

// c_r ~ N(0, 1e-4), e_r = 1, t = 0.
MfzState init_mfz(int N, Rng& rng);

// h = J(R o 1/4(c + sqrt(tau))) + (sqrt(tau)/2) hz
VectorXd local_field_continuous(const CouplingForm& coupling, const VectorXd& R,
                                const VectorXd& c, double tau);
VectorXd local_field_continuous(const CouplingOp& op, const VectorXd& R,
                                const VectorXd& c, double tau);

// h_BN = (sqrt(tau)/2)(J(R o sigma) + hz), sigma = Heaviside(c) from caller
VectorXd local_field_binarized(const CouplingForm& coupling, const VectorXd& R,
                               const VectorXi& sigma, double tau);
VectorXd local_field_binarized(const CouplingOp& op, const VectorXd& R,
                               const VectorXi& sigma, double tau);

/**
 * One forward-Euler step:
 *   dc/dt = (-1 + p - c^2)c + K j e (R o h - eta^2 sqrt(tau)/4)
 *   de/dt = -beta (c^2 - tau) e
 * With params.mfz_loss_minus_j the loss term becomes (-1 + p - j - c^2)c.
 * `h` is the local field for the chosen mode, computed by the caller.
 */
MfzState mfz_step(const MfzState& state, double p, const HyperParams& params,
                  double eta, const VectorXd& R, const VectorXd& h);

struct MfzRunResult {
    MfzState state;
    VectorXi sigma;    // Heaviside(final c), Heaviside(0) := 0
    MfzTrace trace;
    double min_e = 0;  // smallest e_r seen at any step
};

/**
 * Full CIM call: init, n_steps Euler steps with the pump schedule
 * (t restarts at 0), support from the sign of the final amplitudes.
 */
MfzRunResult run_mfz(const CouplingOp& op, const VectorXd& R, const HyperParams& params,
                     double eta, LocalFieldMode mode, Rng& rng,
                     TraceMode trace = TraceMode::None);
MfzRunResult run_mfz(const CouplingForm& coupling, const VectorXd& R,
                     const HyperParams& params, double eta, LocalFieldMode mode,
                     Rng& rng, TraceMode trace = TraceMode::None);

}  // namespace cimcs
