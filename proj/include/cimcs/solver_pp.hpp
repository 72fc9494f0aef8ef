#pragma once

#include <vector>

#include "cimcs/rng.hpp"
#include "cimcs/solver_mfz.hpp"
#include "cimcs/types.hpp"

namespace cimcs {

// Mean-field amplitude mu plus the second-order moments n (photon number
// fluctuation) and m (anomalous moment) of each signal mode, with the
// per-mode feedback gain e.
struct PpState {
    VectorXd mu;
    VectorXd n;
    VectorXd m;
    VectorXd e;
    double t = 0.0;
};

// One step's worth of unit Gaussians.  The same draw feeds the mu diffusion
// term and the homodyne measurement, which is what makes the feedback loop
// consistent: exactly N deviates are consumed per step.
struct NoiseDraw {
    VectorXd w;
};

NoiseDraw make_noise_draw(int N, Rng& rng);

PpState init_pp(int N);

// mu_tilde = mu + sqrt(g2/(4*j*dt)) * w.  The white-noise rate density is
// discretized over one integration window, hence the 1/sqrt(dt).
VectorXd measured_amplitude(const PpState& state, const NoiseDraw& noise,
                            const HyperParams& params);

// h = J*(R .* (mu_tilde + sqrt(tau))/2) + sqrt(tau)*hz
VectorXd local_field_pp(const CouplingOp& op, const VectorXd& R,
                        const VectorXd& mu_tilde, double tau);
VectorXd local_field_pp(const CouplingForm& coupling, const VectorXd& R,
                        const VectorXd& mu_tilde, double tau);

// Euler-Maruyama update of (mu, n, m, e) from the pre-step state.  The caller
// supplies the local field h (computed from the measured amplitude) and the
// NoiseDraw; the feedback gain update reuses the same draw through
// measured_amplitude.
PpState pp_step(const PpState& state, double p, const HyperParams& params,
                double eta, const VectorXd& R, const VectorXd& h,
                const NoiseDraw& noise);

struct PpTraceSample {
    int step;
    double t;
    VectorXd mu;
    VectorXd mu_tilde;
    VectorXd n;
    VectorXd m;
    VectorXd e;
};
using PpTrace = std::vector<PpTraceSample>;

struct PpRunResult {
    PpState state;
    VectorXi sigma;      // from the last measured amplitude: mu_tilde > 0
    VectorXd mu_tilde;   // measured amplitude of the final step
    PpTrace trace;
    double min_e = 1.0;
};

PpRunResult run_pp(const CouplingOp& op, const VectorXd& R, const HyperParams& params,
                   double eta, Rng& rng, TraceMode trace = TraceMode::None);
PpRunResult run_pp(const CouplingForm& coupling, const VectorXd& R,
                   const HyperParams& params, double eta, Rng& rng,
                   TraceMode trace = TraceMode::None);

}  // namespace cimcs
