#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "cimcs/cdp.hpp"
#include "cimcs/io.hpp"
#include "cimcs/rng.hpp"
#include "cimcs/solver_mfz.hpp"
#include "cimcs/solver_pp.hpp"
#include "cimcs/types.hpp"

namespace cimcs {

// p(t) = (p_thr - d) + 2d / (1 + exp(-(t-4)/2)); p(4) = p_thr, limit p_thr + d.
double pump_schedule(double t, double p_thr, double d);

// eta_i = max(eta_init * (1 - i/velo), eta_end); reaches the floor at i = velo.
double eta_schedule(int i, double eta_init, double eta_end, int velo);

// sigma_r = 1 iff amplitude_r > 0 (zero maps off).
VectorXi extract_support(const VectorXd& amplitudes);

enum class Backend { MfzCN, MfzBN, PositiveP };

Backend backend_from_string(const std::string& name);  // mfz-cn / mfz-bn / pp
std::string backend_name(Backend b);

/**
 * What the alternation loop needs from a problem, independent of how the
 * quadratic form is realized (dense Gram from an instance, an assembled
 * matrix, or a transform chain applied matrix-free).
 *
 * `apply_gram` is the FULL-diagonal form G (so x'Gx = ||A(sigma o R)||^2-ish);
 * the solvers' zero-diagonal coupling is derived as J w = diag o w - G w.
 * Closures own their resources (shared_ptr captures), so the struct is
 * freely copyable.
 */
struct SolverProblem {
    int N = 0;
    VectorXd hz;         // A^T y (or Re(A^dagger y))
    VectorXd gram_diag;  // diagonal of the quadratic form
    std::function<VectorXd(const VectorXd&)> apply_gram;
    // (sigma, R_prev, method, params) -> new R, off-support entries kept
    std::function<VectorXd(const VectorXi&, const VectorXd&, CdpMethod, const HyperParams&)>
        cdp;
    bool has_truth = false;
    VectorXd x_true;
    VectorXi xi_true;

    VectorXd apply_coupling(const VectorXd& w) const;  // zero-diagonal J w
    // View of this problem for the solvers; valid while the problem lives.
    CouplingOp coupling() const;

    // 1/2 w'Gw - hz.w + lambda |sigma|, w = sigma o R  (bounded fit energy)
    double objective_at(const VectorXd& R, const VectorXi& sigma, double lambda) const;
    // Same minus the diagonal half-term: the multilinear Ising energy.
    double hamiltonian_at(const VectorXd& R, const VectorXi& sigma, double lambda) const;
    double rmse_at(const VectorXd& R, const VectorXi& sigma) const;    // NaN without truth
    double hamming_at(const VectorXi& sigma) const;                    // NaN without truth
};

SolverProblem make_problem(const ProblemInstance& inst);
SolverProblem make_problem(MatrixXd G_full, VectorXd hz);
SolverProblem make_problem(int N, std::function<VectorXd(const VectorXd&)> apply_gram,
                           VectorXd gram_diag, VectorXd hz);

// Matched-filter start A^T y: nonzero wherever the observation carries
// signal, so the injection field can lift spins out of the all-off state
// (an all-zero R start is an exact fixed point of the closed loop).
VectorXd default_r_init(const SolverProblem& prob);

// One CIM call behind a uniform interface.
struct CimCallResult {
    VectorXi sigma;
    VectorXd e_final;
    VectorXd amplitude;  // final c (MFZ) or measured amplitude (Positive-P)
    double min_e = 0.0;
    MfzTrace mfz_trace;
    PpTrace pp_trace;
};

CimCallResult run_cim(const CouplingOp& op, Backend backend, const VectorXd& R,
                      const HyperParams& params, double eta, Rng& rng,
                      TraceMode trace = TraceMode::None);

// Captures full solver traces at chosen alternations (e.g. the feedback
// sweeps record alternations 2 and 20).
struct CimObserver {
    std::set<int> trace_at;
    TraceMode mode = TraceMode::Decimated;
    std::map<int, MfzTrace> mfz_traces;
    std::map<int, PpTrace> pp_traces;
};

struct AlternationRecord {
    int i = 0;
    double eta = 0.0;
    VectorXi sigma;  // support after this alternation's CIM call
    VectorXd R;      // signal after this alternation's CDP update
    double hamiltonian = 0.0;  // objective_at(R, sigma, eta^2/2)
    double rmse = 0.0;         // NaN without ground truth
    double hamming = 0.0;      // NaN without ground truth
    double seconds = 0.0;
    double min_e = 0.0;
    double median_e = 0.0;
};

struct AlternatingResult {
    VectorXd R;
    VectorXi sigma;
    std::vector<AlternationRecord> history;
    bool failed = false;
    int fail_alternation = -1;
    std::string fail_reason;

    double min_hamiltonian() const;  // over recorded alternations
    double final_rmse() const;
    double final_hamming() const;
};

struct AlternateOptions {
    CdpMethod method = CdpMethod::Jacobi;
    // Report the lowest-energy (R, sigma) seen instead of the last one.
    bool track_best = false;
    CimObserver* observer = nullptr;
};

/**
 * The alternation loop: for i = 0..velo, run the CIM back-end at eta_i to
 * pick a support, then the quadratic solver to refit the signal on it, and
 * record energy/error metrics. Back-end divergence marks the result failed
 * and stops the loop; history up to the failure is kept.
 */
AlternatingResult alternating_minimize(const SolverProblem& prob, Backend backend,
                                       const HyperParams& params, VectorXd R_init,
                                       Rng& rng, const AlternateOptions& opts = {});

// History table columns: trial,i,eta,hamiltonian,rmse,hamming,seconds.
std::vector<std::string> history_csv_columns();
void append_history_rows(CsvWriter& w, int trial,
                         const std::vector<AlternationRecord>& history);

double median(VectorXd v);  // of a copy; empty -> NaN

}  // namespace cimcs
