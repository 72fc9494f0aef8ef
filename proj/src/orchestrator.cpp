#include "cimcs/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "cimcs/model.hpp"

namespace cimcs {

double pump_schedule(double t, double p_thr, double d) {
    return (p_thr - d) + 2.0 * d / (1.0 + std::exp(-(t - 4.0) / 2.0));
}

double eta_schedule(int i, double eta_init, double eta_end, int velo) {
    if (velo < 1) throw config_error("eta_schedule: velo must be >= 1");
    const double linear = eta_init * (1.0 - static_cast<double>(i) / velo);
    return std::max(linear, eta_end);
}

VectorXi extract_support(const VectorXd& amplitudes) {
    VectorXi sigma(amplitudes.size());
    for (Eigen::Index r = 0; r < amplitudes.size(); ++r)
        sigma[r] = amplitudes[r] > 0.0 ? 1 : 0;
    return sigma;
}

Backend backend_from_string(const std::string& name) {
    if (name == "mfz-cn") return Backend::MfzCN;
    if (name == "mfz-bn") return Backend::MfzBN;
    if (name == "pp") return Backend::PositiveP;
    throw config_error("unknown backend '" + name + "' (use mfz-bn, mfz-cn or pp)");
}

std::string backend_name(Backend b) {
    switch (b) {
        case Backend::MfzCN: return "mfz-cn";
        case Backend::MfzBN: return "mfz-bn";
        case Backend::PositiveP: return "pp";
    }
    throw config_error("backend_name: bad enum value");
}

VectorXd SolverProblem::apply_coupling(const VectorXd& w) const {
    return gram_diag.cwiseProduct(w) - apply_gram(w);
}

CouplingOp SolverProblem::coupling() const {
    CouplingOp op;
    op.N = N;
    op.hz = &hz;
    op.apply = [this](const VectorXd& w) -> VectorXd { return apply_coupling(w); };
    return op;
}

double SolverProblem::objective_at(const VectorXd& R, const VectorXi& sigma,
                                   double lambda) const {
    check_binary(sigma, "objective_at");
    const VectorXd w = R.cwiseProduct(sigma.cast<double>());
    return 0.5 * w.dot(apply_gram(w)) - hz.dot(w) + lambda * sigma.sum();
}

double SolverProblem::hamiltonian_at(const VectorXd& R, const VectorXi& sigma,
                                     double lambda) const {
    const VectorXd w = R.cwiseProduct(sigma.cast<double>());
    return objective_at(R, sigma, lambda) - 0.5 * gram_diag.dot(w.cwiseAbs2());
}

double SolverProblem::rmse_at(const VectorXd& R, const VectorXi& sigma) const {
    if (!has_truth) return std::numeric_limits<double>::quiet_NaN();
    return rmse(R, sigma, x_true, xi_true);
}

double SolverProblem::hamming_at(const VectorXi& sigma) const {
    if (!has_truth) return std::numeric_limits<double>::quiet_NaN();
    return hamming_loss(sigma, xi_true);
}

SolverProblem make_problem(const ProblemInstance& inst) {
    auto keep = std::make_shared<const ProblemInstance>(inst);
    SolverProblem prob;
    prob.N = keep->N();
    prob.hz = keep->A.transpose() * keep->y;
    prob.gram_diag = keep->A.colwise().squaredNorm();
    prob.apply_gram = [keep](const VectorXd& w) -> VectorXd {
        return keep->A.transpose() * (keep->A * w);
    };
    prob.cdp = [keep](const VectorXi& sigma, const VectorXd& R_prev, CdpMethod method,
                      const HyperParams& params) -> VectorXd {
        return cdp_minimize(*keep, sigma, R_prev, method, params);
    };
    if (keep->has_truth()) {
        prob.has_truth = true;
        prob.x_true = keep->x_true;
        prob.xi_true = keep->xi_true;
    }
    return prob;
}

SolverProblem make_problem(MatrixXd G_full, VectorXd hz) {
    if (G_full.rows() != G_full.cols() || G_full.rows() != hz.size())
        throw input_error("make_problem: G/hz shape mismatch");
    auto keep = std::make_shared<const MatrixXd>(std::move(G_full));
    auto keep_hz = std::make_shared<const VectorXd>(std::move(hz));
    SolverProblem prob;
    prob.N = static_cast<int>(keep_hz->size());
    prob.hz = *keep_hz;
    prob.gram_diag = keep->diagonal();
    prob.apply_gram = [keep](const VectorXd& w) -> VectorXd { return (*keep) * w; };
    prob.cdp = [keep, keep_hz](const VectorXi& sigma, const VectorXd& R_prev,
                               CdpMethod method, const HyperParams& params) -> VectorXd {
        return cdp_minimize(*keep, *keep_hz, sigma, R_prev, method, params);
    };
    return prob;
}

SolverProblem make_problem(int N, std::function<VectorXd(const VectorXd&)> apply_gram,
                           VectorXd gram_diag, VectorXd hz) {
    if (gram_diag.size() != N || hz.size() != N)
        throw input_error("make_problem: diag/hz length mismatch");
    auto keep_hz = std::make_shared<const VectorXd>(std::move(hz));
    SolverProblem prob;
    prob.N = N;
    prob.hz = *keep_hz;
    prob.gram_diag = std::move(gram_diag);
    prob.apply_gram = std::move(apply_gram);
    auto gram = prob.apply_gram;  // copy shares captured state
    prob.cdp = [gram, keep_hz](const VectorXi& sigma, const VectorXd& R_prev,
                               CdpMethod method, const HyperParams& params) -> VectorXd {
        (void)method;  // transform-chain problems always use conjugate gradients
        return cdp_minimize_operator(gram, *keep_hz, sigma, R_prev,
                                     CdpMethod::ConjugateGradient, params);
    };
    return prob;
}

VectorXd default_r_init(const SolverProblem& prob) { return prob.hz; }

CimCallResult run_cim(const CouplingOp& op, Backend backend, const VectorXd& R,
                      const HyperParams& params, double eta, Rng& rng, TraceMode trace) {
    CimCallResult out;
    if (backend == Backend::PositiveP) {
        PpRunResult r = run_pp(op, R, params, eta, rng, trace);
        out.sigma = std::move(r.sigma);
        out.e_final = std::move(r.state.e);
        out.amplitude = std::move(r.mu_tilde);
        out.min_e = r.min_e;
        out.pp_trace = std::move(r.trace);
    } else {
        const LocalFieldMode mode = backend == Backend::MfzBN ? LocalFieldMode::Binarized
                                                              : LocalFieldMode::Continuous;
        MfzRunResult r = run_mfz(op, R, params, eta, mode, rng, trace);
        out.sigma = std::move(r.sigma);
        out.e_final = std::move(r.state.e);
        out.amplitude = std::move(r.state.c);
        out.min_e = r.min_e;
        out.mfz_trace = std::move(r.trace);
    }
    return out;
}

double median(VectorXd v) {
    if (v.size() == 0) return std::numeric_limits<double>::quiet_NaN();
    const Eigen::Index n = v.size();
    std::sort(v.data(), v.data() + n);
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

AlternatingResult alternating_minimize(const SolverProblem& prob, Backend backend,
                                       const HyperParams& params, VectorXd R_init,
                                       Rng& rng, const AlternateOptions& opts) {
    params.validate();
    if (R_init.size() != prob.N)
        throw input_error("alternating_minimize: R_init length mismatch");

    AlternatingResult res;
    res.R = std::move(R_init);
    res.sigma = VectorXi::Zero(prob.N);
    res.history.reserve(params.velo + 1);
    const CouplingOp op = prob.coupling();

    double best_energy = std::numeric_limits<double>::infinity();
    VectorXd best_R = res.R;
    VectorXi best_sigma = res.sigma;

    for (int i = 0; i <= params.velo; ++i) {
        const double eta = eta_schedule(i, params.eta_init, params.eta_end, params.velo);
        const double lambda = eta * eta / 2.0;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const bool want_trace = opts.observer && opts.observer->trace_at.count(i) > 0;
            CimCallResult cim = run_cim(op, backend, res.R, params, eta, rng,
                                        want_trace ? opts.observer->mode : TraceMode::None);
            if (want_trace) {
                if (backend == Backend::PositiveP)
                    opts.observer->pp_traces[i] = std::move(cim.pp_trace);
                else
                    opts.observer->mfz_traces[i] = std::move(cim.mfz_trace);
            }
            res.sigma = std::move(cim.sigma);
            res.R = prob.cdp(res.sigma, res.R, opts.method, params);

            AlternationRecord rec;
            rec.i = i;
            rec.eta = eta;
            rec.sigma = res.sigma;
            rec.R = res.R;
            rec.hamiltonian = prob.objective_at(res.R, res.sigma, lambda);
            rec.rmse = prob.rmse_at(res.R, res.sigma);
            rec.hamming = prob.hamming_at(res.sigma);
            rec.min_e = cim.min_e;
            rec.median_e = median(cim.e_final);
            rec.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (rec.hamiltonian < best_energy) {
                best_energy = rec.hamiltonian;
                best_R = res.R;
                best_sigma = res.sigma;
            }
            res.history.push_back(std::move(rec));
        } catch (const divergence_error& e) {
            res.failed = true;
            res.fail_alternation = i;
            res.fail_reason = e.what();
            break;
        }
    }

    if (opts.track_best && std::isfinite(best_energy)) {
        res.R = best_R;
        res.sigma = best_sigma;
    }
    return res;
}

double AlternatingResult::min_hamiltonian() const {
    if (history.empty()) return std::numeric_limits<double>::quiet_NaN();
    double best = history.front().hamiltonian;
    for (const auto& rec : history) best = std::min(best, rec.hamiltonian);
    return best;
}

double AlternatingResult::final_rmse() const {
    return history.empty() ? std::numeric_limits<double>::quiet_NaN() : history.back().rmse;
}

double AlternatingResult::final_hamming() const {
    return history.empty() ? std::numeric_limits<double>::quiet_NaN()
                           : history.back().hamming;
}

std::vector<std::string> history_csv_columns() {
    return {"trial", "i", "eta", "hamiltonian", "rmse", "hamming", "seconds"};
}

void append_history_rows(CsvWriter& w, int trial,
                         const std::vector<AlternationRecord>& history) {
    for (const auto& rec : history)
        w.row({CsvWriter::cell(trial), CsvWriter::cell(rec.i), CsvWriter::cell(rec.eta),
               CsvWriter::cell(rec.hamiltonian), CsvWriter::cell(rec.rmse),
               CsvWriter::cell(rec.hamming), CsvWriter::cell(rec.seconds)});
}

}  // namespace cimcs
