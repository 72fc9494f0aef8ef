#include "cimcs/solver_mfz.hpp"

#include <cmath>

#include "cimcs/orchestrator.hpp"

namespace cimcs {

CouplingOp make_coupling_op(const CouplingForm& cf) {
    CouplingOp op;
    op.N = cf.N();
    op.hz = &cf.hz;
    op.apply = [&cf](const VectorXd& w) -> VectorXd { return cf.J * w; };
    return op;
}

int trace_stride(int n_steps, int cap) {
    // Recording hits steps 0, stride, 2*stride, ... plus the final step, so
    // stride = ceil(n_steps/(cap-1)) bounds the sample count by cap.
    if (n_steps < cap) return 1;
    return (n_steps + cap - 2) / (cap - 1);
}

MfzState init_mfz(int N, Rng& rng) {
    if (N < 1) throw input_error("init_mfz: N must be >= 1");
    MfzState s;
    s.c = 0.01 * rng.gauss_vector(N);  // variance 1e-4
    s.e = VectorXd::Ones(N);
    s.t = 0.0;
    return s;
}

VectorXd local_field_continuous(const CouplingOp& op, const VectorXd& R,
                                const VectorXd& c, double tau) {
    if (R.size() != op.N || c.size() != op.N)
        throw input_error("local_field_continuous: length mismatch");
    const double rt = std::sqrt(tau);
    const VectorXd w = R.array() * 0.25 * (c.array() + rt);
    return op.apply(w) + (rt / 2.0) * (*op.hz);
}

VectorXd local_field_continuous(const CouplingForm& coupling, const VectorXd& R,
                                const VectorXd& c, double tau) {
    return local_field_continuous(make_coupling_op(coupling), R, c, tau);
}

VectorXd local_field_binarized(const CouplingOp& op, const VectorXd& R,
                               const VectorXi& sigma, double tau) {
    if (R.size() != op.N || sigma.size() != op.N)
        throw input_error("local_field_binarized: length mismatch");
    const double rt = std::sqrt(tau);
    const VectorXd w = R.array() * sigma.cast<double>().array();
    return (rt / 2.0) * (op.apply(w) + *op.hz);
}

VectorXd local_field_binarized(const CouplingForm& coupling, const VectorXd& R,
                               const VectorXi& sigma, double tau) {
    return local_field_binarized(make_coupling_op(coupling), R, sigma, tau);
}

MfzState mfz_step(const MfzState& state, double p, const HyperParams& params,
                  double eta, const VectorXd& R, const VectorXd& h) {
    const Eigen::Index N = state.c.size();
    if (R.size() != N || h.size() != N || state.e.size() != N)
        throw input_error("mfz_step: length mismatch");
    if (!std::isfinite(p)) throw input_error("mfz_step: non-finite pump");

    const double rt = std::sqrt(params.tau);
    const double thresh = eta * eta / 4.0 * rt;
    const double loss = params.mfz_loss_minus_j ? (-1.0 + p - params.j) : (-1.0 + p);

    MfzState out;
    out.c.resize(N);
    out.e.resize(N);
    for (Eigen::Index r = 0; r < N; ++r) {
        const double c = state.c[r];
        const double e = state.e[r];
        const double inj = params.K * params.j * e * (R[r] * h[r] - thresh);
        out.c[r] = c + params.dt * ((loss - c * c) * c + inj);
        out.e[r] = e + params.dt * (-params.beta * (c * c - params.tau) * e);
        if (!std::isfinite(out.c[r]) || !std::isfinite(out.e[r]))
            throw divergence_error("mfz_step: non-finite amplitude at spin " +
                                       std::to_string(r),
                                   static_cast<int>(r));
    }
    out.t = state.t + params.dt;
    return out;
}

MfzRunResult run_mfz(const CouplingOp& op, const VectorXd& R, const HyperParams& params,
                     double eta, LocalFieldMode mode, Rng& rng, TraceMode trace) {
    params.validate();
    MfzRunResult res;
    MfzState s = init_mfz(op.N, rng);
    res.min_e = 1.0;

    const int stride = trace == TraceMode::Full ? 1 : trace_stride(params.n_steps);
    auto record = [&](int step, const MfzState& st) {
        if (trace == TraceMode::None) return;
        if (step % stride == 0 || step == params.n_steps)
            res.trace.push_back({step, st.t, st.c, st.e});
    };
    record(0, s);

    VectorXi sigma(op.N);
    for (int step = 0; step < params.n_steps; ++step) {
        const double p = pump_schedule(s.t, params.p_thr, params.d);
        VectorXd h;
        if (mode == LocalFieldMode::Binarized) {
            for (int r = 0; r < op.N; ++r) sigma[r] = s.c[r] > 0.0 ? 1 : 0;
            h = local_field_binarized(op, R, sigma, params.tau);
        } else {
            h = local_field_continuous(op, R, s.c, params.tau);
        }
        s = mfz_step(s, p, params, eta, R, h);
        res.min_e = std::min(res.min_e, s.e.minCoeff());
        record(step + 1, s);
    }

    res.sigma.resize(op.N);
    for (int r = 0; r < op.N; ++r) res.sigma[r] = s.c[r] > 0.0 ? 1 : 0;
    res.state = std::move(s);
    return res;
}

MfzRunResult run_mfz(const CouplingForm& coupling, const VectorXd& R,
                     const HyperParams& params, double eta, LocalFieldMode mode,
                     Rng& rng, TraceMode trace) {
    return run_mfz(make_coupling_op(coupling), R, params, eta, mode, rng, trace);
}

}  // namespace cimcs
