#include "cimcs/solver_pp.hpp"

#include <cmath>

#include "cimcs/orchestrator.hpp"

namespace cimcs {

NoiseDraw make_noise_draw(int N, Rng& rng) { return {rng.gauss_vector(N)}; }

PpState init_pp(int N) {
    if (N < 1) throw input_error("init_pp: N must be >= 1");
    PpState s;
    s.mu = VectorXd::Zero(N);
    s.n = VectorXd::Zero(N);
    s.m = VectorXd::Zero(N);
    s.e = VectorXd::Ones(N);
    s.t = 0.0;
    return s;
}

VectorXd measured_amplitude(const PpState& state, const NoiseDraw& noise,
                            const HyperParams& params) {
    if (params.j <= 0.0) throw config_error("measured_amplitude: j must be positive");
    if (noise.w.size() != state.mu.size())
        throw input_error("measured_amplitude: noise length mismatch");
    const double scale = std::sqrt(params.g2 / (4.0 * params.j * params.dt));
    return state.mu + scale * noise.w;
}

VectorXd local_field_pp(const CouplingOp& op, const VectorXd& R,
                        const VectorXd& mu_tilde, double tau) {
    if (R.size() != op.N || mu_tilde.size() != op.N)
        throw input_error("local_field_pp: length mismatch");
    const double rt = std::sqrt(tau);
    const VectorXd w = R.array() * 0.5 * (mu_tilde.array() + rt);
    return op.apply(w) + rt * (*op.hz);
}

VectorXd local_field_pp(const CouplingForm& coupling, const VectorXd& R,
                        const VectorXd& mu_tilde, double tau) {
    return local_field_pp(make_coupling_op(coupling), R, mu_tilde, tau);
}

PpState pp_step(const PpState& state, double p, const HyperParams& params,
                double eta, const VectorXd& R, const VectorXd& h,
                const NoiseDraw& noise) {
    const Eigen::Index N = state.mu.size();
    if (R.size() != N || h.size() != N || noise.w.size() != N)
        throw input_error("pp_step: length mismatch");

    const double g2 = params.g2;
    const double j = params.j;
    const double dt = params.dt;
    const double rt = std::sqrt(params.tau);
    const double thresh = rt * eta * eta / 4.0;
    const double sdt = std::sqrt(dt);
    const VectorXd mu_tilde = measured_amplitude(state, noise, params);

    PpState out;
    out.mu.resize(N);
    out.n.resize(N);
    out.m.resize(N);
    out.e.resize(N);
    for (Eigen::Index r = 0; r < N; ++r) {
        const double mu = state.mu[r];
        const double n = state.n[r];
        const double m = state.m[r];
        const double e = state.e[r];
        const double mu2 = mu * mu;
        const double mn2 = (m + n) * (m + n);

        const double inj = params.K * j * e * (R[r] * h[r] - thresh);
        const double drift_mu = -(1.0 - p + j) * mu - mu * (mu2 + 2.0 * g2 * n + g2 * m) + inj;
        const double diff_mu = std::sqrt(j * g2) * (m + n) * noise.w[r];
        out.mu[r] = mu + dt * drift_mu + sdt * diff_mu;

        out.n[r] = n + dt * (-2.0 * (1.0 + j) * n + 2.0 * p * m -
                             2.0 * mu2 * (2.0 * n + m) - j * mn2);
        out.m[r] = m + dt * (-2.0 * (1.0 + j) * m + 2.0 * p * n -
                             2.0 * mu2 * (2.0 * m + n) + p - (mu2 + g2 * m) - j * mn2);

        const double mt = mu_tilde[r];
        out.e[r] = e + dt * (-params.beta * (mt * mt - params.tau) * e);

        if (!std::isfinite(out.mu[r]) || !std::isfinite(out.n[r]) ||
            !std::isfinite(out.m[r]) || !std::isfinite(out.e[r]))
            throw divergence_error("pp_step: non-finite value at spin " + std::to_string(r),
                                   static_cast<int>(r));
    }
    out.t = state.t + dt;
    return out;
}

PpRunResult run_pp(const CouplingOp& op, const VectorXd& R, const HyperParams& params,
                   double eta, Rng& rng, TraceMode trace) {
    params.validate();
    PpRunResult res;
    PpState s = init_pp(op.N);
    res.min_e = 1.0;
    res.mu_tilde = s.mu;

    const int stride = trace == TraceMode::Full ? 1 : trace_stride(params.n_steps);
    auto record = [&](int step, const PpState& st, const VectorXd& mt) {
        if (trace == TraceMode::None) return;
        if (step % stride == 0 || step == params.n_steps)
            res.trace.push_back({step, st.t, st.mu, mt, st.n, st.m, st.e});
    };
    record(0, s, s.mu);

    for (int step = 0; step < params.n_steps; ++step) {
        const double p = pump_schedule(s.t, params.p_thr, params.d);
        const NoiseDraw noise = make_noise_draw(op.N, rng);
        const VectorXd mu_tilde = measured_amplitude(s, noise, params);
        const VectorXd h = local_field_pp(op, R, mu_tilde, params.tau);
        s = pp_step(s, p, params, eta, R, h, noise);
        res.min_e = std::min(res.min_e, s.e.minCoeff());
        res.mu_tilde = mu_tilde;
        for (Eigen::Index r = 0; r < s.mu.size(); ++r)
            if (std::abs(s.mu[r]) > params.mu_abort)
                throw divergence_error("run_pp: |mu| exceeded " +
                                           std::to_string(params.mu_abort) + " at spin " +
                                           std::to_string(r),
                                       static_cast<int>(r));
        record(step + 1, s, mu_tilde);
    }

    res.sigma.resize(op.N);
    for (int r = 0; r < op.N; ++r) res.sigma[r] = res.mu_tilde[r] > 0.0 ? 1 : 0;
    res.state = std::move(s);
    return res;
}

PpRunResult run_pp(const CouplingForm& coupling, const VectorXd& R,
                   const HyperParams& params, double eta, Rng& rng, TraceMode trace) {
    return run_pp(make_coupling_op(coupling), R, params, eta, rng, trace);
}

}  // namespace cimcs
