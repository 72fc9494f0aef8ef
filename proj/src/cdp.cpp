#include "cimcs/cdp.hpp"

#include <cmath>
#include <string>

namespace cimcs {

std::vector<int> active_indices(const VectorXi& sigma) {
    check_binary(sigma, "active_indices");
    std::vector<int> idx;
    idx.reserve(sigma.size());
    for (Eigen::Index r = 0; r < sigma.size(); ++r)
        if (sigma[r] == 1) idx.push_back(static_cast<int>(r));
    return idx;
}

QuadraticSubproblem build_subproblem(const ProblemInstance& inst, const VectorXi& sigma) {
    if (sigma.size() != inst.N()) throw input_error("build_subproblem: sigma length mismatch");
    QuadraticSubproblem sub;
    sub.active = active_indices(sigma);
    const int k = sub.size();
    if (k == 0) return sub;
    MatrixXd Aact(inst.M(), k);
    for (int c = 0; c < k; ++c) Aact.col(c) = inst.A.col(sub.active[c]);
    sub.G = Aact.transpose() * Aact;
    sub.b = Aact.transpose() * inst.y;
    return sub;
}

QuadraticSubproblem build_subproblem(const MatrixXd& G_full, const VectorXd& hz,
                                     const VectorXi& sigma) {
    if (G_full.rows() != G_full.cols()) throw input_error("build_subproblem: G not square");
    if (sigma.size() != G_full.rows() || hz.size() != G_full.rows())
        throw input_error("build_subproblem: length mismatch");
    QuadraticSubproblem sub;
    sub.active = active_indices(sigma);
    const int k = sub.size();
    if (k == 0) return sub;
    sub.G.resize(k, k);
    sub.b.resize(k);
    for (int c = 0; c < k; ++c) {
        sub.b[c] = hz[sub.active[c]];
        for (int r = 0; r < k; ++r) sub.G(r, c) = G_full(sub.active[r], sub.active[c]);
    }
    return sub;
}

VectorXd jacobi_solve(const QuadraticSubproblem& sub, VectorXd R0, double dt_c,
                      int iters) {
    const int k = sub.size();
    if (R0.size() != k) throw input_error("jacobi_solve: R0 length mismatch");
    if (k == 0) return R0;
    const VectorXd D = sub.G.diagonal();
    for (int r = 0; r < k; ++r)
        if (D[r] == 0.0)
            throw input_error("jacobi_solve: singular diagonal at active index " +
                              std::to_string(sub.active[r]));
    VectorXd R = std::move(R0);
    for (int it = 0; it < iters; ++it) {
        const VectorXd offdiag = sub.G * R - D.cwiseProduct(R);
        R = (1.0 - dt_c) * R + dt_c * (sub.b - offdiag).cwiseQuotient(D);
    }
    return R;
}

VectorXd cg_solve_operator(const std::function<VectorXd(const VectorXd&)>& applyG,
                           const VectorXd& b, VectorXd R0, int max_iters, double tol,
                           CgInfo* info) {
    CgInfo local;
    VectorXd x = std::move(R0);
    VectorXd r = b - applyG(x);
    VectorXd p = r;
    double rs = r.squaredNorm();
    const double bnorm = b.norm();
    const double stop = tol * (bnorm > 0.0 ? bnorm : 1.0);
    for (int it = 0; it < max_iters && std::sqrt(rs) > stop; ++it) {
        const VectorXd Gp = applyG(p);
        const double curv = p.dot(Gp);
        if (!(curv > 0.0)) {
            local.breakdown = true;
            break;
        }
        const double alpha = rs / curv;
        x += alpha * p;
        r -= alpha * Gp;
        const double rs_new = r.squaredNorm();
        p = r + (rs_new / rs) * p;
        rs = rs_new;
        local.iterations = it + 1;
    }
    local.rel_residual = bnorm > 0.0 ? std::sqrt(rs) / bnorm : std::sqrt(rs);
    if (info) *info = local;
    return x;
}

VectorXd cg_solve(const QuadraticSubproblem& sub, VectorXd R0, int max_iters,
                  double tol, CgInfo* info) {
    if (R0.size() != sub.size()) throw input_error("cg_solve: R0 length mismatch");
    if (sub.empty()) {
        if (info) *info = CgInfo{};
        return R0;
    }
    return cg_solve_operator([&sub](const VectorXd& v) -> VectorXd { return sub.G * v; },
                             sub.b, std::move(R0), max_iters, tol, info);
}

namespace {

VectorXd scatter_solution(const VectorXd& R_prev, const std::vector<int>& active,
                          const VectorXd& R_active) {
    VectorXd R = R_prev;
    for (size_t c = 0; c < active.size(); ++c) R[active[c]] = R_active[c];
    return R;
}

VectorXd gather(const VectorXd& R, const std::vector<int>& active) {
    VectorXd v(active.size());
    for (size_t c = 0; c < active.size(); ++c) v[c] = R[active[c]];
    return v;
}

VectorXd solve_subproblem(const QuadraticSubproblem& sub, const VectorXd& R_prev,
                          CdpMethod method, const HyperParams& params) {
    const VectorXd R0 = gather(R_prev, sub.active);
    if (method == CdpMethod::Jacobi)
        return jacobi_solve(sub, R0, params.dt_c, params.jacobi_iters);
    return cg_solve(sub, R0, params.cg_max_iters, params.cg_tol);
}

}  // namespace

VectorXd cdp_minimize(const ProblemInstance& inst, const VectorXi& sigma,
                      const VectorXd& R_prev, CdpMethod method,
                      const HyperParams& params) {
    if (R_prev.size() != inst.N()) throw input_error("cdp_minimize: R_prev length mismatch");
    const QuadraticSubproblem sub = build_subproblem(inst, sigma);
    if (sub.empty()) return R_prev;
    return scatter_solution(R_prev, sub.active, solve_subproblem(sub, R_prev, method, params));
}

VectorXd cdp_minimize(const MatrixXd& G_full, const VectorXd& hz, const VectorXi& sigma,
                      const VectorXd& R_prev, CdpMethod method,
                      const HyperParams& params) {
    if (R_prev.size() != G_full.rows()) throw input_error("cdp_minimize: R_prev length mismatch");
    const QuadraticSubproblem sub = build_subproblem(G_full, hz, sigma);
    if (sub.empty()) return R_prev;
    return scatter_solution(R_prev, sub.active, solve_subproblem(sub, R_prev, method, params));
}

VectorXd cdp_minimize_operator(const std::function<VectorXd(const VectorXd&)>& applyG_full,
                               const VectorXd& hz, const VectorXi& sigma,
                               const VectorXd& R_prev, CdpMethod method,
                               const HyperParams& params) {
    const Eigen::Index N = R_prev.size();
    if (sigma.size() != N || hz.size() != N)
        throw input_error("cdp_minimize_operator: length mismatch");
    const std::vector<int> active = active_indices(sigma);
    if (active.empty()) return R_prev;
    if (method == CdpMethod::Jacobi)
        throw config_error("cdp_minimize_operator: damped Jacobi needs an assembled matrix");

    auto applyRestricted = [&](const VectorXd& v) -> VectorXd {
        VectorXd full = VectorXd::Zero(N);
        for (size_t c = 0; c < active.size(); ++c) full[active[c]] = v[c];
        const VectorXd Gv = applyG_full(full);
        VectorXd out(active.size());
        for (size_t c = 0; c < active.size(); ++c) out[c] = Gv[active[c]];
        return out;
    };
    const VectorXd b = gather(hz, active);
    const VectorXd R0 = gather(R_prev, active);
    const VectorXd sol =
        cg_solve_operator(applyRestricted, b, R0, params.cg_max_iters, params.cg_tol);
    return scatter_solution(R_prev, active, sol);
}

}  // namespace cimcs
