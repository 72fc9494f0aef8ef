#include "cimcs/model.hpp"

#include <limits>

namespace cimcs {

namespace {

void check_pair(const ProblemInstance& inst, const VectorXd& R,
                const VectorXi& sigma, const char* who) {
    if (R.size() != inst.N() || sigma.size() != inst.N())
        throw input_error(std::string(who) + ": R/sigma length must equal N");
    check_binary(sigma, who);
}

}  // namespace

double hamiltonian(const ProblemInstance& inst, const VectorXd& R,
                   const VectorXi& sigma, double lambda) {
    check_pair(inst, R, sigma, "hamiltonian");
    const int N = inst.N();

    // w = sigma o R; the strict pair sum is 1/2(||Aw||^2 - sum_r ||A_r||^2 w_r^2).
    VectorXd w(N);
    int support = 0;
    for (int r = 0; r < N; ++r) {
        w[r] = sigma[r] ? R[r] : 0.0;
        support += sigma[r];
    }
    const VectorXd Aw = inst.A * w;
    double diag = 0.0;
    for (int r = 0; r < N; ++r)
        if (sigma[r]) diag += inst.A.col(r).squaredNorm() * w[r] * w[r];

    const double pair = 0.5 * (Aw.squaredNorm() - diag);
    const double zeeman = inst.y.dot(Aw);
    return pair - zeeman + lambda * support;
}

double objective(const ProblemInstance& inst, const VectorXd& R,
                 const VectorXi& sigma, double lambda) {
    check_pair(inst, R, sigma, "objective");
    const int N = inst.N();
    VectorXd w(N);
    int support = 0;
    for (int r = 0; r < N; ++r) {
        w[r] = sigma[r] ? R[r] : 0.0;
        support += sigma[r];
    }
    const double fit = 0.5 * (inst.y - inst.A * w).squaredNorm();
    return fit - 0.5 * inst.y.squaredNorm() + lambda * support;
}

CouplingForm coupling_from_observation(const MatrixXd& A, const VectorXd& y) {
    if (A.size() == 0) throw input_error("coupling_from_observation: empty A");
    if (y.size() != A.rows())
        throw input_error("coupling_from_observation: y length must equal rows(A)");
    CouplingForm cf;
    cf.J = -(A.transpose() * A);
    cf.J.diagonal().setZero();
    cf.hz = A.transpose() * y;
    return cf;
}

BruteForceResult brute_force_l0rbcs(const ProblemInstance& inst, double lambda) {
    const int N = inst.N();
    if (N > 20) throw input_error("brute_force_l0rbcs: N > 20 refused");

    BruteForceResult best;
    best.R = VectorXd::Zero(N);
    best.sigma = VectorXi::Zero(N);
    best.H = 0.0;  // empty support: fit term equals the -1/2||y||^2 shift

    VectorXi sigma(N);
    for (std::uint32_t bits = 1; bits < (1u << N); ++bits) {
        int support = 0;
        for (int r = 0; r < N; ++r) {
            sigma[r] = (bits >> r) & 1u;
            support += sigma[r];
        }

        MatrixXd As(inst.M(), support);
        int c = 0;
        for (int r = 0; r < N; ++r)
            if (sigma[r]) As.col(c++) = inst.A.col(r);

        // Least squares on the active columns, pseudo-inverse on rank loss.
        MatrixXd G = As.transpose() * As;
        VectorXd b = As.transpose() * inst.y;
        VectorXd Rs;
        Eigen::LLT<MatrixXd> llt(G);
        if (llt.info() == Eigen::Success) {
            Rs = llt.solve(b);
            if (!Rs.allFinite()) Rs.setZero();
        }
        if (Rs.size() == 0 || !((G * Rs - b).norm() <= 1e-8 * (1.0 + b.norm()))) {
            Rs = As.completeOrthogonalDecomposition().pseudoInverse() * inst.y;
        }

        const double H = 0.5 * (inst.y - As * Rs).squaredNorm() -
                         0.5 * inst.y.squaredNorm() + lambda * support;

        const int best_support = best.sigma.sum();
        bool better = H < best.H - 1e-15;
        if (!better && std::abs(H - best.H) <= 1e-15) {
            if (support < best_support) better = true;
            else if (support == best_support) {
                for (int r = 0; r < N; ++r) {
                    if (sigma[r] != best.sigma[r]) {
                        better = sigma[r] < best.sigma[r];
                        break;
                    }
                }
            }
        }
        if (better) {
            best.H = H;
            best.sigma = sigma;
            best.R = VectorXd::Zero(N);
            int cc = 0;
            for (int r = 0; r < N; ++r)
                if (sigma[r]) best.R[r] = Rs[cc++];
        }
    }
    return best;
}

double rmse(const VectorXd& R, const VectorXi& sigma, const VectorXd& x_true,
            const VectorXi& xi_true) {
    const Eigen::Index N = R.size();
    if (sigma.size() != N || x_true.size() != N || xi_true.size() != N)
        throw input_error("rmse: length mismatch");
    double s = 0.0;
    for (Eigen::Index r = 0; r < N; ++r) {
        const double d = (sigma[r] ? R[r] : 0.0) - (xi_true[r] ? x_true[r] : 0.0);
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(N));
}

double rmse(const ProblemInstance& inst, const VectorXd& R, const VectorXi& sigma) {
    if (!inst.has_truth()) throw input_error("rmse: instance has no ground truth");
    return rmse(R, sigma, inst.x_true, inst.xi_true);
}

double hamming_loss(const VectorXi& sigma, const VectorXi& xi_true) {
    if (sigma.size() != xi_true.size()) throw input_error("hamming_loss: length mismatch");
    check_binary(sigma, "hamming_loss");
    check_binary(xi_true, "hamming_loss");
    double s = 0.0;
    for (Eigen::Index r = 0; r < sigma.size(); ++r) s += std::abs(sigma[r] - xi_true[r]);
    return s / static_cast<double>(sigma.size());
}

}  // namespace cimcs
