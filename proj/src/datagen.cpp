#include "cimcs/datagen.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "cimcs/rng.hpp"

namespace cimcs {

long long round_half_away(double v) {
    return static_cast<long long>(v < 0 ? std::ceil(v - 0.5) : std::floor(v + 0.5));
}

ProblemInstance gen_instance(int N, double alpha, double a, double nu,
                             std::uint64_t seed) {
    if (N < 1) throw input_error("gen_instance: N must be >= 1");
    if (!(alpha > 0.0) || alpha > 1.0) throw input_error("gen_instance: need 0 < alpha <= 1");
    if (a < 0.0 || a > 1.0) throw input_error("gen_instance: need 0 <= a <= 1");
    if (nu < 0.0) throw input_error("gen_instance: need nu >= 0");

    const int M = static_cast<int>(round_half_away(alpha * static_cast<double>(N)));
    if (M < 1) throw input_error("gen_instance: alpha*N rounds to zero rows");
    const int K = static_cast<int>(round_half_away(a * static_cast<double>(N)));

    Rng rng(seed);
    ProblemInstance inst;
    inst.a = a;
    inst.alpha = alpha;
    inst.nu = nu;
    inst.seed = seed;

    const double col_std = 1.0 / std::sqrt(static_cast<double>(M));
    inst.A.resize(M, N);
    for (int k = 0; k < M; ++k)
        for (int r = 0; r < N; ++r) inst.A(k, r) = col_std * rng.gauss();

    inst.x_true = rng.gauss_vector(N);

    // Exactly K support positions via partial Fisher-Yates.
    std::vector<int> idx(N);
    std::iota(idx.begin(), idx.end(), 0);
    inst.xi_true = VectorXi::Zero(N);
    for (int i = 0; i < K; ++i) {
        const int pick = i + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(N - i)));
        std::swap(idx[i], idx[pick]);
        inst.xi_true[idx[i]] = 1;
    }

    VectorXd w(N);
    for (int r = 0; r < N; ++r) w[r] = inst.xi_true[r] ? inst.x_true[r] : 0.0;
    inst.y = inst.A * w;
    for (int k = 0; k < M; ++k) inst.y[k] += nu * rng.gauss();
    return inst;
}

}  // namespace cimcs
