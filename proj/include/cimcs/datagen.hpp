#pragma once

#include <cstdint>

#include "cimcs/types.hpp"

namespace cimcs {

// round() half away from zero, used for M = round(alpha*N) and the support count.
long long round_half_away(double v);

/**
 * Draws one artificial instance: A ~ iid N(0, 1/M) (row-major order),
 * x ~ iid N(0,1), xi with exactly round(a*N) ones at uniform positions,
 * y = A(xi o x) + noise with noise ~ iid N(0, nu^2).
 *
 * One generator stream, fixed draw order (A, x, xi positions, noise),
 * so a seed pins the instance bytes.
 */
ProblemInstance gen_instance(int N, double alpha, double a, double nu,
                             std::uint64_t seed);

}  // namespace cimcs
