#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace cimcs {

// Name recorded in instance metadata / config hashes. Bump on any change to
// the draw algorithm below: seeds are only portable within one version.
inline constexpr const char* kRngAlgorithm = "mt19937_64-boxmuller-v1";

/**
 * Seeded random stream: mt19937_64 plus an explicit Box-Muller transform.
 *
 * std::normal_distribution is not pinned by the standard, so normal deviates
 * are produced here from two uniforms in (0,1] per draw (no pair caching).
 * This keeps a given seed reproducible across standard libraries.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    // Uniform double in (0,1]: 53-bit mantissa, zero excluded so log() is safe.
    double uniform_open() {
        const std::uint64_t u = engine_() >> 11;            // 53 bits
        return (static_cast<double>(u) + 1.0) * 0x1.0p-53;  // (0,1]
    }

    // Uniform in [0, bound) without modulo bias (rejection sampling).
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % bound;
    }

    // Standard normal deviate, Box-Muller, two uniforms consumed per call.
    double gauss() {
        const double u1 = uniform_open();
        const double u2 = uniform_open();
        ++n_gauss_;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    Eigen::VectorXd gauss_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss();
        return v;
    }

    // Total normal deviates drawn so far (used by draw-count tests).
    std::uint64_t gauss_count() const { return n_gauss_; }

private:
    static constexpr double kPi = 3.14159265358979323846;
    std::mt19937_64 engine_;
    std::uint64_t n_gauss_ = 0;
};

}  // namespace cimcs
