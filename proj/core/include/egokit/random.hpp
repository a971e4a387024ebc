#pragma once

#include <cstdint>
#include <random>

namespace egokit {

/// Deterministic RNG used across the library. Normal draws go through an
/// explicit Box-Muller so the byte stream does not depend on the standard
/// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Rejection-free; bias is < 2^-53 for the sizes used here.
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

    /// Standard normal via Box-Muller on two uniforms.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Splits one master seed into independent stream seeds (splitmix64 over the
/// pair); used so parallel work items stay deterministic.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace egokit
