#pragma once

#include <Eigen/Core>

namespace egokit {

/// Diffusion constants over noise steps n = 0..N. alpha_bar[0] = 1 and the
/// sequence decreases monotonically; sigma is the DDPM posterior scale
/// (unused by the deterministic DDIM path); weights are the per-step loss
/// weights w_n.
struct NoiseSchedule {
    int steps = 0;  // N
    Eigen::VectorXd alpha_bar;  // N + 1 entries
    Eigen::VectorXd sigma;      // N + 1 entries, sigma[0] = 0
    Eigen::VectorXd weights;    // N + 1 entries

    /// Cosine alpha-bar schedule with the usual squared-cosine ramp and
    /// per-step beta clamped at 0.999. Loss weights default to 1.
    static NoiseSchedule cosine(int n_steps = 1000);

    void validate() const;
};

}  // namespace egokit
