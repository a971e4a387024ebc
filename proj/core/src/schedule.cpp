#include "egokit/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace egokit {

NoiseSchedule NoiseSchedule::cosine(int n_steps) {
    if (n_steps < 1) throw std::invalid_argument("NoiseSchedule: steps must be >= 1");
    const double s = 0.008;
    auto ramp = [&](double n) {
        const double v = std::cos((n / n_steps + s) / (1.0 + s) * M_PI_2);
        return v * v;
    };
    NoiseSchedule sched;
    sched.steps = n_steps;
    sched.alpha_bar.resize(n_steps + 1);
    sched.sigma.resize(n_steps + 1);
    sched.weights = Eigen::VectorXd::Ones(n_steps + 1);
    sched.alpha_bar[0] = 1.0;
    sched.sigma[0] = 0.0;
    const double f0 = ramp(0.0);
    double prev_f = f0;
    for (int n = 1; n <= n_steps; ++n) {
        const double f = ramp(static_cast<double>(n));
        const double beta = std::min(1.0 - f / prev_f, 0.999);
        prev_f = f;
        sched.alpha_bar[n] = sched.alpha_bar[n - 1] * (1.0 - beta);
        const double denom = 1.0 - sched.alpha_bar[n];
        sched.sigma[n] =
            denom > 0 ? std::sqrt((1.0 - sched.alpha_bar[n - 1]) / denom * beta) : 0.0;
    }
    sched.validate();
    return sched;
}

void NoiseSchedule::validate() const {
    if (alpha_bar.size() != steps + 1 || sigma.size() != steps + 1 ||
        weights.size() != steps + 1) {
        throw std::invalid_argument("NoiseSchedule: array sizes must be steps + 1");
    }
    if (alpha_bar[0] != 1.0) throw std::invalid_argument("NoiseSchedule: alpha_bar[0] must be 1");
    for (int n = 1; n <= steps; ++n) {
        if (!(alpha_bar[n] > 0.0 && alpha_bar[n] <= 1.0)) {
            throw std::invalid_argument("NoiseSchedule: alpha_bar out of (0, 1]");
        }
        if (alpha_bar[n] > alpha_bar[n - 1]) {
            throw std::invalid_argument("NoiseSchedule: alpha_bar must decrease");
        }
        if (sigma[n] < 0.0) throw std::invalid_argument("NoiseSchedule: sigma must be >= 0");
    }
}

}  // namespace egokit
