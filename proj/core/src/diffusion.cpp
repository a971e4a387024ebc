#include "egokit/diffusion.hpp"

#include <cmath>
#include <stdexcept>

#include "egokit/threading.hpp"

namespace egokit {

Mat noise_sample(const NoiseSchedule& schedule, const Mat& x0, int n, const Mat& eps) {
    if (n < 1 || n > schedule.steps) {
        throw std::invalid_argument("noise_sample: step outside [1, N]");
    }
    if (x0.rows() != eps.rows() || x0.cols() != eps.cols()) {
        throw std::invalid_argument("noise_sample: x0/eps shape mismatch");
    }
    const double a = std::sqrt(schedule.alpha_bar[n]);
    const double b = std::sqrt(1.0 - schedule.alpha_bar[n]);
    return a * x0 + b * eps;
}

namespace {

Mat normalize_states(const DenoiserParams& params, const Mat& x) {
    return (x.rowwise() - params.norm_mean.transpose()).array().rowwise() /
           params.norm_std.transpose().array();
}

Mat denormalize_states(const DenoiserParams& params, const Mat& x) {
    return (x.array().rowwise() * params.norm_std.transpose().array()).matrix().rowwise() +
           params.norm_mean.transpose();
}

Mat draw_normal(Rng& rng, int rows, int cols) {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
    }
    return m;
}

}  // namespace

LossAndGradient training_loss(const DenoiserParams& params,
                              const std::vector<TrainingBatchItem>& batch, Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("training_loss: empty batch");

    // Draw all randomness up front so threading cannot change the stream.
    struct Draw {
        int n;
        Mat eps;
    };
    std::vector<Draw> draws;
    draws.reserve(batch.size());
    for (const auto& item : batch) {
        Draw d;
        d.n = 1 + static_cast<int>(rng.uniform_index(params.schedule.steps));
        d.eps = draw_normal(rng, item.x0.rows(), item.x0.cols());
        draws.push_back(std::move(d));
    }

    std::vector<double> losses(batch.size(), 0.0);
    std::vector<std::vector<Mat>> grads(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) {
        const auto& item = batch[i];
        const Mat x0n = normalize_states(params, item.x0);
        const Mat xn = noise_sample(params.schedule, x0n, draws[i].n, draws[i].eps);

        Tape tape;
        std::vector<Tape::Var> weight_vars;
        weight_vars.reserve(params.weights.size());
        for (const Mat& w : params.weights) weight_vars.push_back(tape.leaf(w));
        const Tape::Var pred =
            denoiser_forward(tape, params.arch, weight_vars, xn, draws[i].n, item.cond);
        const double wn = params.schedule.weights[draws[i].n];
        Tape::Var loss = tape.scale(tape.squared_error(pred, x0n), wn);
        tape.backward(loss);

        losses[i] = tape.value(loss)(0, 0);
        grads[i].reserve(weight_vars.size());
        for (const Tape::Var v : weight_vars) grads[i].push_back(tape.gradient(v));
    });

    LossAndGradient out;
    out.gradients.reserve(params.weights.size());
    for (const Mat& w : params.weights) out.gradients.push_back(Mat::Zero(w.rows(), w.cols()));
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out.loss += losses[i] * inv_b;
        for (std::size_t k = 0; k < out.gradients.size(); ++k) {
            out.gradients[k] += inv_b * grads[i][k];
        }
    }
    return out;
}

std::vector<int> ddim_step_levels(const NoiseSchedule& schedule, int steps) {
    if (steps < 1) throw std::invalid_argument("ddim_step_levels: steps must be >= 1");
    if (steps > schedule.steps) {
        throw std::invalid_argument("ddim_step_levels: more steps than the schedule has");
    }
    std::vector<int> levels(steps + 1);
    for (int k = 0; k <= steps; ++k) {
        levels[k] = static_cast<int>(
            std::lround(static_cast<double>(schedule.steps) * (steps - k) / steps));
    }
    return levels;
}

std::vector<std::pair<int, int>> split_windows(int total_length, int window, int overlap) {
    if (total_length < 1) throw std::invalid_argument("split_windows: length must be >= 1");
    if (overlap >= window) throw std::invalid_argument("split_windows: overlap >= window");
    std::vector<std::pair<int, int>> out;
    if (total_length <= window) {
        out.emplace_back(0, total_length);
        return out;
    }
    const int stride = window - overlap;
    int start = 0;
    while (true) {
        if (start + window >= total_length) {
            out.emplace_back(total_length - window, total_length);
            break;
        }
        out.emplace_back(start, start + window);
        start += stride;
    }
    return out;
}

Mat fused_ddim_engine(const WindowDenoiser& denoiser, const NoiseSchedule& schedule,
                      int total_length, int dim, int window, int overlap, int steps,
                      const WindowHook& hook, Rng& rng) {
    const auto levels = ddim_step_levels(schedule, steps);
    const auto windows = split_windows(total_length, window, overlap);

    Mat x = draw_normal(rng, total_length, dim);
    std::vector<Mat> updated(windows.size());
    for (int k = 0; k < steps; ++k) {
        const int n = levels[k];
        const int n_next = levels[k + 1];
        const double sa = std::sqrt(schedule.alpha_bar[n]);
        const double sb = std::sqrt(1.0 - schedule.alpha_bar[n]);
        const double sa_next = std::sqrt(schedule.alpha_bar[n_next]);
        const double sb_next = std::sqrt(1.0 - schedule.alpha_bar[n_next]);

        parallel_for(windows.size(), [&](std::size_t w) {
            const auto [t0, t1] = windows[w];
            const Mat xw = x.middleRows(t0, t1 - t0);
            Mat x0 = denoiser(xw, n, t0);
            if (hook) hook(x0, t0, k, steps);
            // eps implied by (x_n, x0); eta = 0 keeps the path deterministic.
            const Mat eps = (xw - sa * x0) / sb;
            updated[w] = sa_next * x0 + sb_next * eps;
        });

        // MultiDiffusion fusion: mean over covering windows.
        x.setZero();
        Eigen::VectorXd coverage = Eigen::VectorXd::Zero(total_length);
        for (std::size_t w = 0; w < windows.size(); ++w) {
            const auto [t0, t1] = windows[w];
            x.middleRows(t0, t1 - t0) += updated[w];
            coverage.segment(t0, t1 - t0).array() += 1.0;
        }
        x.array().colwise() /= coverage.array();
    }
    return x;
}

namespace {

Mat sample_impl(const DenoiserParams& params, const std::vector<ConditionVector>& cond,
                int steps, const StateHook& hook, Rng& rng, bool single_window) {
    const Mat cond_mat = conditioning_matrix(cond);
    const int total = static_cast<int>(cond.size());
    if (single_window && total > params.arch.max_window) {
        throw std::invalid_argument("ddim_sample: sequence exceeds one window");
    }

    const WindowDenoiser model = [&](const Mat& xn, int n, int t0) {
        return denoise(params, xn, n, cond_mat.middleRows(t0, xn.rows()));
    };
    // The guidance hook sees raw states; sampling runs normalized.
    WindowHook norm_hook;
    if (hook) {
        norm_hook = [&](Mat& x0, int t0, int k, int count) {
            Mat raw = denormalize_states(params, x0);
            hook(raw, t0, k, count);
            x0 = normalize_states(params, raw);
        };
    }
    // 32-step overlap at the full 128 window; scales down with the window.
    const int overlap = params.arch.max_window / 4;
    const Mat x0_norm =
        fused_ddim_engine(model, params.schedule, total, params.arch.state_dim,
                          params.arch.max_window, overlap, steps, norm_hook, rng);
    return denormalize_states(params, x0_norm);
}

}  // namespace

Mat ddim_sample(const DenoiserParams& params, const std::vector<ConditionVector>& cond,
                int steps, const StateHook& hook, Rng& rng) {
    return sample_impl(params, cond, steps, hook, rng, true);
}

Mat fused_sample(const DenoiserParams& params, const std::vector<ConditionVector>& cond,
                 int steps, const StateHook& hook, Rng& rng) {
    return sample_impl(params, cond, steps, hook, rng, false);
}

void fit_normalization(DenoiserParams& params, const std::vector<Mat>& state_sequences) {
    const int dim = params.arch.state_dim;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(dim);
    double count = 0.0;
    for (const Mat& seq : state_sequences) {
        if (seq.cols() != dim) throw std::invalid_argument("fit_normalization: bad state width");
        sum += seq.colwise().sum().transpose();
        sum_sq += seq.array().square().colwise().sum().matrix().transpose();
        count += static_cast<double>(seq.rows());
    }
    if (count < 1.0) throw std::invalid_argument("fit_normalization: no data");
    params.norm_mean = sum / count;
    const Eigen::VectorXd var =
        (sum_sq / count - params.norm_mean.array().square().matrix()).cwiseMax(0.0);
    params.norm_std = var.array().sqrt().max(1e-6).matrix();
}

void adam_update(DenoiserParams& params, AdamState& state, const std::vector<Mat>& gradients) {
    if (gradients.size() != params.weights.size()) {
        throw std::invalid_argument("adam_update: gradient count mismatch");
    }
    if (state.m.empty()) {
        for (const Mat& w : params.weights) {
            state.m.push_back(Mat::Zero(w.rows(), w.cols()));
            state.v.push_back(Mat::Zero(w.rows(), w.cols()));
        }
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, state.step);
    const double bc2 = 1.0 - std::pow(state.beta2, state.step);
    for (std::size_t k = 0; k < params.weights.size(); ++k) {
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * gradients[k];
        state.v[k] = state.beta2 * state.v[k].array().matrix() +
                     (1.0 - state.beta2) * gradients[k].array().square().matrix();
        const Eigen::ArrayXXd m_hat = state.m[k].array() / bc1;
        const Eigen::ArrayXXd v_hat = state.v[k].array() / bc2;
        params.weights[k].array() -=
            state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
}

}  // namespace egokit
