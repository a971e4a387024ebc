#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "egokit/denoiser.hpp"
#include "egokit/random.hpp"
#include "egokit/schedule.hpp"

namespace egokit {

/// Forward noising: x_n = sqrt(alpha_bar_n) x0 + sqrt(1 - alpha_bar_n) eps,
/// elementwise. Throws on shape mismatch or n outside [1, N].
Mat noise_sample(const NoiseSchedule& schedule, const Mat& x0, int n, const Mat& eps);

struct TrainingBatchItem {
    Mat x0;    // T x state_dim, raw (unnormalized) states
    Mat cond;  // T x cond_dim
};

struct LossAndGradient {
    double loss = 0.0;
    std::vector<Mat> gradients;  // per weight tensor, declaration order
};

/// Eq-style diffusion objective: mean over the batch of
/// w_n ||denoise(x_n, n, c) - x0||^2 with n uniform in [1, N] and exact
/// reverse-mode gradients. Normalization stats from `params` are applied
/// before noising. Deterministic given the rng state; batch elements are
/// evaluated in parallel with ordered accumulation.
LossAndGradient training_loss(const DenoiserParams& params,
                              const std::vector<TrainingBatchItem>& batch, Rng& rng);

/// Noise levels visited by DDIM: steps+1 values from N down to 0.
std::vector<int> ddim_step_levels(const NoiseSchedule& schedule, int steps);

/// Windows of length min(T, window) at stride (window - overlap); the final
/// window is shifted left to end exactly at T.
std::vector<std::pair<int, int>> split_windows(int total_length, int window = 128,
                                               int overlap = 32);

/// Denoiser callback for the engine layer: predicted x0 for a window that
/// starts at `window_start`, all in normalized space.
using WindowDenoiser = std::function<Mat(const Mat& x_noised, int noise_step,
                                         int window_start)>;

/// Optional post-processing of the predicted x0 (guidance); runs per window
/// per denoising step, in the same space as the prediction.
using WindowHook = std::function<void(Mat& x0, int window_start, int step_index,
                                      int step_count)>;

/// Deterministic DDIM (eta = 0) with MultiDiffusion window fusion: all
/// windows share the step sequence and after every step overlapping
/// timesteps are replaced by the arithmetic mean of the windows covering
/// them. With a single window this is plain DDIM.
Mat fused_ddim_engine(const WindowDenoiser& denoiser, const NoiseSchedule& schedule,
                      int total_length, int dim, int window, int overlap, int steps,
                      const WindowHook& hook, Rng& rng);

/// Guidance hook over raw (denormalized) states.
using StateHook = WindowHook;

/// DDIM sampling with the trained denoiser; sequence length must fit one
/// window. Returns raw (denormalized) states, T x state_dim.
Mat ddim_sample(const DenoiserParams& params, const std::vector<ConditionVector>& cond,
                int steps, const StateHook& hook, Rng& rng);

/// Arbitrary-length sampling via window fusion; identical to ddim_sample
/// when the sequence fits one window.
Mat fused_sample(const DenoiserParams& params, const std::vector<ConditionVector>& cond,
                 int steps, const StateHook& hook, Rng& rng);

/// Per-dimension mean/std over all timesteps of the given sequences, with a
/// floor on std. Written into the params used for training and sampling.
void fit_normalization(DenoiserParams& params, const std::vector<Mat>& state_sequences);

/// Adam over the flat parameter list.
struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int step = 0;
    std::vector<Mat> m;
    std::vector<Mat> v;
};

void adam_update(DenoiserParams& params, AdamState& state, const std::vector<Mat>& gradients);

}  // namespace egokit
