#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "egokit/conditioning.hpp"
#include "egokit/schedule.hpp"
#include "egokit/tape.hpp"

namespace egokit {

/// Encoder/decoder transformer sizes. The encoder self-attends over the
/// conditioning sequence; decoder blocks self-attend over the noised state
/// and cross-attend to the encoder output. Rotary embeddings on the
/// temporal axis, non-causal.
struct DenoiserArch {
    int state_dim = 329;
    int cond_dim = 18;
    int width = 64;
    int encoder_blocks = 2;
    int decoder_blocks = 2;
    int heads = 4;
    int ffn_hidden = 256;
    int max_window = 128;
    double rope_base = 10000.0;

    int head_dim() const { return width / heads; }
    void validate() const;
};

struct TensorSpec {
    std::string name;
    int rows = 0;
    int cols = 0;
};

/// Weight tensors in declaration order; this order is the checkpoint layout.
std::vector<TensorSpec> denoiser_tensor_specs(const DenoiserArch& arch);

struct DenoiserParams {
    DenoiserArch arch;
    ConditioningVariant variant = ConditioningVariant::kEgoAllo;
    NoiseSchedule schedule;
    std::vector<Mat> weights;          // matches denoiser_tensor_specs order
    Eigen::VectorXd norm_mean;         // per state dimension
    Eigen::VectorXd norm_std;

    std::size_t scalar_count() const;
};

/// Xavier-initialized weights (zero output head), unit normalization stats.
DenoiserParams init_denoiser(const DenoiserArch& arch, ConditioningVariant variant,
                             const NoiseSchedule& schedule, std::uint64_t seed);

/// Builds the forward graph on `tape` given leaf vars for every weight
/// tensor (same order as the specs). Returns the predicted clean state.
Tape::Var denoiser_forward(Tape& tape, const DenoiserArch& arch,
                           const std::vector<Tape::Var>& weights, const Mat& x_noised,
                           int noise_step, const Mat& cond);

/// Predicted x0 for a noised window (rows = timesteps), in the same
/// normalized space as the input. Throws when the window exceeds
/// arch.max_window or the conditioning width disagrees.
Mat denoise(const DenoiserParams& params, const Mat& x_noised, int noise_step,
            const Mat& cond);

Mat conditioning_matrix(const std::vector<ConditionVector>& cond);

/// Checkpoint I/O: documented little-endian binary, bit-exact round trip.
void save_checkpoint(const std::string& path, const DenoiserParams& params);
DenoiserParams load_checkpoint(const std::string& path);

}  // namespace egokit
