#pragma once

#include <string>
#include <vector>

#include "egokit/denoiser.hpp"
#include "egokit/motion_data.hpp"

#include "config.hpp"

namespace egokit::cli {

struct Dataset {
    std::vector<MotionSequence> train;
    std::vector<MotionSequence> test;
};

Dataset load_dataset(const std::string& data_dir);

/// Trains a denoiser on the sequences with the configured architecture and
/// seed; optionally appends "step,loss" rows to loss_csv_path.
DenoiserParams train_model(const RunConfig& config,
                           const std::vector<MotionSequence>& train_sequences,
                           ConditioningVariant variant,
                           const std::string& loss_csv_path = {});

/// Full estimation pipeline for one CPF trajectory: floor shift, encoding,
/// fused sampling with optional guidance, globalization.
MotionSequence estimate_motion(const DenoiserParams& params,
                               const std::vector<PoseSE3>& cpf_trajectory,
                               const std::vector<HandObservation>& observations,
                               double floor_z, const RunConfig& config,
                               std::uint64_t seed, const std::string& id);

struct EstimateInputs {
    std::string checkpoint;
    std::string motion_path;   // ground-truth motion file (provides the CPF)
    std::string cpf_path;      // or a bare CPF trajectory
    std::string hands_path;
    std::string cloud_path;
    std::string out_motion;
    std::string out_metrics;
};

int cmd_gen(const RunConfig& config, const std::string& out_dir);
int cmd_train(const RunConfig& config, const std::string& data_dir,
              const std::string& checkpoint_path, const std::string& loss_csv_path = {});
int cmd_estimate(const RunConfig& config, const EstimateInputs& inputs);
int cmd_eval(const std::string& pred_path, const std::string& gt_path,
             const std::string& csv_path);
int cmd_floor(const RunConfig& config, const std::string& cloud_path);
int cmd_skeleton_dump(const std::string& out_path);
int cmd_ablate(const RunConfig& config, const std::string& data_dir,
               const std::string& out_dir);

}  // namespace egokit::cli
