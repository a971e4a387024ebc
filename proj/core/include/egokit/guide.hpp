#pragma once

#include <vector>

#include "egokit/costs.hpp"
#include "egokit/diffusion.hpp"
#include "egokit/lm.hpp"

namespace egokit {

struct GuideConfig {
    GuidanceWeights weights;
    LmConfig lm;
    int guide_last_steps = 10;  // run guidance on the final k DDIM steps

    GuideConfig() {
        lm.max_iterations = 12;
        lm.cg_tolerance = 1e-5;  // inexact steps; acceptance is cost decrease
        lm.cg_max_iterations = 75;
    }
};

struct GuideResult {
    std::vector<LocalPose> theta;
    LmResult lm;
};

/// The guidance problem: one rotation block per timestep (51 local
/// rotations), residual blocks for the prior terms, skating, and hand
/// evidence, each with analytic Jacobians. Shape and contacts stay fixed.
ResidualProblem build_guidance_problem(const std::vector<LocalPose>& theta_hat,
                                       const ShapeParams& shape,
                                       const Eigen::MatrixXd& contacts,
                                       const std::vector<PoseSE3>& cpf_traj,
                                       const std::vector<HandObservation>& observations,
                                       const GuidanceWeights& weights);

/// Assembles hand, reprojection, skating, and prior costs into one
/// block-sparse problem over the per-timestep joint rotations and runs LM
/// from the denoised pose.
GuideResult guide(const std::vector<LocalPose>& theta_hat, const ShapeParams& shape,
                  const Eigen::MatrixXd& contacts, const std::vector<PoseSE3>& cpf_traj,
                  const std::vector<HandObservation>& observations,
                  const GuideConfig& config);

/// Sampling hook that decodes the predicted states, refines the rotations
/// with guide() on the scheduled steps, and writes them back.
StateHook make_guidance_hook(std::vector<PoseSE3> cpf_traj,
                             std::vector<HandObservation> observations, GuideConfig config);

}  // namespace egokit
