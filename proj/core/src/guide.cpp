#include "egokit/guide.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace egokit {

namespace {

// Shared constants of one guidance solve: prior targets computed from the
// denoised pose, plus the inputs the residuals close over.
struct GuideContext {
    ShapeParams shape{1.0, 1.0};
    std::vector<PoseSE3> cpf;
    std::vector<std::vector<Mat3>> theta_hat;      // T x 51
    std::vector<std::vector<Vec3>> velocity_hat;   // (T-1) x 51, log of hat deltas
    std::vector<std::vector<Vec3>> fk_hat;         // T x 51 root-frame positions
    GuidanceWeights weights;
};

LocalPose pose_from_rotations(const std::vector<Rotation3>& rotations) {
    LocalPose pose;
    pose.joint_rotations = rotations;
    return pose;
}

// Extracts one rotation matrix from a rotation-bundle block without
// materializing the whole bundle.
Mat3 rotation_at(const VariableBlock& block, int index) {
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) m(r, c) = block.value[index * 9 + r * 3 + c];
    }
    return m;
}

// The absolute and velocity priors are diagonal across joints, so they are
// emitted per joint with a 3-column range into the timestep block.
void add_prior_abs(ResidualProblem& problem, const std::shared_ptr<GuideContext>& ctx,
                   int t, int block) {
    const double scale = std::sqrt(ctx->weights.prior_abs);
    for (int j = 0; j < kLocalRotationCount; ++j) {
        ResidualBlock res;
        res.name = "prior_abs[t=" + std::to_string(t) + ",j=" + std::to_string(j + 1) + "]";
        res.blocks = {block};
        res.col_ranges = {{3 * j, 3}};
        res.dim = 3;
        res.eval = [ctx, t, j, scale](const std::vector<const VariableBlock*>& refs,
                                      Eigen::VectorXd& r,
                                      std::vector<Eigen::MatrixXd>* jac) {
            const Mat3 rel = ctx->theta_hat[t][j].transpose() * rotation_at(*refs[0], j);
            const Vec3 v = so3_log(Rotation3(rel, Rotation3::Unchecked{}));
            r = scale * v;
            if (jac) jac->assign(1, (scale * so3_right_jacobian_inverse(v)).eval());
        };
        problem.add_residual(std::move(res));
    }
}

void add_prior_vel(ResidualProblem& problem, const std::shared_ptr<GuideContext>& ctx,
                   int t, int block_prev, int block_curr) {
    const double scale = std::sqrt(ctx->weights.prior_vel);
    for (int j = 0; j < kLocalRotationCount; ++j) {
        ResidualBlock res;
        res.name = "prior_vel[t=" + std::to_string(t) + ",j=" + std::to_string(j + 1) + "]";
        res.blocks = {block_prev, block_curr};
        res.col_ranges = {{3 * j, 3}, {3 * j, 3}};
        res.dim = 3;
        res.eval = [ctx, t, j, scale](const std::vector<const VariableBlock*>& refs,
                                      Eigen::VectorXd& r,
                                      std::vector<Eigen::MatrixXd>* jac) {
            const Mat3 rel =
                rotation_at(*refs[0], j).transpose() * rotation_at(*refs[1], j);
            const Vec3 v = so3_log(Rotation3(rel, Rotation3::Unchecked{}));
            r = scale * (v - ctx->velocity_hat[t - 1][j]);
            if (jac) {
                const Mat3 jr_inv = so3_right_jacobian_inverse(v);
                jac->assign(2, Eigen::MatrixXd());
                (*jac)[1] = scale * jr_inv;
                // Left perturbation of the relative rotation.
                (*jac)[0] = -scale * jr_inv.transpose();
            }
        };
        problem.add_residual(std::move(res));
    }
}

void add_prior_fk(ResidualProblem& problem, const std::shared_ptr<GuideContext>& ctx,
                  int t, int block) {
    const double scale = std::sqrt(ctx->weights.prior_fk);
    ResidualBlock res;
    res.name = "prior_fk[t=" + std::to_string(t) + "]";
    res.blocks = {block};
    res.dim = 3 * kLocalRotationCount;
    res.eval = [ctx, t, scale](const std::vector<const VariableBlock*>& refs,
                               Eigen::VectorXd& r, std::vector<Eigen::MatrixXd>* jac) {
        const PosedBody body(pose_from_rotations(refs[0]->rotations()), ctx->shape,
                             ctx->cpf[t]);
        if (jac) {
            jac->assign(1, Eigen::MatrixXd::Zero(3 * kLocalRotationCount,
                                                 3 * kLocalRotationCount));
        }
        for (int j = 1; j < kJointCount; ++j) {
            r.segment<3>(3 * (j - 1)) =
                scale * (body.root_frame_position(j) - ctx->fk_hat[t][j - 1]);
            if (jac) {
                for (int m = 1; m < kJointCount; ++m) {
                    if (!is_ancestor_or_self(m, j)) continue;
                    (*jac)[0].block<3, 3>(3 * (j - 1), 3 * (m - 1)) =
                        scale * body.d_root_frame_position(j, m);
                }
            }
        }
    };
    problem.add_residual(std::move(res));
}

void add_skate(ResidualProblem& problem, const std::shared_ptr<GuideContext>& ctx, int t,
               const std::vector<std::pair<int, double>>& active, int block_prev,
               int block_curr) {
    const double scale = std::sqrt(ctx->weights.skate);
    ResidualBlock res;
    res.name = "skate[t=" + std::to_string(t) + "]";
    res.blocks = {block_prev, block_curr};
    res.dim = 3 * static_cast<int>(active.size());
    res.eval = [ctx, t, scale, active](const std::vector<const VariableBlock*>& refs,
                                       Eigen::VectorXd& r,
                                       std::vector<Eigen::MatrixXd>* jac) {
        const PosedBody prev(pose_from_rotations(refs[0]->rotations()), ctx->shape,
                             ctx->cpf[t - 1]);
        const PosedBody curr(pose_from_rotations(refs[1]->rotations()), ctx->shape,
                             ctx->cpf[t]);
        const int dim = 3 * static_cast<int>(active.size());
        if (jac) jac->assign(2, Eigen::MatrixXd::Zero(dim, 3 * kLocalRotationCount));
        for (std::size_t i = 0; i < active.size(); ++i) {
            const auto [joint, weight] = active[i];
            const double c = scale * weight;
            r.segment<3>(3 * i) =
                c * (curr.world_position(joint) - prev.world_position(joint));
            if (jac) {
                for (int m = 1; m < kJointCount; ++m) {
                    const Mat3 dc = curr.d_world_position(joint, m);
                    if (dc != Mat3::Zero()) {
                        (*jac)[1].block<3, 3>(3 * i, 3 * (m - 1)) = c * dc;
                    }
                    const Mat3 dp = prev.d_world_position(joint, m);
                    if (dp != Mat3::Zero()) {
                        (*jac)[0].block<3, 3>(3 * i, 3 * (m - 1)) = -c * dp;
                    }
                }
            }
        }
    };
    problem.add_residual(std::move(res));
}

void add_hands3d(ResidualProblem& problem, const std::shared_ptr<GuideContext>& ctx,
                 const HandObservation& obs, int block) {
    const double scale = std::sqrt(ctx->weights.hands3d);
    const bool with_locals = obs.local_hand_rotations.has_value();
    const int dim = 6 + (with_locals ? 3 * kHandJointCount : 0);
    const int wrist = hand_joint_to_skeleton(obs.left, 0);
    const int hand_base = skeleton().first_hand_joint(obs.left);
    const PoseSE3 target = *obs.wrist_pose_world;
    const auto locals = obs.local_hand_rotations;
    const int t = obs.timestep;

    ResidualBlock res;
    res.name = "hands3d[t=" + std::to_string(t) + (obs.left ? ",L]" : ",R]");
    res.blocks = {block};
    res.dim = dim;
    res.eval = [ctx, t, scale, wrist, hand_base, target, locals, dim, with_locals](
                   const std::vector<const VariableBlock*>& refs, Eigen::VectorXd& r,
                   std::vector<Eigen::MatrixXd>* jac) {
        const auto rotations = refs[0]->rotations();
        const PosedBody body(pose_from_rotations(rotations), ctx->shape, ctx->cpf[t]);
        if (jac) jac->assign(1, Eigen::MatrixXd::Zero(dim, 3 * kLocalRotationCount));

        r.segment<3>(0) = scale * (body.world_position(wrist) - target.position);
        const Mat3 wrist_rot = body.world_rotation(wrist);
        const Vec3 v = so3_log(
            Rotation3(target.rotation.matrix().transpose() * wrist_rot,
                      Rotation3::Unchecked{}));
        r.segment<3>(3) = scale * v;
        if (jac) {
            const Mat3 jr_inv = so3_right_jacobian_inverse(v);
            for (int m = 1; m < kJointCount; ++m) {
                const Mat3 dp = body.d_world_position(wrist, m);
                if (dp != Mat3::Zero()) {
                    (*jac)[0].block<3, 3>(0, 3 * (m - 1)) = scale * dp;
                }
                const Mat3 dr = body.d_world_rotation_tangent(wrist, m);
                if (dr != Mat3::Zero()) {
                    (*jac)[0].block<3, 3>(3, 3 * (m - 1)) = scale * jr_inv * dr;
                }
            }
        }
        if (with_locals) {
            for (int i = 0; i < kHandJointCount; ++i) {
                const Mat3 rel =
                    (*locals)[i].matrix().transpose() * rotations[hand_base + i - 1].matrix();
                const Vec3 lv = so3_log(Rotation3(rel, Rotation3::Unchecked{}));
                r.segment<3>(6 + 3 * i) = scale * lv;
                if (jac) {
                    (*jac)[0].block<3, 3>(6 + 3 * i, 3 * (hand_base + i - 1)) =
                        scale * so3_right_jacobian_inverse(lv);
                }
            }
        }
    };
    problem.add_residual(std::move(res));
}

void add_reproj(ResidualProblem& problem, const std::shared_ptr<GuideContext>& ctx,
                const HandObservation& obs,
                const std::vector<std::pair<int, Vec2>>& visible, int block) {
    const double scale = std::sqrt(ctx->weights.reproj);
    const int dim = 2 * static_cast<int>(visible.size());
    const CameraIntrinsics k = obs.intrinsics;
    const PoseSE3 cam_from_cpf = obs.camera_from_cpf;
    const int t = obs.timestep;

    ResidualBlock res;
    res.name = "reproj[t=" + std::to_string(t) + (obs.left ? ",L]" : ",R]");
    res.blocks = {block};
    res.dim = dim;
    res.eval = [ctx, t, scale, k, cam_from_cpf, visible, dim](
                   const std::vector<const VariableBlock*>& refs, Eigen::VectorXd& r,
                   std::vector<Eigen::MatrixXd>* jac) {
        const PosedBody body(pose_from_rotations(refs[0]->rotations()), ctx->shape,
                             ctx->cpf[t]);
        if (jac) jac->assign(1, Eigen::MatrixXd::Zero(dim, 3 * kLocalRotationCount));
        for (std::size_t i = 0; i < visible.size(); ++i) {
            const auto& [joint, pixel] = visible[i];
            Vec3 p_cam = cam_from_cpf * body.cpf_position(joint);
            // The active set is fixed at assembly; clamp depth so transient
            // iterates stay defined.
            p_cam.z() = std::max(p_cam.z(), kMinCameraDepth);
            const double inv_z = 1.0 / p_cam.z();
            r(2 * i) = scale * (k.fx * p_cam.x() * inv_z + k.cx - pixel.x());
            r(2 * i + 1) = scale * (k.fy * p_cam.y() * inv_z + k.cy - pixel.y());
            if (jac) {
                Eigen::Matrix<double, 2, 3> dpi;
                dpi << k.fx * inv_z, 0.0, -k.fx * p_cam.x() * inv_z * inv_z,
                       0.0, k.fy * inv_z, -k.fy * p_cam.y() * inv_z * inv_z;
                const Eigen::Matrix<double, 2, 3> chain =
                    scale * dpi * cam_from_cpf.rotation.matrix();
                for (int m = 1; m < kJointCount; ++m) {
                    const Mat3 dc = body.d_cpf_position(joint, m);
                    if (dc != Mat3::Zero()) {
                        (*jac)[0].block<2, 3>(2 * i, 3 * (m - 1)) = chain * dc;
                    }
                }
            }
        }
    };
    problem.add_residual(std::move(res));
}

}  // namespace

ResidualProblem build_guidance_problem(const std::vector<LocalPose>& theta_hat,
                                       const ShapeParams& shape,
                                       const Eigen::MatrixXd& contacts,
                                       const std::vector<PoseSE3>& cpf_traj,
                                       const std::vector<HandObservation>& observations,
                                       const GuidanceWeights& weights) {
    const int total = static_cast<int>(theta_hat.size());
    if (static_cast<int>(cpf_traj.size()) != total) {
        throw std::invalid_argument("guide: pose/CPF lengths differ");
    }
    if (contacts.rows() != total || contacts.cols() != kBodyJointCount) {
        throw std::invalid_argument("guide: contacts must be T x 21");
    }
    weights.validate();

    auto ctx = std::make_shared<GuideContext>();
    ctx->shape = shape;
    ctx->cpf = cpf_traj;
    ctx->weights = weights;
    ctx->theta_hat.resize(total);
    ctx->fk_hat.resize(total);
    for (int t = 0; t < total; ++t) {
        ctx->theta_hat[t].reserve(kLocalRotationCount);
        for (int j = 1; j <= kLocalRotationCount; ++j) {
            ctx->theta_hat[t].push_back(theta_hat[t].local(j).matrix());
        }
        const BodyFrame fk = forward_kinematics(PoseSE3::identity(), theta_hat[t], shape);
        ctx->fk_hat[t].reserve(kLocalRotationCount);
        for (int j = 1; j < kJointCount; ++j) {
            ctx->fk_hat[t].push_back(fk.joints_world[j].position);
        }
    }
    ctx->velocity_hat.resize(total > 0 ? total - 1 : 0);
    for (int t = 1; t < total; ++t) {
        ctx->velocity_hat[t - 1].reserve(kLocalRotationCount);
        for (int j = 1; j <= kLocalRotationCount; ++j) {
            ctx->velocity_hat[t - 1].push_back(so3_log(
                theta_hat[t - 1].local(j).transpose() * theta_hat[t].local(j)));
        }
    }

    ResidualProblem problem;
    std::vector<int> blocks(total);
    for (int t = 0; t < total; ++t) {
        blocks[t] = problem.add_rotation_block(theta_hat[t].joint_rotations);
    }

    for (int t = 0; t < total; ++t) {
        if (weights.prior_abs > 0.0) add_prior_abs(problem, ctx, t, blocks[t]);
        if (weights.prior_fk > 0.0) add_prior_fk(problem, ctx, t, blocks[t]);
        if (t >= 1 && weights.prior_vel > 0.0) {
            add_prior_vel(problem, ctx, t, blocks[t - 1], blocks[t]);
        }
        if (t >= 1 && weights.skate > 0.0) {
            std::vector<std::pair<int, double>> active;
            for (int j = 1; j <= kBodyJointCount; ++j) {
                const double w = 0.5 * (contacts(t, j - 1) + contacts(t - 1, j - 1));
                if (w > 0.0) active.emplace_back(j, w);
            }
            if (!active.empty()) add_skate(problem, ctx, t, active, blocks[t - 1], blocks[t]);
        }
    }
    for (const HandObservation& obs : observations) {
        if (obs.timestep < 0 || obs.timestep >= total) {
            throw std::invalid_argument("guide: observation timestep out of range");
        }
        if (!obs.has_evidence()) {
            throw std::invalid_argument("guide: observation carries no evidence");
        }
        if (obs.wrist_pose_world && weights.hands3d > 0.0) {
            add_hands3d(problem, ctx, obs, blocks[obs.timestep]);
        }
        if (!obs.keypoints2d.empty() && weights.reproj > 0.0) {
            // Fix the active keypoint set from the initial pose.
            const PosedBody body(theta_hat[obs.timestep], shape, cpf_traj[obs.timestep]);
            std::vector<std::pair<int, Vec2>> visible;
            for (const auto& [hand_joint, pixel] : obs.keypoints2d) {
                const int joint = hand_joint_to_skeleton(obs.left, hand_joint);
                if ((obs.camera_from_cpf * body.cpf_position(joint)).z() > kMinCameraDepth) {
                    visible.emplace_back(joint, pixel);
                }
            }
            if (!visible.empty()) add_reproj(problem, ctx, obs, visible, blocks[obs.timestep]);
        }
    }
    return problem;
}

GuideResult guide(const std::vector<LocalPose>& theta_hat, const ShapeParams& shape,
                  const Eigen::MatrixXd& contacts, const std::vector<PoseSE3>& cpf_traj,
                  const std::vector<HandObservation>& observations,
                  const GuideConfig& config) {
    ResidualProblem problem = build_guidance_problem(theta_hat, shape, contacts, cpf_traj,
                                                     observations, config.weights);
    GuideResult result;
    result.lm = lm_solve(problem, config.lm);
    const int total = static_cast<int>(theta_hat.size());
    result.theta.reserve(total);
    for (int t = 0; t < total; ++t) {
        result.theta.push_back(pose_from_rotations(problem.block(t).rotations()));
    }
    return result;
}

StateHook make_guidance_hook(std::vector<PoseSE3> cpf_traj,
                             std::vector<HandObservation> observations, GuideConfig config) {
    return [cpf_traj = std::move(cpf_traj), observations = std::move(observations),
            config](Mat& x0, int window_start, int step_index, int step_count) {
        if (step_index < step_count - config.guide_last_steps) return;
        const int window = static_cast<int>(x0.rows());

        std::vector<LocalPose> theta_hat;
        theta_hat.reserve(window);
        Eigen::Vector2d shape_sum = Eigen::Vector2d::Zero();
        Eigen::MatrixXd contacts(window, kBodyJointCount);
        try {
            for (int t = 0; t < window; ++t) {
                const MotionState state = MotionState::unflatten(x0.row(t).transpose());
                theta_hat.push_back(local_pose_from_state(state));
                shape_sum += state.shape;
                contacts.row(t) =
                    state.contacts.cwiseMax(0.0).cwiseMin(1.0).transpose();
            }
        } catch (const std::invalid_argument&) {
            return;  // degenerate 6D rotations this early; leave the prediction alone
        }
        const ShapeParams shape(
            (shape_sum / window).cwiseMax(0.5).cwiseMin(2.0));

        std::vector<PoseSE3> cpf_window(cpf_traj.begin() + window_start,
                                        cpf_traj.begin() + window_start + window);
        std::vector<HandObservation> obs_window;
        for (const HandObservation& obs : observations) {
            if (obs.timestep >= window_start && obs.timestep < window_start + window) {
                HandObservation shifted = obs;
                shifted.timestep -= window_start;
                obs_window.push_back(std::move(shifted));
            }
        }

        const GuideResult refined =
            guide(theta_hat, shape, contacts, cpf_window, obs_window, config);
        for (int t = 0; t < window; ++t) {
            for (int j = 0; j < kLocalRotationCount; ++j) {
                x0.row(t).segment<6>(6 * j) =
                    to_rot6d(refined.theta[t].joint_rotations[j]).transpose();
            }
        }
    };
}

}  // namespace egokit
