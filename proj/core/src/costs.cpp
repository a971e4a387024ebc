#include "egokit/costs.hpp"

#include <stdexcept>

namespace egokit {

void GuidanceWeights::validate() const {
    for (double v : {hands3d, reproj, skate, prior_abs, prior_vel, prior_fk}) {
        if (!(v >= 0.0)) throw std::invalid_argument("GuidanceWeights: weights must be >= 0");
    }
}

PosedBody::PosedBody(const LocalPose& pose, const ShapeParams& shape,
                     const PoseSE3& world_cpf)
    : frame_(forward_kinematics(PoseSE3::identity(), pose, shape)),
      cpf_a_(cpf_pose(frame_)),
      world_cpf_(world_cpf),
      q_(world_cpf.rotation.matrix() * cpf_a_.rotation.matrix().transpose()) {}

Vec3 PosedBody::world_position(int joint) const {
    return q_ * (frame_.joints_world[joint].position - cpf_a_.position) + world_cpf_.position;
}

Mat3 PosedBody::world_rotation(int joint) const {
    return q_ * frame_.joints_world[joint].rotation.matrix();
}

Vec3 PosedBody::cpf_position(int joint) const {
    return cpf_a_.rotation.matrix().transpose() *
           (frame_.joints_world[joint].position - cpf_a_.position);
}

double PosedBody::coupling(int joint, int m) const {
    const double drives_joint = is_ancestor_or_self(m, joint) ? 1.0 : 0.0;
    const double drives_head = is_ancestor_or_self(m, skeleton().head_joint) ? 1.0 : 0.0;
    return drives_joint - drives_head;
}

Mat3 PosedBody::d_world_position(int joint, int m) const {
    const double s = coupling(joint, m);
    if (s == 0.0) return Mat3::Zero();
    const Vec3 lever = frame_.joints_world[joint].position - frame_.joints_world[m].position;
    return -s * q_ * skew(lever) * frame_.joints_world[m].rotation.matrix();
}

Mat3 PosedBody::d_cpf_position(int joint, int m) const {
    const double s = coupling(joint, m);
    if (s == 0.0) return Mat3::Zero();
    const Vec3 lever = frame_.joints_world[joint].position - frame_.joints_world[m].position;
    return -s * cpf_a_.rotation.matrix().transpose() * skew(lever) *
           frame_.joints_world[m].rotation.matrix();
}

Mat3 PosedBody::d_root_frame_position(int joint, int m) const {
    if (!is_ancestor_or_self(m, joint)) return Mat3::Zero();
    const Vec3 lever = frame_.joints_world[joint].position - frame_.joints_world[m].position;
    return -skew(lever) * frame_.joints_world[m].rotation.matrix();
}

Mat3 PosedBody::d_world_rotation_tangent(int joint, int m) const {
    const double s = coupling(joint, m);
    if (s == 0.0) return Mat3::Zero();
    return s * frame_.joints_world[joint].rotation.matrix().transpose() *
           frame_.joints_world[m].rotation.matrix();
}

int hand_joint_to_skeleton(bool left, int hand_joint) {
    const SkeletonTopology& topo = skeleton();
    if (hand_joint == 0) return left ? topo.left_wrist_joint : topo.right_wrist_joint;
    if (hand_joint < 0 || hand_joint > kHandJointCount) {
        throw std::invalid_argument("hand_joint_to_skeleton: index out of range");
    }
    return topo.first_hand_joint(left) + hand_joint - 1;
}

namespace {

void check_lengths(const std::vector<LocalPose>& theta, const std::vector<PoseSE3>& cpf) {
    if (theta.size() != cpf.size()) {
        throw std::invalid_argument("guidance costs: pose/CPF trajectory lengths differ");
    }
}

}  // namespace

double cost_reproj(const std::vector<LocalPose>& theta, const ShapeParams& shape,
                   const std::vector<PoseSE3>& cpf_traj,
                   const std::vector<HandObservation>& observations) {
    check_lengths(theta, cpf_traj);
    double total = 0.0;
    for (const HandObservation& obs : observations) {
        if (obs.keypoints2d.empty()) continue;
        const int t = obs.timestep;
        if (t < 0 || t >= static_cast<int>(theta.size())) {
            throw std::invalid_argument("cost_reproj: observation timestep out of range");
        }
        const PosedBody body(theta[t], shape, cpf_traj[t]);
        for (const auto& [hand_joint, pixel] : obs.keypoints2d) {
            const int joint = hand_joint_to_skeleton(obs.left, hand_joint);
            const Vec3 p_cam = obs.camera_from_cpf * body.cpf_position(joint);
            if (p_cam.z() <= kMinCameraDepth) continue;  // behind-camera: dropped
            total += (project(obs.intrinsics, p_cam) - pixel).squaredNorm();
        }
    }
    return total;
}

double cost_hands3d(const std::vector<LocalPose>& theta, const ShapeParams& shape,
                    const std::vector<PoseSE3>& cpf_traj,
                    const std::vector<HandObservation>& observations) {
    check_lengths(theta, cpf_traj);
    double total = 0.0;
    for (const HandObservation& obs : observations) {
        if (!obs.wrist_pose_world) continue;
        const int t = obs.timestep;
        if (t < 0 || t >= static_cast<int>(theta.size())) {
            throw std::invalid_argument("cost_hands3d: observation timestep out of range");
        }
        const PosedBody body(theta[t], shape, cpf_traj[t]);
        const int wrist = hand_joint_to_skeleton(obs.left, 0);
        total += (body.world_position(wrist) - obs.wrist_pose_world->position).squaredNorm();
        const Rotation3 wrist_rot(body.world_rotation(wrist), Rotation3::Unchecked{});
        total += so3_log(Rotation3(obs.wrist_pose_world->rotation.matrix().transpose() *
                                       wrist_rot.matrix(),
                                   Rotation3::Unchecked{}))
                     .squaredNorm();
        if (obs.local_hand_rotations) {
            const int base = skeleton().first_hand_joint(obs.left);
            for (int i = 0; i < kHandJointCount; ++i) {
                const Rotation3& observed = (*obs.local_hand_rotations)[i];
                const Rotation3& modeled = theta[t].local(base + i);
                total += so3_log(Rotation3(observed.matrix().transpose() * modeled.matrix(),
                                           Rotation3::Unchecked{}))
                             .squaredNorm();
            }
        }
    }
    return total;
}

double cost_skate(const std::vector<LocalPose>& theta, const ShapeParams& shape,
                  const std::vector<PoseSE3>& cpf_traj, const Eigen::MatrixXd& contacts,
                  double lambda_skate) {
    check_lengths(theta, cpf_traj);
    if (contacts.rows() != static_cast<int>(theta.size()) ||
        contacts.cols() != kBodyJointCount) {
        throw std::invalid_argument("cost_skate: contacts must be T x 21");
    }
    double total = 0.0;
    for (std::size_t t = 1; t < theta.size(); ++t) {
        const PosedBody prev(theta[t - 1], shape, cpf_traj[t - 1]);
        const PosedBody curr(theta[t], shape, cpf_traj[t]);
        for (int j = 1; j <= kBodyJointCount; ++j) {
            const double weight = 0.5 * (contacts(t, j - 1) + contacts(t - 1, j - 1));
            if (weight == 0.0) continue;
            total += lambda_skate *
                     (weight * (curr.world_position(j) - prev.world_position(j))).squaredNorm();
        }
    }
    return total;
}

double cost_prior(const std::vector<LocalPose>& theta,
                  const std::vector<LocalPose>& theta_hat, const ShapeParams& shape,
                  const GuidanceWeights& weights) {
    if (theta.size() != theta_hat.size()) {
        throw std::invalid_argument("cost_prior: sequence lengths differ");
    }
    double total = 0.0;
    for (std::size_t t = 0; t < theta.size(); ++t) {
        if (weights.prior_abs > 0.0) {
            for (int j = 1; j <= kLocalRotationCount; ++j) {
                const double angle = geodesic_angle(theta_hat[t].local(j), theta[t].local(j));
                total += weights.prior_abs * angle * angle;
            }
        }
        if (weights.prior_vel > 0.0 && t >= 1) {
            for (int j = 1; j <= kLocalRotationCount; ++j) {
                const Vec3 v = so3_log(theta[t - 1].local(j).transpose() * theta[t].local(j));
                const Vec3 v_hat =
                    so3_log(theta_hat[t - 1].local(j).transpose() * theta_hat[t].local(j));
                total += weights.prior_vel * (v - v_hat).squaredNorm();
            }
        }
        if (weights.prior_fk > 0.0) {
            const BodyFrame fk = forward_kinematics(PoseSE3::identity(), theta[t], shape);
            const BodyFrame fk_hat =
                forward_kinematics(PoseSE3::identity(), theta_hat[t], shape);
            for (int j = 1; j < kJointCount; ++j) {
                total += weights.prior_fk * (fk.joints_world[j].position -
                                             fk_hat.joints_world[j].position)
                                                .squaredNorm();
            }
        }
    }
    return total;
}

}  // namespace egokit
