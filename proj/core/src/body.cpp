#include "egokit/body.hpp"

#include <stdexcept>

namespace egokit {

ShapeParams::ShapeParams(const Eigen::Vector2d& b) : beta(b) {
    for (int i = 0; i < 2; ++i) {
        if (!(beta[i] >= 0.5 && beta[i] <= 2.0)) {
            throw std::invalid_argument("ShapeParams: coefficients must lie in [0.5, 2.0]");
        }
    }
}

BodyFrame forward_kinematics(const PoseSE3& root, const LocalPose& pose,
                             const ShapeParams& shape) {
    const SkeletonTopology& topo = skeleton();
    BodyFrame frame;
    frame.root = root;
    frame.joints_world[0] = root;
    for (int j = 1; j < kJointCount; ++j) {
        const PoseSE3 local(pose.local(j), shape.offset_scale(j) * topo.rest_offset[j]);
        frame.joints_world[j] = compose(frame.joints_world[topo.parent_index[j]], local);
    }
    return frame;
}

PoseSE3 cpf_pose(const BodyFrame& frame) {
    const SkeletonTopology& topo = skeleton();
    return compose(frame.joints_world[topo.head_joint],
                   PoseSE3(topo.head_to_cpf_rotation, topo.cpf_offset));
}

PoseSE3 root_from_cpf(const LocalPose& pose, const ShapeParams& shape,
                      const PoseSE3& world_cpf) {
    const BodyFrame from_identity = forward_kinematics(PoseSE3::identity(), pose, shape);
    return compose(world_cpf, inverse(cpf_pose(from_identity)));
}

LocalPose local_pose_from_state(const MotionState& state) {
    LocalPose pose;
    for (int i = 0; i < kLocalRotationCount; ++i) {
        pose.joint_rotations[i] = from_rot6d(state.rotations6d[i]);
    }
    return pose;
}

std::vector<BodyFrame> globalize(const std::vector<MotionState>& states,
                                 const std::vector<PoseSE3>& cpf_traj) {
    if (states.size() != cpf_traj.size()) {
        throw std::invalid_argument("globalize: state and CPF trajectory lengths differ");
    }
    std::vector<BodyFrame> frames;
    frames.reserve(states.size());
    for (std::size_t t = 0; t < states.size(); ++t) {
        const LocalPose pose = local_pose_from_state(states[t]);
        const ShapeParams shape(states[t].shape.cwiseMax(0.5).cwiseMin(2.0));
        const PoseSE3 root = root_from_cpf(pose, shape, cpf_traj[t]);
        frames.push_back(forward_kinematics(root, pose, shape));
    }
    return frames;
}

}  // namespace egokit
