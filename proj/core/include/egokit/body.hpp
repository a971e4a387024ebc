#pragma once

#include <array>
#include <vector>

#include "egokit/geometry.hpp"
#include "egokit/motion_state.hpp"
#include "egokit/skeleton.hpp"

namespace egokit {

/// Multiplicative bone-scale coefficients, each in [0.5, 2.0]. The first
/// scales every bone; the second additionally scales the arm/hand chain.
struct ShapeParams {
    Eigen::Vector2d beta{1.0, 1.0};

    ShapeParams() = default;
    explicit ShapeParams(const Eigen::Vector2d& b);
    ShapeParams(double height_scale, double arm_scale)
        : ShapeParams(Eigen::Vector2d(height_scale, arm_scale)) {}

    double offset_scale(int joint) const {
        return beta[0] * (skeleton().arm_chain[joint] ? beta[1] : 1.0);
    }
};

/// Local joint rotations for the 51 non-root joints; index i holds joint i+1.
struct LocalPose {
    std::vector<Rotation3> joint_rotations;

    LocalPose() : joint_rotations(kLocalRotationCount) {}

    const Rotation3& local(int joint) const { return joint_rotations[joint - 1]; }
    Rotation3& local(int joint) { return joint_rotations[joint - 1]; }
};

struct BodyFrame {
    PoseSE3 root;
    std::array<PoseSE3, kJointCount> joints_world;
};

BodyFrame forward_kinematics(const PoseSE3& root, const LocalPose& pose,
                             const ShapeParams& shape);

/// CPF = head joint pose composed with the fixed offset and the fixed
/// axis convention (CPF +z faces forward).
PoseSE3 cpf_pose(const BodyFrame& frame);

/// Root transform that places the body so its CPF lands exactly on
/// `world_cpf` for the given local pose and shape.
PoseSE3 root_from_cpf(const LocalPose& pose, const ShapeParams& shape,
                      const PoseSE3& world_cpf);

LocalPose local_pose_from_state(const MotionState& state);

/// Per timestep: root_from_cpf, then FK. Throws on length mismatch.
std::vector<BodyFrame> globalize(const std::vector<MotionState>& states,
                                 const std::vector<PoseSE3>& cpf_traj);

}  // namespace egokit
