#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "egokit/geometry.hpp"

namespace egokit {

inline constexpr int kJointCount = 52;       // 1 root + 21 body + 15 per hand
inline constexpr int kBodyJointCount = 21;   // non-root body joints, contact-labeled
inline constexpr int kLocalRotationCount = kJointCount - 1;  // 51
inline constexpr int kHandJointCount = 15;

/// Fixed kinematic tree. Rest offsets are in the parent joint frame, meters,
/// for a neutral standing figure of ~1.70 m at unit shape. The neutral body
/// faces +y with +z up; left is +x.
struct SkeletonTopology {
    std::array<int, kJointCount> parent_index;          // -1 for the root
    std::array<Vec3, kJointCount> rest_offset;
    std::array<const char*, kJointCount> joint_name;
    std::array<bool, kJointCount> arm_chain;            // scaled by the arm coefficient

    int head_joint = 15;
    int left_foot_joint = 10;
    int right_foot_joint = 11;
    int left_wrist_joint = 20;
    int right_wrist_joint = 21;

    // CPF sits above and in front of the head joint; +z faces forward.
    Vec3 cpf_offset{0.0, 0.07, 0.10};
    Rotation3 head_to_cpf_rotation;

    int first_hand_joint(bool left) const { return left ? 22 : 37; }
};

const SkeletonTopology& skeleton();

/// True when `ancestor` lies on the chain from the root to `joint`,
/// inclusive. Cached table.
bool is_ancestor_or_self(int ancestor, int joint);

/// FNV-1a over the topology table; stamped into motion files so readers can
/// reject sequences recorded against a different skeleton.
std::uint64_t skeleton_hash();

}  // namespace egokit
