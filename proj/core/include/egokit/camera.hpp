#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "egokit/geometry.hpp"

namespace egokit {

struct CameraIntrinsics {
    double fx = 0.0, fy = 0.0;  // focal lengths, pixels
    double cx = 0.0, cy = 0.0;  // principal point, pixels

    void validate() const;
};

inline constexpr double kMinCameraDepth = 1e-6;

/// Pinhole projection of a camera-frame point. Throws when the point is not
/// in front of the camera (z <= kMinCameraDepth).
Vec2 project(const CameraIntrinsics& k, const Vec3& p_camera);

/// Per-timestep hand evidence. Keypoints are pixel observations indexed by
/// hand joint (0 = wrist, 1..15 = finger joints in skeleton order); 3D
/// evidence is a world-frame wrist pose, optionally with the 15 local
/// finger rotations.
struct HandObservation {
    int timestep = 0;
    bool left = true;
    std::vector<std::pair<int, Vec2>> keypoints2d;
    std::optional<PoseSE3> wrist_pose_world;
    std::optional<std::vector<Rotation3>> local_hand_rotations;
    CameraIntrinsics intrinsics;
    PoseSE3 camera_from_cpf;

    bool has_evidence() const { return !keypoints2d.empty() || wrist_pose_world.has_value(); }
};

}  // namespace egokit
