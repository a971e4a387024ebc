#pragma once

#include <vector>

#include <Eigen/Core>

#include "egokit/geometry.hpp"
#include "egokit/skeleton.hpp"

namespace egokit {

inline constexpr int kShapeDim = 2;  // height scale, arm-length scale
inline constexpr int kStateDim = kLocalRotationCount * 6 + kShapeDim + kBodyJointCount;  // 329

/// Per-timestep diffusion state: 51 local joint rotations as 6D encodings,
/// shape coefficients, and per-joint contact values (trained toward {0,1}).
struct MotionState {
    std::vector<Rot6D> rotations6d;   // 51 entries
    Eigen::Vector2d shape;
    Eigen::Matrix<double, kBodyJointCount, 1> contacts;

    MotionState()
        : rotations6d(kLocalRotationCount, (Rot6D() << 1, 0, 0, 0, 1, 0).finished()),
          shape(Eigen::Vector2d::Ones()),
          contacts(Eigen::Matrix<double, kBodyJointCount, 1>::Zero()) {}

    /// Flattened layout: rotations (joint 1..51, 6 each), shape, contacts.
    Eigen::VectorXd flatten() const;
    static MotionState unflatten(const Eigen::VectorXd& v);
};

}  // namespace egokit
