#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "egokit/geometry.hpp"

namespace egokit {

/// Head-motion conditioning parameterizations. EgoAllo is the invariant
/// one: per-timestep relative CPF motion plus the pose expressed in a
/// per-timestep floor-projected canonical frame.
enum class ConditioningVariant {
    kEgoAllo,
    kAbsoluteLocalRelative,
    kAbsoluteGlobalDeltas,
    kSequenceCanonicalization,
    kAbsolute,
};

std::string to_string(ConditioningVariant v);
std::optional<ConditioningVariant> parse_conditioning_variant(const std::string& name);

/// Feature width per timestep for a variant (SE(3) values serialize as
/// Rot6D + position, 9 reals each).
int conditioning_dim(ConditioningVariant v);

/// Floor-projected canonical frame of a CPF pose: position is the xy
/// projection of the CPF origin, z up, y-axis along the CPF's horizontal
/// facing direction. Assumes the ground at z = 0.
PoseSE3 canonical_frame(const PoseSE3& world_cpf);

using ConditionVector = Eigen::VectorXd;

/// Encodes a CPF trajectory. Throws on an empty trajectory. Relative terms
/// at the first timestep are identity/zero so the feature width is constant.
std::vector<ConditionVector> encode(ConditioningVariant variant,
                                    const std::vector<PoseSE3>& traj);

}  // namespace egokit
