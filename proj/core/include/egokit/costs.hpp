#pragma once

#include <vector>

#include "egokit/body.hpp"
#include "egokit/camera.hpp"
#include "egokit/geometry.hpp"

namespace egokit {

struct GuidanceWeights {
    double hands3d = 50.0;   // meter^2 terms need headroom over the priors
    double reproj = 0.01;    // pixel^2 against meter^2 balancing
    double skate = 10.0;
    double prior_abs = 1.0;
    double prior_vel = 10.0;
    double prior_fk = 1.0;

    void validate() const;
};

/// One timestep of the CPF-pinned body: identity-root FK plus the root
/// transform implied by exact CPF alignment, with closed-form derivatives
/// of positions and orientations with respect to each local rotation's
/// right tangent. Tangent indices m run over 1..51 (non-root joints).
class PosedBody {
public:
    PosedBody(const LocalPose& pose, const ShapeParams& shape, const PoseSE3& world_cpf);

    const PoseSE3& world_cpf() const { return world_cpf_; }

    Vec3 world_position(int joint) const;
    Mat3 world_rotation(int joint) const;
    Vec3 cpf_position(int joint) const;
    Vec3 root_frame_position(int joint) const { return frame_.joints_world[joint].position; }

    /// d world_position(joint) / d tangent(m), 3x3.
    Mat3 d_world_position(int joint, int m) const;
    /// d cpf_position(joint) / d tangent(m).
    Mat3 d_cpf_position(int joint, int m) const;
    /// d root_frame_position(joint) / d tangent(m) (no CPF coupling).
    Mat3 d_root_frame_position(int joint, int m) const;
    /// Body-frame angular velocity of the world rotation of `joint` per
    /// unit tangent of m; the perturbation is right-multiplicative.
    Mat3 d_world_rotation_tangent(int joint, int m) const;

private:
    // Sign of the coupled derivative: +1 when m drives the joint directly,
    // -1 when it drives only the head chain (CPF pinning counter-motion).
    double coupling(int joint, int m) const;

    BodyFrame frame_;      // identity-root FK
    PoseSE3 cpf_a_;        // CPF pose of the identity-rooted body
    PoseSE3 world_cpf_;
    Mat3 q_;               // world_cpf.rotation * cpf_a.rotation^T
};

/// Sum over observations of squared pixel errors, Eq-style chain through
/// the CPF-pinned body and the device camera. Unweighted.
double cost_reproj(const std::vector<LocalPose>& theta, const ShapeParams& shape,
                   const std::vector<PoseSE3>& cpf_traj,
                   const std::vector<HandObservation>& observations);

/// Squared wrist position error plus squared geodesic angles of wrist
/// orientation and local finger rotations. Unweighted.
double cost_hands3d(const std::vector<LocalPose>& theta, const ShapeParams& shape,
                    const std::vector<PoseSE3>& cpf_traj,
                    const std::vector<HandObservation>& observations);

/// lambda * sum over steps/joints of ||mean-contact * joint displacement||^2.
double cost_skate(const std::vector<LocalPose>& theta, const ShapeParams& shape,
                  const std::vector<PoseSE3>& cpf_traj, const Eigen::MatrixXd& contacts,
                  double lambda_skate);

/// Absolute-rotation, rotational-velocity, and FK-position deviation from
/// the denoised pose, each with its weight.
double cost_prior(const std::vector<LocalPose>& theta,
                  const std::vector<LocalPose>& theta_hat, const ShapeParams& shape,
                  const GuidanceWeights& weights);

/// Skeleton joint index of a hand keypoint: 0 is the wrist, 1..15 the
/// finger joints in skeleton order.
int hand_joint_to_skeleton(bool left, int hand_joint);

}  // namespace egokit
