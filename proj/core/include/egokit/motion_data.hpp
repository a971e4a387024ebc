#pragma once

#include <optional>
#include <string>
#include <vector>

#include "egokit/body.hpp"
#include "egokit/camera.hpp"
#include "egokit/floor.hpp"
#include "egokit/motion_state.hpp"

namespace egokit {

/// A ground-truth motion clip: per-timestep root pose, local pose, and
/// contact labels, plus the sequence shape and the derived CPF trajectory.
struct MotionSequence {
    std::string id;
    std::string family;
    int fps = 30;
    ShapeParams shape;
    std::vector<PoseSE3> root;
    std::vector<LocalPose> poses;
    Eigen::MatrixXd contacts;  // T x 21
    std::vector<PoseSE3> cpf;  // derived from FK
    std::optional<std::vector<HandObservation>> hand_observations;
    std::optional<SparsePointCloud> points;

    int length() const { return static_cast<int>(root.size()); }

    /// Recomputes the CPF trajectory from FK of the stored states.
    void derive_cpf();

    /// Flattened diffusion states, T x kStateDim (shape replicated per row).
    Eigen::MatrixXd states() const;

    std::vector<BodyFrame> body_frames() const;
};

/// Re-derives contact labels from world joint positions: a joint is in
/// contact when its height is below 5 cm and it moved less than 1 cm since
/// the previous frame (forward difference at t = 0).
Eigen::MatrixXd label_contacts(const std::vector<BodyFrame>& frames);

inline constexpr double kContactHeight = 0.05;
inline constexpr double kContactDisplacement = 0.01;

/// Newline-delimited text: one header line, then one record per timestep
/// (root rotation row-major + position, 51 rotations, 21 contacts), all
/// numbers as 17-significant-digit decimals.
void save_motion(const std::string& path, const MotionSequence& seq);
MotionSequence load_motion(const std::string& path);

/// Deterministic 90/10 split on the id hash.
bool is_test_sequence(const std::string& id);

struct GeneratorConfig {
    std::vector<std::string> families = {"walk", "turn", "squat", "reach", "idle"};
    double height_scale_min = 0.85;
    double height_scale_max = 1.15;
    double arm_scale_min = 0.95;
    double arm_scale_max = 1.05;
    int duration_min = 150;   // timesteps at 30 fps
    int duration_max = 300;
    double placement_radius = 15.0;  // world xy start positions
    std::uint64_t seed = 0;

    void validate() const;
};

/// Procedural gait/turn/squat/reach/idle kinematics with exact foot plants
/// (analytic two-link leg IK) and sinusoidal limb phasing. Deterministic
/// given the seed; sequence i uses a derived stream.
std::vector<MotionSequence> generate(const GeneratorConfig& config, int count);

struct HandSynthesisConfig {
    CameraIntrinsics intrinsics{350.0, 350.0, 240.0, 240.0};
    PoseSE3 camera_from_cpf;  // identity: camera at the CPF
    double depth_scale = 1.0;   // multiplies camera-frame points along the ray
    double pixel_noise = 0.0;   // std-dev, pixels
    double dropout = 0.0;       // per-timestep-per-hand drop probability
    std::uint64_t seed = 0;
};

/// Projects the FK hand joints through the configured camera and emits
/// per-timestep observations (pixels, world wrist pose, local rotations),
/// with the requested corruption applied. Depth scaling moves 3D evidence
/// along the camera ray, so pixels stay consistent.
std::vector<HandObservation> synthesize_hand_observations(const MotionSequence& seq,
                                                          const HandSynthesisConfig& config);

/// Text format for observations; see the repo format docs.
void save_hand_observations(const std::string& path,
                            const std::vector<HandObservation>& observations);
std::vector<HandObservation> load_hand_observations(const std::string& path);

/// Bare CPF trajectory: one pose per line (rotation row-major + position).
void save_cpf_trajectory(const std::string& path, const std::vector<PoseSE3>& traj);
std::vector<PoseSE3> load_cpf_trajectory(const std::string& path);

}  // namespace egokit
