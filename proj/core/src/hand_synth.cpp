#include "egokit/motion_data.hpp"
#include "egokit/random.hpp"

namespace egokit {

std::vector<HandObservation> synthesize_hand_observations(const MotionSequence& seq,
                                                          const HandSynthesisConfig& config) {
    config.intrinsics.validate();
    Rng rng(config.seed);
    std::vector<HandObservation> out;
    const SkeletonTopology& topo = skeleton();
    const auto frames = seq.body_frames();

    for (int t = 0; t < seq.length(); ++t) {
        const PoseSE3 camera_from_world =
            compose(config.camera_from_cpf, inverse(seq.cpf[t]));
        for (const bool left : {true, false}) {
            // Draw the dropout decision unconditionally so the stream does
            // not depend on visibility.
            const bool dropped = rng.uniform() < config.dropout;

            const int wrist = left ? topo.left_wrist_joint : topo.right_wrist_joint;
            const Vec3 wrist_cam = camera_from_world * frames[t].joints_world[wrist].position;
            if (dropped || wrist_cam.z() <= 0.05) continue;

            HandObservation obs;
            obs.timestep = t;
            obs.left = left;
            obs.intrinsics = config.intrinsics;
            obs.camera_from_cpf = config.camera_from_cpf;

            // Pixels from the true geometry plus optional noise.
            for (int hj = 0; hj <= kHandJointCount; ++hj) {
                const int joint = hj == 0 ? wrist : topo.first_hand_joint(left) + hj - 1;
                const Vec3 p_cam = camera_from_world * frames[t].joints_world[joint].position;
                if (p_cam.z() <= kMinCameraDepth) continue;
                Vec2 px = project(config.intrinsics, p_cam);
                if (config.pixel_noise > 0.0) {
                    px.x() += config.pixel_noise * rng.normal();
                    px.y() += config.pixel_noise * rng.normal();
                }
                obs.keypoints2d.emplace_back(hj, px);
            }

            // 3D wrist pose; depth scaling slides it along the camera ray.
            const PoseSE3 wrist_world = frames[t].joints_world[wrist];
            const PoseSE3 world_from_camera = inverse(camera_from_world);
            const Vec3 scaled_cam = config.depth_scale * wrist_cam;
            obs.wrist_pose_world =
                PoseSE3(wrist_world.rotation, world_from_camera * scaled_cam);

            std::vector<Rotation3> locals;
            locals.reserve(kHandJointCount);
            const int base = topo.first_hand_joint(left);
            for (int i = 0; i < kHandJointCount; ++i) {
                locals.push_back(seq.poses[t].local(base + i));
            }
            obs.local_hand_rotations = std::move(locals);

            if (obs.has_evidence()) out.push_back(std::move(obs));
        }
    }
    return out;
}

}  // namespace egokit
