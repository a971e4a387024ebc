#include <cmath>
#include <stdexcept>

#include "egokit/motion_data.hpp"
#include "egokit/random.hpp"

namespace egokit {

namespace {

Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }

// Two-link leg IK in the root frame: places the ankle exactly at `target`
// and keeps the foot level. Knee bends backward about an axis perpendicular
// to the reach direction and the forward axis.
struct LegSolution {
    Rotation3 hip;
    Rotation3 knee;
    Rotation3 ankle;
};

LegSolution solve_leg(const Vec3& hip_position, const Vec3& ankle_target, double thigh,
                      double shin) {
    Vec3 d = ankle_target - hip_position;
    double r = d.norm();
    const double max_reach = (thigh + shin) * 0.999;
    if (r > max_reach) {
        d *= max_reach / r;
        r = max_reach;
    }
    const double min_reach = std::abs(thigh - shin) * 1.001 + 1e-6;
    if (r < min_reach) {
        d = -Vec3::UnitZ() * min_reach;
        r = min_reach;
    }
    const Vec3 dir = d / r;

    const double cos_gamma =
        std::clamp((r * r - thigh * thigh - shin * shin) / (2.0 * thigh * shin), -1.0, 1.0);
    const double gamma = std::acos(cos_gamma);  // angle between thigh and shin vectors
    const double offset =
        std::atan2(shin * std::sin(gamma), thigh + shin * std::cos(gamma));

    // Knee axis: perpendicular to the reach direction, pointing right-ish so
    // positive rotation lifts the thigh forward.
    Vec3 axis = dir.cross(Vec3::UnitY());
    if (axis.norm() < 1e-9) axis = Vec3::UnitX();
    axis.normalize();

    const Vec3 thigh_dir = Eigen::AngleAxisd(offset, axis).toRotationMatrix() * dir;

    Mat3 hip;
    hip.col(0) = axis;
    hip.col(2) = -thigh_dir;
    hip.col(1) = hip.col(2).cross(hip.col(0));

    const Mat3 knee = rot_x(-gamma);
    const Mat3 ankle = (hip * knee).transpose();  // foot level, facing the root's forward
    return LegSolution{Rotation3(hip, Rotation3::Unchecked{}),
                       Rotation3(knee, Rotation3::Unchecked{}),
                       Rotation3(ankle, Rotation3::Unchecked{})};
}

struct PathPose {
    Vec3 position;   // pelvis
    double heading;  // forward = rz(heading) * e_y
};

// Per-family generation shares this scaffold: a pelvis path, per-frame
// ankle targets in world, and upper-body joint angles.
class FigureBuilder {
public:
    FigureBuilder(const ShapeParams& shape) : shape_(shape) {
        const SkeletonTopology& topo = skeleton();
        thigh_ = 0.42 * shape.beta[0];
        shin_ = 0.40 * shape.beta[0];
        pelvis_height_ = -(topo.rest_offset[1].z() + topo.rest_offset[4].z() +
                           topo.rest_offset[7].z()) *
                             shape.beta[0] +
                         0.08 * shape.beta[0];
        hip_offset_left_ = topo.rest_offset[1] * shape.beta[0];
        hip_offset_right_ = topo.rest_offset[2] * shape.beta[0];
    }

    double pelvis_height() const { return pelvis_height_; }
    double ankle_rest_height() const { return 0.08 * shape_.beta[0]; }

    // Appends one frame. Ankle targets are world positions.
    void add_frame(MotionSequence& seq, const PathPose& path, double pelvis_drop,
                   const Vec3& left_ankle_world, const Vec3& right_ankle_world,
                   const LocalPose& upper) {
        const PoseSE3 root(rz(path.heading),
                           Vec3(path.position.x(), path.position.y(),
                                pelvis_height_ - pelvis_drop));
        LocalPose pose = upper;
        const PoseSE3 root_inv = inverse(root);
        const LegSolution left =
            solve_leg(hip_offset_left_, root_inv * left_ankle_world, thigh_, shin_);
        const LegSolution right =
            solve_leg(hip_offset_right_, root_inv * right_ankle_world, thigh_, shin_);
        pose.local(1) = left.hip;
        pose.local(4) = left.knee;
        pose.local(7) = left.ankle;
        pose.local(2) = right.hip;
        pose.local(5) = right.knee;
        pose.local(8) = right.ankle;
        seq.root.push_back(root);
        seq.poses.push_back(std::move(pose));
    }

private:
    ShapeParams shape_;
    double thigh_ = 0.0, shin_ = 0.0, pelvis_height_ = 0.0;
    Vec3 hip_offset_left_, hip_offset_right_;
};

// Arms hanging at the sides with small personal variation.
LocalPose base_upper_body(Rng& rng, double arm_drop = 1.25) {
    LocalPose pose;
    const double jitter = 0.05;
    auto wobble = [&rng, jitter] {
        return so3_exp(Vec3(rng.uniform(-jitter, jitter), rng.uniform(-jitter, jitter),
                            rng.uniform(-jitter, jitter)));
    };
    pose.local(16) = Rotation3(rot_y(arm_drop), Rotation3::Unchecked{}) * wobble();
    pose.local(17) = Rotation3(rot_y(-arm_drop), Rotation3::Unchecked{}) * wobble();
    pose.local(18) = wobble();
    pose.local(19) = wobble();
    // Slight finger curl.
    for (int j = 22; j < kJointCount; ++j) {
        pose.local(j) = Rotation3(rot_x(0.15), Rotation3::Unchecked{});
    }
    return pose;
}

// Multi-frequency looking-around: yaw scanning plus pitch nodding on the
// neck joint.
struct HeadScan {
    double yaw_a1, yaw_w1, yaw_p1;
    double yaw_a2, yaw_w2, yaw_p2;
    double pitch_a, pitch_w, pitch_p;

    static HeadScan sample(Rng& rng, double intensity) {
        HeadScan scan;
        scan.yaw_a1 = intensity * rng.uniform(0.3, 0.7);
        scan.yaw_w1 = rng.uniform(0.3, 0.9);
        scan.yaw_p1 = rng.uniform(0.0, 2.0 * M_PI);
        scan.yaw_a2 = intensity * rng.uniform(0.1, 0.4);
        scan.yaw_w2 = rng.uniform(1.1, 2.3);
        scan.yaw_p2 = rng.uniform(0.0, 2.0 * M_PI);
        scan.pitch_a = intensity * rng.uniform(0.1, 0.3);
        scan.pitch_w = rng.uniform(0.4, 1.1);
        scan.pitch_p = rng.uniform(0.0, 2.0 * M_PI);
        return scan;
    }

    void apply(LocalPose& pose, double tsec) const {
        const double yaw = yaw_a1 * std::sin(yaw_w1 * tsec + yaw_p1) +
                           yaw_a2 * std::sin(yaw_w2 * tsec + yaw_p2);
        const double pitch = pitch_a * std::sin(pitch_w * tsec + pitch_p);
        pose.local(12) = rz(yaw) * Rotation3(rot_x(pitch), Rotation3::Unchecked{});
    }
};

void apply_arm_swing(LocalPose& pose, double swing) {
    // Hanging arms swing about the shoulder x-axis, opposing legs.
    pose.local(16) = pose.local(16) * Rotation3(rot_x(swing), Rotation3::Unchecked{});
    pose.local(17) = pose.local(17) * Rotation3(rot_x(-swing), Rotation3::Unchecked{});
}

Vec3 lateral_offset(double heading, double side_sign, double width) {
    return rz(heading) * Vec3(side_sign * width, 0.0, 0.0);
}

// Walking (optionally turning): stance ankles pinned to discrete footfalls,
// swing ankles interpolated with a sinusoidal lift.
MotionSequence make_locomotion(Rng& rng, const ShapeParams& shape, int total,
                               const Vec3& start, double heading0, double turn_rate) {
    MotionSequence seq;
    seq.shape = shape;
    FigureBuilder figure(shape);

    const double fps = 30.0;
    const double speed = rng.uniform(0.7, 1.3) * shape.beta[0];
    const double cycle = rng.uniform(1.0, 1.3);  // seconds per gait cycle
    const double step_time = cycle / 2.0;
    const double stride = speed * step_time;
    const double width = 0.09 * shape.beta[0];
    const double lift = rng.uniform(0.04, 0.08);
    const double bob = rng.uniform(0.01, 0.025);
    const double swing_amount = rng.uniform(0.2, 0.45);
    const HeadScan scan = HeadScan::sample(rng, rng.uniform(0.4, 1.0));
    const double speed_mod = rng.uniform(0.0, 0.3);
    const double speed_period = rng.uniform(5.0, 11.0);
    const double speed_phase = rng.uniform(0.0, 2.0 * M_PI);

    // Pelvis path: the heading wanders (mean-reverting random turn rate on
    // top of the commanded rate) and the speed breathes slowly.
    std::vector<PathPose> path(total);
    {
        Vec3 p = start;
        double heading = heading0;
        double wander = 0.0;
        for (int t = 0; t < total; ++t) {
            path[t] = {p, heading};
            wander += (-0.8 * wander + 1.6 * rng.normal()) / fps;
            heading += (turn_rate + wander) / fps;
            const double v =
                speed *
                (1.0 + speed_mod * std::sin(2.0 * M_PI * (t / fps) / speed_period + speed_phase));
            p += rz(heading) * Vec3(0.0, v / fps, 0.0);
        }
    }
    auto path_at = [&](double tsec) {
        const double ft = std::clamp(tsec * fps, 0.0, static_cast<double>(total - 1));
        const int i = static_cast<int>(ft);
        const double a = ft - i;
        const int j = std::min(i + 1, total - 1);
        PathPose out;
        out.position = (1.0 - a) * path[i].position + a * path[j].position;
        out.heading = path[i].heading + a * (path[j].heading - path[i].heading);
        return out;
    };

    // Footfall schedule: step k covers [k*step_time, (k+1)*step_time); the
    // moving foot alternates, landing half a stride ahead of the pelvis at
    // touchdown time.
    const double rest_z = figure.ankle_rest_height();
    auto footfall = [&](int k, double side_sign) {
        const PathPose at = path_at(k * step_time + step_time);
        Vec3 plant = at.position + rz(at.heading) * Vec3(0.0, stride * 0.5, 0.0) +
                     lateral_offset(at.heading, side_sign, width);
        plant.z() = rest_z;
        return plant;
    };

    // Initial plants under the hips.
    Vec3 left_plant = start + lateral_offset(heading0, 1.0, width);
    left_plant.z() = rest_z;
    Vec3 right_plant = start + lateral_offset(heading0, -1.0, width);
    right_plant.z() = rest_z;

    LocalPose upper = base_upper_body(rng);
    for (int t = 0; t < total; ++t) {
        const double tsec = t / fps;
        const int k = static_cast<int>(tsec / step_time);
        const double s = std::clamp((tsec - k * step_time) / step_time, 0.0, 1.0);
        const bool left_swings = k % 2 == 0;
        const Vec3 target = footfall(k, left_swings ? 1.0 : -1.0);

        // Swing interpolation: smoothstep in xy, sinusoidal lift; the stance
        // ankle stays pinned at its plant.
        const double blend = s * s * (3.0 - 2.0 * s);
        Vec3 left_target = left_plant;
        Vec3 right_target = right_plant;
        Vec3& swing_target = left_swings ? left_target : right_target;
        const Vec3& swing_plant = left_swings ? left_plant : right_plant;
        swing_target = (1.0 - blend) * swing_plant + blend * target;
        swing_target.z() = rest_z + lift * std::sin(M_PI * s);

        // Advance the plant when this frame closes the step window.
        if (static_cast<int>(((t + 1) / fps) / step_time) > k) {
            (left_swings ? left_plant : right_plant) = target;
        }

        const double phase = 2.0 * M_PI * tsec / cycle;
        const double drop = bob * 0.5 * (1.0 - std::cos(2.0 * phase));
        LocalPose frame_upper = upper;
        apply_arm_swing(frame_upper, swing_amount * std::sin(phase));
        scan.apply(frame_upper, tsec);
        figure.add_frame(seq, path_at(tsec), drop, left_target, right_target, frame_upper);
    }
    return seq;
}

MotionSequence make_squat(Rng& rng, const ShapeParams& shape, int total, const Vec3& start,
                          double heading) {
    MotionSequence seq;
    seq.shape = shape;
    FigureBuilder figure(shape);
    const double fps = 30.0;
    const double depth = rng.uniform(0.15, 0.3) * shape.beta[0];
    const double period = rng.uniform(2.0, 3.5);
    const double width = 0.11 * shape.beta[0];
    const double rest_z = figure.ankle_rest_height();
    const HeadScan scan = HeadScan::sample(rng, rng.uniform(0.2, 0.6));

    Vec3 left = start + lateral_offset(heading, 1.0, width);
    left.z() = rest_z;
    Vec3 right = start + lateral_offset(heading, -1.0, width);
    right.z() = rest_z;
    LocalPose upper = base_upper_body(rng);

    for (int t = 0; t < total; ++t) {
        const double tsec = t / fps;
        const double cycle = 0.5 * (1.0 - std::cos(2.0 * M_PI * tsec / period));
        LocalPose frame_upper = upper;
        // Arms raise forward as the squat deepens.
        const double raise = 1.05 * cycle;
        frame_upper.local(16) = Rotation3(rot_y(1.25 - raise), Rotation3::Unchecked{});
        frame_upper.local(17) = Rotation3(rot_y(-1.25 + raise), Rotation3::Unchecked{});
        // Slight forward torso lean.
        frame_upper.local(3) = Rotation3(rot_x(0.25 * cycle), Rotation3::Unchecked{});
        scan.apply(frame_upper, tsec);
        figure.add_frame(seq, PathPose{start, heading}, depth * cycle, left, right,
                         frame_upper);
    }
    return seq;
}

MotionSequence make_reach(Rng& rng, const ShapeParams& shape, int total, const Vec3& start,
                          double heading) {
    MotionSequence seq;
    seq.shape = shape;
    FigureBuilder figure(shape);
    const double fps = 30.0;
    const double width = 0.095 * shape.beta[0];
    const double rest_z = figure.ankle_rest_height();
    const double period = rng.uniform(1.5, 3.0);
    const bool left_arm = rng.uniform() < 0.5;
    const HeadScan scan = HeadScan::sample(rng, rng.uniform(0.3, 0.8));

    Vec3 left = start + lateral_offset(heading, 1.0, width);
    left.z() = rest_z;
    Vec3 right = start + lateral_offset(heading, -1.0, width);
    right.z() = rest_z;
    LocalPose upper = base_upper_body(rng);

    for (int t = 0; t < total; ++t) {
        const double tsec = t / fps;
        const double wave = 0.5 * (1.0 - std::cos(2.0 * M_PI * tsec / period));
        LocalPose frame_upper = upper;
        // The reaching arm swings forward and up; the elbow extends.
        const int shoulder = left_arm ? 16 : 17;
        const int elbow = left_arm ? 18 : 19;
        const double sign = left_arm ? 1.0 : -1.0;
        frame_upper.local(shoulder) =
            rz(sign * (0.4 + 1.0 * wave)) *
            Rotation3(rot_y(sign * (1.25 - 1.3 * wave)), Rotation3::Unchecked{});
        frame_upper.local(elbow) = rz(sign * 0.5 * (1.0 - wave));
        // Small weight shift.
        frame_upper.local(3) = Rotation3(rot_x(0.08 * wave), Rotation3::Unchecked{});
        scan.apply(frame_upper, tsec);
        figure.add_frame(seq, PathPose{start, heading}, 0.02 * wave, left, right,
                         frame_upper);
    }
    return seq;
}

MotionSequence make_idle(Rng& rng, const ShapeParams& shape, int total, const Vec3& start,
                         double heading) {
    MotionSequence seq;
    seq.shape = shape;
    FigureBuilder figure(shape);
    const double fps = 30.0;
    const double width = 0.1 * shape.beta[0];
    const double rest_z = figure.ankle_rest_height();
    const double sway_period = rng.uniform(3.0, 6.0);
    const HeadScan scan = HeadScan::sample(rng, rng.uniform(0.4, 1.0));

    Vec3 left = start + lateral_offset(heading, 1.0, width);
    left.z() = rest_z;
    Vec3 right = start + lateral_offset(heading, -1.0, width);
    right.z() = rest_z;
    LocalPose upper = base_upper_body(rng);

    for (int t = 0; t < total; ++t) {
        const double tsec = t / fps;
        LocalPose frame_upper = upper;
        const double sway = 0.05 * std::sin(2.0 * M_PI * tsec / sway_period);
        frame_upper.local(3) = Rotation3(rot_x(0.03 * std::sin(0.9 * tsec)) *
                                             Eigen::AngleAxisd(sway, Vec3::UnitY())
                                                 .toRotationMatrix(),
                                         Rotation3::Unchecked{});
        scan.apply(frame_upper, tsec);
        figure.add_frame(seq, PathPose{start, heading}, 0.005 * (1 + std::sin(1.1 * tsec)),
                         left, right, frame_upper);
    }
    return seq;
}

}  // namespace

void GeneratorConfig::validate() const {
    if (families.empty()) throw std::invalid_argument("GeneratorConfig: no families");
    for (const auto& f : families) {
        if (f != "walk" && f != "turn" && f != "squat" && f != "reach" && f != "idle") {
            throw std::invalid_argument("GeneratorConfig: unknown family '" + f + "'");
        }
    }
    if (!(height_scale_min <= height_scale_max) || !(arm_scale_min <= arm_scale_max)) {
        throw std::invalid_argument("GeneratorConfig: empty scale range");
    }
    if (duration_min < 2 || duration_max < duration_min) {
        throw std::invalid_argument("GeneratorConfig: bad duration range");
    }
}

std::vector<MotionSequence> generate(const GeneratorConfig& config, int count) {
    config.validate();
    std::vector<MotionSequence> out(count);
    for (int i = 0; i < count; ++i) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(i)));
        const std::string family =
            config.families[rng.uniform_index(config.families.size())];
        const ShapeParams shape(
            rng.uniform(config.height_scale_min, config.height_scale_max),
            rng.uniform(config.arm_scale_min, config.arm_scale_max));
        const int total =
            config.duration_min +
            static_cast<int>(rng.uniform_index(config.duration_max - config.duration_min + 1));
        const double angle = rng.uniform(0.0, 2.0 * M_PI);
        const double radius = config.placement_radius * std::sqrt(rng.uniform());
        const Vec3 start(radius * std::cos(angle), radius * std::sin(angle), 0.0);
        const double heading = rng.uniform(-M_PI, M_PI);

        MotionSequence seq;
        if (family == "walk") {
            seq = make_locomotion(rng, shape, total, start, heading, 0.0);
        } else if (family == "turn") {
            const double rate = rng.uniform(0.25, 0.7) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
            seq = make_locomotion(rng, shape, total, start, heading, rate);
        } else if (family == "squat") {
            seq = make_squat(rng, shape, total, start, heading);
        } else if (family == "reach") {
            seq = make_reach(rng, shape, total, start, heading);
        } else {
            seq = make_idle(rng, shape, total, start, heading);
        }
        seq.family = family;
        char id[64];
        std::snprintf(id, sizeof(id), "%s_%08llx_%04d", family.c_str(),
                      static_cast<unsigned long long>(derive_seed(config.seed, 0x1d) & 0xffffffffULL),
                      i);
        seq.id = id;
        seq.fps = 30;
        seq.contacts = label_contacts(seq.body_frames());
        seq.derive_cpf();
        out[i] = std::move(seq);
    }
    return out;
}

}  // namespace egokit
