#include <doctest.h>

#include <random>

#include "egokit/body.hpp"
#include "test_util.hpp"

using namespace egokit;
using egotest::pose_diff;
using egotest::random_pose;
using egotest::random_rotation;

namespace {

LocalPose random_local_pose(std::mt19937_64& rng) {
    LocalPose pose;
    for (auto& r : pose.joint_rotations) r = random_rotation(rng);
    return pose;
}

ShapeParams random_shape(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.6, 1.8);
    return ShapeParams(u(rng), u(rng));
}

// Independent FK oracle: explicit recursion over children with Eigen affine
// transforms, no use of the library's compose/FK.
void fk_oracle_visit(int joint, const Eigen::Isometry3d& parent_world, const LocalPose& pose,
                     const ShapeParams& shape, std::array<Eigen::Isometry3d, kJointCount>& out) {
    const SkeletonTopology& topo = skeleton();
    Eigen::Isometry3d world = parent_world;
    if (topo.parent_index[joint] >= 0) {
        Eigen::Isometry3d local = Eigen::Isometry3d::Identity();
        local.linear() = pose.local(joint).matrix();
        local.translation() = shape.offset_scale(joint) * topo.rest_offset[joint];
        world = parent_world * local;
    }
    out[joint] = world;
    for (int child = 0; child < kJointCount; ++child) {
        if (topo.parent_index[child] == joint) {
            fk_oracle_visit(child, world, pose, shape, out);
        }
    }
}

std::array<Eigen::Isometry3d, kJointCount> fk_oracle(const PoseSE3& root, const LocalPose& pose,
                                                     const ShapeParams& shape) {
    Eigen::Isometry3d root_iso = Eigen::Isometry3d::Identity();
    root_iso.linear() = root.rotation.matrix();
    root_iso.translation() = root.position;
    std::array<Eigen::Isometry3d, kJointCount> out;
    fk_oracle_visit(0, root_iso, pose, shape, out);
    return out;
}

}  // namespace

TEST_CASE("skeleton topology sanity") {
    const SkeletonTopology& topo = skeleton();
    CHECK(topo.parent_index[0] == -1);
    int body_joints = 0;
    for (int j = 1; j < kJointCount; ++j) {
        CHECK(topo.parent_index[j] >= 0);
        CHECK(topo.parent_index[j] < j);  // tree, parents precede children
        if (j <= kBodyJointCount) ++body_joints;
    }
    CHECK(body_joints == 21);
    CHECK(skeleton_hash() == skeleton_hash());
}

TEST_CASE("neutral FK accumulates rest offsets") {
    const BodyFrame frame =
        forward_kinematics(PoseSE3::identity(), LocalPose{}, ShapeParams{});
    const SkeletonTopology& topo = skeleton();
    for (int j = 0; j < kJointCount; ++j) {
        Vec3 expected = Vec3::Zero();
        for (int a = j; a > 0; a = topo.parent_index[a]) expected += topo.rest_offset[a];
        CHECK((frame.joints_world[j].position - expected).norm() < 1e-15);
        CHECK((frame.joints_world[j].rotation.matrix() - Mat3::Identity()).norm() < 1e-15);
    }
}

TEST_CASE("FK equivariance under a world transform") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 20; ++i) {
        const PoseSE3 root = random_pose(rng);
        const LocalPose pose = random_local_pose(rng);
        const ShapeParams shape = random_shape(rng);
        const PoseSE3 g = random_pose(rng);

        const BodyFrame base = forward_kinematics(root, pose, shape);
        const BodyFrame moved = forward_kinematics(compose(g, root), pose, shape);
        for (int j = 0; j < kJointCount; ++j) {
            CHECK(pose_diff(moved.joints_world[j], compose(g, base.joints_world[j])) < 1e-10);
        }
    }
}

TEST_CASE("FK matches recursive tree-walk oracle") {
    std::mt19937_64 rng(32);
    for (int i = 0; i < 50; ++i) {
        const PoseSE3 root = random_pose(rng);
        const LocalPose pose = random_local_pose(rng);
        const ShapeParams shape = random_shape(rng);

        const BodyFrame frame = forward_kinematics(root, pose, shape);
        const auto oracle = fk_oracle(root, pose, shape);
        for (int j = 0; j < kJointCount; ++j) {
            CHECK((frame.joints_world[j].position - oracle[j].translation()).cwiseAbs().maxCoeff() <
                  1e-12);
            CHECK((frame.joints_world[j].rotation.matrix() - oracle[j].linear()).cwiseAbs().maxCoeff() <
                  1e-12);
        }
    }
}

TEST_CASE("CPF at neutral standing height") {
    const SkeletonTopology& topo = skeleton();
    // Stand the body so feet soles rest near the floor: pelvis at its
    // designed height = -(hip + knee + ankle + foot z offsets).
    Vec3 up = Vec3::Zero();
    for (int a = topo.left_foot_joint; a > 0; a = topo.parent_index[a]) {
        up += topo.rest_offset[a];
    }
    const double pelvis_height = -up.z() + 0.03;  // feet 3 cm above ground
    const PoseSE3 root(Rotation3::identity(), Vec3(0, 0, pelvis_height));
    const BodyFrame frame = forward_kinematics(root, LocalPose{}, ShapeParams{});
    const PoseSE3 cpf = cpf_pose(frame);

    // Eye height expected from the chain pelvis->head plus the CPF offset.
    Vec3 head = Vec3::Zero();
    for (int a = topo.head_joint; a > 0; a = topo.parent_index[a]) head += topo.rest_offset[a];
    const double expected_eye_z = pelvis_height + head.z() + topo.cpf_offset.z();
    CHECK(cpf.position.z() == doctest::Approx(expected_eye_z).epsilon(1e-12));
    // Facing +y at neutral.
    CHECK((cpf.rotation * Vec3::UnitZ() - Vec3::UnitY()).norm() < 1e-12);
}

TEST_CASE("CPF follows construction from the head joint") {
    std::mt19937_64 rng(33);
    const SkeletonTopology& topo = skeleton();
    for (int i = 0; i < 20; ++i) {
        const BodyFrame frame =
            forward_kinematics(random_pose(rng), random_local_pose(rng), random_shape(rng));
        const PoseSE3 expected = compose(frame.joints_world[topo.head_joint],
                                         PoseSE3(topo.head_to_cpf_rotation, topo.cpf_offset));
        CHECK(pose_diff(cpf_pose(frame), expected) == 0.0);
    }
}

TEST_CASE("rotating the root about z rotates the CPF forward direction identically") {
    const PoseSE3 root(Rotation3::identity(), Vec3(0, 0, 0.96));
    const BodyFrame base = forward_kinematics(root, LocalPose{}, ShapeParams{});
    const Vec3 fwd0 = cpf_pose(base).rotation * Vec3::UnitZ();
    for (double angle : {0.3, 1.2, -2.1}) {
        const BodyFrame turned =
            forward_kinematics(compose(PoseSE3(rz(angle), Vec3::Zero()), root), LocalPose{},
                               ShapeParams{});
        const Vec3 fwd = cpf_pose(turned).rotation * Vec3::UnitZ();
        CHECK((fwd - rz(angle) * fwd0).norm() < 1e-12);
    }
}

TEST_CASE("root_from_cpf identity and round trip") {
    std::mt19937_64 rng(34);
    const LocalPose pose = random_local_pose(rng);
    const ShapeParams shape = random_shape(rng);

    // CPF of the identity-rooted body maps back to the identity root.
    const PoseSE3 p = cpf_pose(forward_kinematics(PoseSE3::identity(), pose, shape));
    CHECK(pose_diff(root_from_cpf(pose, shape, p), PoseSE3::identity()) < 1e-12);

    // Any body frame: read its CPF, recover the original root.
    for (int i = 0; i < 20; ++i) {
        const PoseSE3 root = random_pose(rng);
        const BodyFrame frame = forward_kinematics(root, pose, shape);
        CHECK(pose_diff(root_from_cpf(pose, shape, cpf_pose(frame)), root) < 1e-10);
    }
}

TEST_CASE("alignment exactness over random cases") {
    std::mt19937_64 rng(35);
    for (int i = 0; i < 100; ++i) {
        const LocalPose pose = random_local_pose(rng);
        const ShapeParams shape = random_shape(rng);
        const PoseSE3 target = random_pose(rng);
        const PoseSE3 root = root_from_cpf(pose, shape, target);
        const PoseSE3 achieved = cpf_pose(forward_kinematics(root, pose, shape));
        CHECK((achieved.position - target.position).norm() < 1e-10);
        CHECK(geodesic_angle(achieved.rotation, target.rotation) < 1e-10);
    }
}

TEST_CASE("shape monotonicity of standing CPF height") {
    double prev = -1.0;
    for (double b1 : {0.6, 0.8, 1.0, 1.3, 1.7, 2.0}) {
        const BodyFrame frame = forward_kinematics(PoseSE3::identity(), LocalPose{},
                                                   ShapeParams(b1, 1.0));
        const double z = cpf_pose(frame).position.z();
        CHECK(z > prev);
        prev = z;
    }
}

TEST_CASE("globalize per-timestep behavior") {
    std::mt19937_64 rng(36);
    const int T = 12;
    std::vector<MotionState> states(T);
    std::vector<PoseSE3> cpf(T);
    std::uniform_real_distribution<double> u(0.7, 1.6);
    for (int t = 0; t < T; ++t) {
        for (auto& r : states[t].rotations6d) r = to_rot6d(random_rotation(rng));
        states[t].shape = Eigen::Vector2d(u(rng), u(rng));
        cpf[t] = random_pose(rng);
    }

    const auto frames = globalize(states, cpf);
    REQUIRE(frames.size() == static_cast<std::size_t>(T));

    const SkeletonTopology& topo = skeleton();
    for (int t = 0; t < T; ++t) {
        // Per-step composition oracle.
        const LocalPose pose = local_pose_from_state(states[t]);
        const ShapeParams shape(states[t].shape);
        const PoseSE3 root = root_from_cpf(pose, shape, cpf[t]);
        const BodyFrame expected = forward_kinematics(root, pose, shape);
        for (int j = 0; j < kJointCount; ++j) {
            CHECK(pose_diff(frames[t].joints_world[j], expected.joints_world[j]) < 1e-10);
        }
        // Head joint sits at the CPF minus the fixed offset.
        const PoseSE3 head_expected =
            compose(cpf[t], inverse(PoseSE3(topo.head_to_cpf_rotation, topo.cpf_offset)));
        CHECK(pose_diff(frames[t].joints_world[topo.head_joint], head_expected) < 1e-10);
    }
}

TEST_CASE("globalize rejects mismatched lengths") {
    std::vector<MotionState> states(3);
    std::vector<PoseSE3> cpf(2);
    CHECK_THROWS_AS(globalize(states, cpf), std::invalid_argument);
}

TEST_CASE("shape params validate range") {
    CHECK_THROWS_AS(ShapeParams(0.4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ShapeParams(1.0, 2.5), std::invalid_argument);
    CHECK_NOTHROW(ShapeParams(0.5, 2.0));
}
