#include <doctest.h>

#include <random>

#include "egokit/conditioning.hpp"
#include "test_util.hpp"

using namespace egokit;
using egotest::random_pose;
using egotest::to_homogeneous;

namespace {

// CPF orientation looking along `yaw` (0 = +y) with a pitch about the local
// x-axis; matches the CPF convention of +z forward, +y down.
Rotation3 cpf_orientation(double yaw, double pitch) {
    Mat3 base;
    base << 1, 0, 0,
            0, 0, 1,
            0, -1, 0;
    const Mat3 rx = Eigen::AngleAxisd(pitch, Vec3::UnitX()).toRotationMatrix();
    return rz(yaw) * Rotation3(rx * base, Rotation3::Unchecked{});
}

// Synthetic walking head trajectory: forward drift, gentle turning, height
// bob, pitch nodding.
std::vector<PoseSE3> walking_trajectory(int length, unsigned seed = 7) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<PoseSE3> traj;
    double x = u(rng) * 3.0, y = u(rng) * 3.0, yaw = u(rng) * M_PI;
    for (int t = 0; t < length; ++t) {
        yaw += 0.03 * std::sin(0.11 * t);
        x += 0.04 * -std::sin(yaw);
        y += 0.04 * std::cos(yaw);
        const double z = 1.62 + 0.02 * std::sin(0.7 * t);
        const double pitch = 0.2 * std::sin(0.23 * t + 1.0);
        traj.emplace_back(cpf_orientation(yaw, pitch), Vec3(x, y, z));
    }
    return traj;
}

PoseSE3 random_txy(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return PoseSE3(rz(u(rng) * M_PI), Vec3(u(rng) * 10.0, u(rng) * 10.0, 0.0));
}

std::vector<PoseSE3> apply_left(const PoseSE3& g, const std::vector<PoseSE3>& traj) {
    std::vector<PoseSE3> out;
    out.reserve(traj.size());
    for (const auto& p : traj) out.push_back(compose(g, p));
    return out;
}

double max_feature_diff(const std::vector<ConditionVector>& a,
                        const std::vector<ConditionVector>& b, int from = 0) {
    double worst = 0.0;
    for (std::size_t t = from; t < a.size(); ++t) {
        worst = std::max(worst, (a[t] - b[t]).cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace

TEST_CASE("canonical frame on axis-aligned gazes") {
    // Facing +y: canonical rotation is the identity.
    const PoseSE3 facing_y(cpf_orientation(0.0, 0.0), Vec3(3, 4, 1.7));
    const PoseSE3 canon_y = canonical_frame(facing_y);
    CHECK((canon_y.rotation.matrix() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((canon_y.position - Vec3(3, 4, 0)).norm() < 1e-15);

    // Facing +x: canonical rotation rz(-pi/2), whose y-axis is e_x.
    const PoseSE3 facing_x(cpf_orientation(-M_PI_2, 0.0), Vec3(1, 2, 1.5));
    const PoseSE3 canon_x = canonical_frame(facing_x);
    CHECK((canon_x.rotation.matrix() - rz(-M_PI_2).matrix()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((canon_x.rotation * Vec3::UnitY() - Vec3::UnitX()).norm() < 1e-12);

    // Facing +y pitched down 30 degrees: still a zero heading.
    const PoseSE3 pitched(cpf_orientation(0.0, -M_PI / 6.0), Vec3(0.5, -0.25, 1.6));
    const Vec3 v = pitched.rotation * Vec3::UnitZ();
    CHECK(v.x() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(v.z() == doctest::Approx(-std::sin(M_PI / 6.0)).epsilon(1e-12));
    const PoseSE3 canon_p = canonical_frame(pitched);
    CHECK((canon_p.rotation.matrix() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((canon_p.position - Vec3(0.5, -0.25, 0)).norm() < 1e-15);
}

TEST_CASE("canonical frame equivaries with floor-plane transforms") {
    std::mt19937_64 rng(41);
    const auto traj = walking_trajectory(20);
    for (int i = 0; i < 50; ++i) {
        const PoseSE3 g = random_txy(rng);
        for (const auto& p : traj) {
            const PoseSE3 lhs = canonical_frame(compose(g, p));
            const PoseSE3 rhs = compose(g, canonical_frame(p));
            CHECK(egotest::pose_diff(lhs, rhs) < 1e-9);
        }
    }
}

TEST_CASE("static trajectory: EgoAllo deltas identity, canonical parts equal") {
    const PoseSE3 pose(cpf_orientation(0.7, 0.1), Vec3(2, -1, 1.55));
    const std::vector<PoseSE3> traj(10, pose);
    const auto cond = encode(ConditioningVariant::kEgoAllo, traj);
    Eigen::VectorXd identity_pose(9);
    identity_pose << 1, 0, 0, 0, 1, 0, 0, 0, 0;
    for (const auto& c : cond) {
        CHECK((c.head<9>() - identity_pose).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((c.tail<9>() - cond.front().tail<9>()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("EgoAllo encoding matches a step-by-step evaluation") {
    // Independent implementation over homogeneous matrices: the relative
    // motion, the floor projection, and the heading alignment are each
    // evaluated directly.
    const auto traj = walking_trajectory(48);
    const auto cond = encode(ConditioningVariant::kEgoAllo, traj);
    for (std::size_t t = 0; t < traj.size(); ++t) {
        Eigen::Matrix4d delta = Eigen::Matrix4d::Identity();
        if (t > 0) delta = to_homogeneous(traj[t - 1]).inverse() * to_homogeneous(traj[t]);

        const Eigen::Matrix3d r = traj[t].rotation.matrix();
        const Eigen::Vector3d v = r.col(2);  // R e_z
        const double heading = std::atan2(Eigen::Vector3d::UnitX().dot(v),
                                          Eigen::Vector3d::UnitY().dot(v));
        Eigen::Matrix4d canonical = Eigen::Matrix4d::Identity();
        const double c = std::cos(-heading), s = std::sin(-heading);
        canonical.topLeftCorner<3, 3>() << c, -s, 0, s, c, 0, 0, 0, 1;
        canonical.topRightCorner<3, 1>() =
            Eigen::Vector3d(traj[t].position.x(), traj[t].position.y(), 0.0);
        const Eigen::Matrix4d local = canonical.inverse() * to_homogeneous(traj[t]);

        Eigen::VectorXd expected(18);
        expected.segment<3>(0) = delta.block<3, 1>(0, 0);
        expected.segment<3>(3) = delta.block<3, 1>(0, 1);
        expected.segment<3>(6) = delta.block<3, 1>(0, 3);
        expected.segment<3>(9) = local.block<3, 1>(0, 0);
        expected.segment<3>(12) = local.block<3, 1>(0, 1);
        expected.segment<3>(15) = local.block<3, 1>(0, 3);
        CHECK((cond[t] - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("spatial invariance holds for EgoAllo and SequenceCanonicalization") {
    std::mt19937_64 rng(42);
    const auto traj = walking_trajectory(32);
    for (auto variant : {ConditioningVariant::kEgoAllo,
                         ConditioningVariant::kSequenceCanonicalization}) {
        const auto base = encode(variant, traj);
        for (int i = 0; i < 100; ++i) {
            const auto moved = encode(variant, apply_left(random_txy(rng), traj));
            CHECK(max_feature_diff(base, moved) < 1e-9);
        }
    }
}

TEST_CASE("temporal shift equivariance for per-timestep variants") {
    const auto traj = walking_trajectory(64);
    for (auto variant : {ConditioningVariant::kEgoAllo, ConditioningVariant::kAbsolute,
                         ConditioningVariant::kAbsoluteLocalRelative,
                         ConditioningVariant::kAbsoluteGlobalDeltas}) {
        const auto full = encode(variant, traj);
        std::mt19937_64 rng(43);
        for (int i = 0; i < 100; ++i) {
            const int shift = 1 + static_cast<int>(rng() % 30);
            const int len = 16 + static_cast<int>(rng() % 16);
            const std::vector<PoseSE3> window(traj.begin() + shift,
                                              traj.begin() + shift + len);
            const auto shifted = encode(variant, window);
            // The first timestep of the window references t-1 across the
            // boundary; all others must reproduce the full encoding.
            for (int t = 1; t < len; ++t) {
                CHECK((shifted[t] - full[t + shift]).cwiseAbs().maxCoeff() < 1e-9);
            }
            if (variant == ConditioningVariant::kAbsolute) {
                CHECK((shifted[0] - full[shift]).cwiseAbs().maxCoeff() < 1e-9);
            }
        }
    }
}

TEST_CASE("violation witnesses match the invariance classification") {
    const auto traj = walking_trajectory(40);
    std::mt19937_64 rng(44);
    const PoseSE3 big_txy(rz(2.0), Vec3(8.0, -6.0, 0.0));

    // Absolute and AbsoluteGlobalDeltas both move with the world frame.
    for (auto variant : {ConditioningVariant::kAbsolute,
                         ConditioningVariant::kAbsoluteGlobalDeltas}) {
        const auto base = encode(variant, traj);
        const auto moved = encode(variant, apply_left(big_txy, traj));
        CHECK(max_feature_diff(base, moved) > 0.1);
    }

    // SequenceCanonicalization depends on the window's first timestep.
    {
        const auto variant = ConditioningVariant::kSequenceCanonicalization;
        const auto full = encode(variant, traj);
        const int shift = 13;
        const std::vector<PoseSE3> window(traj.begin() + shift, traj.end());
        const auto shifted = encode(variant, window);
        double worst = 0.0;
        for (std::size_t t = 1; t < window.size(); ++t) {
            worst = std::max(worst, (shifted[t] - full[t + shift]).cwiseAbs().maxCoeff());
        }
        CHECK(worst > 0.1);
    }
}

TEST_CASE("global deltas are world-frame, EgoAllo deltas are local-frame") {
    const auto traj = walking_trajectory(24);
    const PoseSE3 g(rz(1.3), Vec3(2.0, 5.0, 0.0));
    const auto moved = apply_left(g, traj);

    // World-frame position deltas rotate with g.
    const auto base_g = encode(ConditioningVariant::kAbsoluteGlobalDeltas, traj);
    const auto moved_g = encode(ConditioningVariant::kAbsoluteGlobalDeltas, moved);
    double delta_change = 0.0;
    for (std::size_t t = 1; t < traj.size(); ++t) {
        delta_change = std::max(
            delta_change, (base_g[t].segment<3>(15) - moved_g[t].segment<3>(15)).norm());
    }
    CHECK(delta_change > 1e-3);

    // EgoAllo's local deltas do not.
    const auto base_e = encode(ConditioningVariant::kEgoAllo, traj);
    const auto moved_e = encode(ConditioningVariant::kEgoAllo, moved);
    for (std::size_t t = 0; t < traj.size(); ++t) {
        CHECK((base_e[t].head<9>() - moved_e[t].head<9>()).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("vertical gaze falls back to the previous heading") {
    std::vector<PoseSE3> traj;
    traj.emplace_back(cpf_orientation(0.9, 0.0), Vec3(1, 1, 1.6));
    // Looking straight down: forward has no horizontal component.
    traj.emplace_back(cpf_orientation(0.9, -M_PI_2), Vec3(1, 1, 1.6));
    const auto cond = encode(ConditioningVariant::kEgoAllo, traj);
    CHECK(cond[1].allFinite());

    // Standalone call on a degenerate pose uses the local +y projection.
    const PoseSE3 down(cpf_orientation(0.4, -M_PI_2), Vec3(0, 0, 1.6));
    CHECK_NOTHROW(canonical_frame(down));
    CHECK(canonical_frame(down).rotation.matrix().allFinite());
}

TEST_CASE("encode rejects an empty trajectory") {
    CHECK_THROWS_AS(encode(ConditioningVariant::kEgoAllo, {}), std::invalid_argument);
}

TEST_CASE("variant names round trip") {
    for (auto v : {ConditioningVariant::kEgoAllo, ConditioningVariant::kAbsoluteLocalRelative,
                   ConditioningVariant::kAbsoluteGlobalDeltas,
                   ConditioningVariant::kSequenceCanonicalization,
                   ConditioningVariant::kAbsolute}) {
        CHECK(parse_conditioning_variant(to_string(v)) == v);
    }
    CHECK(!parse_conditioning_variant("bogus").has_value());
}
