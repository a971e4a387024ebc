#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace egokit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rotation matrix in SO(3). Constructors validate orthonormality and
/// det = +1 to 1e-9 unless the unchecked tag is used.
class Rotation3 {
public:
    struct Unchecked {};

    Rotation3() : m_(Mat3::Identity()) {}
    explicit Rotation3(const Mat3& m);
    Rotation3(const Mat3& m, Unchecked) : m_(m) {}

    static Rotation3 identity() { return Rotation3(); }

    const Mat3& matrix() const { return m_; }
    Rotation3 transpose() const { return Rotation3(m_.transpose(), Unchecked{}); }
    Vec3 operator*(const Vec3& v) const { return m_ * v; }
    Rotation3 operator*(const Rotation3& o) const { return Rotation3(m_ * o.m_, Unchecked{}); }

    static bool is_valid(const Mat3& m, double tol = 1e-9);

private:
    Mat3 m_;
};

/// Rigid transform: x_world = rotation * x_local + position.
struct PoseSE3 {
    Rotation3 rotation;
    Vec3 position{Vec3::Zero()};

    PoseSE3() = default;
    PoseSE3(const Rotation3& r, const Vec3& p) : rotation(r), position(p) {}

    static PoseSE3 identity() { return PoseSE3(); }
    Vec3 operator*(const Vec3& v) const { return rotation * v + position; }
};

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);
PoseSE3 inverse(const PoseSE3& a);

/// Rotation about +z by `angle` radians, right-hand rule.
Rotation3 rz(double angle);

/// First two columns of the rotation matrix, column-major (6 reals).
using Rot6D = Eigen::Matrix<double, 6, 1>;

Rot6D to_rot6d(const Rotation3& r);

/// Gram-Schmidt recovery; third column by cross product. Throws
/// std::invalid_argument when the two columns are degenerate.
Rotation3 from_rot6d(const Rot6D& v);

// SO(3) exp/log and the inverse right Jacobian, as needed by the
// canonicalization math and the LM retraction / rotation residuals.
Rotation3 so3_exp(const Vec3& w);
Vec3 so3_log(const Rotation3& r);
Mat3 so3_right_jacobian_inverse(const Vec3& w);

inline Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0, -v.z(), v.y(),
         v.z(), 0, -v.x(),
         -v.y(), v.x(), 0;
    return m;
}

/// Angle of the geodesic between two rotations, radians in [0, pi].
double geodesic_angle(const Rotation3& a, const Rotation3& b);

}  // namespace egokit
