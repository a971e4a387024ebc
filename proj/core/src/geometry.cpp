#include "egokit/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace egokit {

bool Rotation3::is_valid(const Mat3& m, double tol) {
    const Mat3 gram = m.transpose() * m;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(m.determinant() - 1.0) <= tol;
}

Rotation3::Rotation3(const Mat3& m) : m_(m) {
    if (!is_valid(m)) {
        throw std::invalid_argument("Rotation3: matrix is not a proper rotation");
    }
}

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
    return PoseSE3(a.rotation * b.rotation, a.rotation * b.position + a.position);
}

PoseSE3 inverse(const PoseSE3& a) {
    const Rotation3 rt = a.rotation.transpose();
    return PoseSE3(rt, -(rt * a.position));
}

Rotation3 rz(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat3 m;
    m << c, -s, 0,
         s, c, 0,
         0, 0, 1;
    return Rotation3(m, Rotation3::Unchecked{});
}

Rot6D to_rot6d(const Rotation3& r) {
    Rot6D v;
    v.head<3>() = r.matrix().col(0);
    v.tail<3>() = r.matrix().col(1);
    return v;
}

Rotation3 from_rot6d(const Rot6D& v) {
    const Vec3 a = v.head<3>();
    const Vec3 b = v.tail<3>();
    const double na = a.norm();
    if (na < 1e-12) throw std::invalid_argument("from_rot6d: first column is zero");
    const Vec3 c0 = a / na;
    const Vec3 b_perp = b - c0.dot(b) * c0;
    const double nb = b_perp.norm();
    if (nb < 1e-12) throw std::invalid_argument("from_rot6d: columns are parallel");
    const Vec3 c1 = b_perp / nb;
    Mat3 m;
    m.col(0) = c0;
    m.col(1) = c1;
    m.col(2) = c0.cross(c1);
    return Rotation3(m, Rotation3::Unchecked{});
}

Rotation3 so3_exp(const Vec3& w) {
    const double theta2 = w.squaredNorm();
    const double theta = std::sqrt(theta2);
    const Mat3 k = skew(w);
    double a, b;
    if (theta < 1e-8) {
        // Taylor around 0: sin(t)/t and (1-cos t)/t^2
        a = 1.0 - theta2 / 6.0;
        b = 0.5 - theta2 / 24.0;
    } else {
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / theta2;
    }
    return Rotation3(Mat3::Identity() + a * k + b * (k * k), Rotation3::Unchecked{});
}

Vec3 so3_log(const Rotation3& r) {
    const Mat3& m = r.matrix();
    const Vec3 axis_unnorm(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
    const double sin_theta = 0.5 * axis_unnorm.norm();
    const double cos_theta = (m.trace() - 1.0) * 0.5;
    const double theta = std::atan2(sin_theta, cos_theta);
    if (theta < 1e-8) {
        return 0.5 * axis_unnorm;  // first-order
    }
    if (theta > 3.0) {
        // The off-diagonal route amplifies rounding by 1/sin(theta); recover
        // the axis from the well-conditioned symmetric part instead:
        // (m + m^T)/2 = cos I + (1 - cos) a a^T.
        const Mat3 s = 0.5 * (m + m.transpose()) - cos_theta * Mat3::Identity();
        const double scale = 1.0 - cos_theta;
        int k;
        s.diagonal().maxCoeff(&k);
        Vec3 axis = s.col(k) / std::sqrt(std::max(s(k, k) * scale, 1e-300));
        axis.normalize();
        if (axis.dot(axis_unnorm) < 0) axis = -axis;  // sign arbitrary at exactly pi
        return theta * axis;
    }
    return (theta / (2.0 * std::sin(theta))) * axis_unnorm;
}

Mat3 so3_right_jacobian_inverse(const Vec3& w) {
    const double theta2 = w.squaredNorm();
    const double theta = std::sqrt(theta2);
    const Mat3 k = skew(w);
    double c;
    if (theta < 1e-6) {
        c = 1.0 / 12.0 + theta2 / 720.0;
    } else {
        c = (1.0 / theta2) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
    }
    return Mat3::Identity() + 0.5 * k + c * (k * k);
}

double geodesic_angle(const Rotation3& a, const Rotation3& b) {
    const Mat3 m = a.matrix().transpose() * b.matrix();
    const Vec3 axis_unnorm(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
    // atan2 keeps full precision near 0 where acos of the trace does not.
    return std::atan2(0.5 * axis_unnorm.norm(), (m.trace() - 1.0) * 0.5);
}

}  // namespace egokit
