#include "egokit/camera.hpp"

#include <stdexcept>

namespace egokit {

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw std::invalid_argument("CameraIntrinsics: focal lengths must be positive");
    }
}

Vec2 project(const CameraIntrinsics& k, const Vec3& p_camera) {
    if (p_camera.z() <= kMinCameraDepth) {
        throw std::invalid_argument("project: point is behind the camera");
    }
    return Vec2(k.fx * p_camera.x() / p_camera.z() + k.cx,
                k.fy * p_camera.y() / p_camera.z() + k.cy);
}

}  // namespace egokit
