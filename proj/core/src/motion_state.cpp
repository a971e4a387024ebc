#include "egokit/motion_state.hpp"

#include <stdexcept>

namespace egokit {

Eigen::VectorXd MotionState::flatten() const {
    Eigen::VectorXd v(kStateDim);
    for (int i = 0; i < kLocalRotationCount; ++i) {
        v.segment<6>(i * 6) = rotations6d[i];
    }
    v.segment<kShapeDim>(kLocalRotationCount * 6) = shape;
    v.tail<kBodyJointCount>() = contacts;
    return v;
}

MotionState MotionState::unflatten(const Eigen::VectorXd& v) {
    if (v.size() != kStateDim) {
        throw std::invalid_argument("MotionState::unflatten: wrong dimension");
    }
    MotionState s;
    for (int i = 0; i < kLocalRotationCount; ++i) {
        s.rotations6d[i] = v.segment<6>(i * 6);
    }
    s.shape = v.segment<kShapeDim>(kLocalRotationCount * 6);
    s.contacts = v.tail<kBodyJointCount>();
    return s;
}

}  // namespace egokit
