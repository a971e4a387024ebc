#include "egokit/skeleton.hpp"

#include <cstdio>

namespace egokit {

namespace {

struct JointSpec {
    const char* name;
    int parent;
    double x, y, z;
    bool arm;
};

// clang-format off
constexpr JointSpec kJoints[kJointCount] = {
    {"pelvis",         -1,  0.0,    0.0,    0.0,   false},
    {"left_hip",        0,  0.09,   0.0,   -0.06,  false},
    {"right_hip",       0, -0.09,   0.0,   -0.06,  false},
    {"spine1",          0,  0.0,    0.0,    0.11,  false},
    {"left_knee",       1,  0.0,    0.0,   -0.42,  false},
    {"right_knee",      2,  0.0,    0.0,   -0.42,  false},
    {"spine2",          3,  0.0,    0.0,    0.13,  false},
    {"left_ankle",      4,  0.0,    0.0,   -0.40,  false},
    {"right_ankle",     5,  0.0,    0.0,   -0.40,  false},
    {"spine3",          6,  0.0,    0.0,    0.14,  false},
    {"left_foot",       7,  0.0,    0.13,  -0.05,  false},
    {"right_foot",      8,  0.0,    0.13,  -0.05,  false},
    {"neck",            9,  0.0,    0.0,    0.12,  false},
    {"left_collar",     9,  0.03,   0.0,    0.09,  false},
    {"right_collar",    9, -0.03,   0.0,    0.09,  false},
    {"head",           12,  0.0,    0.0,    0.06,  false},
    {"left_shoulder",  13,  0.11,   0.0,    0.02,  true},
    {"right_shoulder", 14, -0.11,   0.0,    0.02,  true},
    {"left_elbow",     16,  0.27,   0.0,    0.0,   true},
    {"right_elbow",    17, -0.27,   0.0,    0.0,   true},
    {"left_wrist",     18,  0.25,   0.0,    0.0,   true},
    {"right_wrist",    19, -0.25,   0.0,    0.0,   true},
    {"left_index1",    20,  0.09,   0.02,   0.0,   true},
    {"left_index2",    22,  0.03,   0.0,    0.0,   true},
    {"left_index3",    23,  0.02,   0.0,    0.0,   true},
    {"left_middle1",   20,  0.095,  0.0,    0.0,   true},
    {"left_middle2",   25,  0.033,  0.0,    0.0,   true},
    {"left_middle3",   26,  0.022,  0.0,    0.0,   true},
    {"left_pinky1",    20,  0.08,  -0.035,  0.0,   true},
    {"left_pinky2",    28,  0.025,  0.0,    0.0,   true},
    {"left_pinky3",    29,  0.018,  0.0,    0.0,   true},
    {"left_ring1",     20,  0.09,  -0.018,  0.0,   true},
    {"left_ring2",     31,  0.03,   0.0,    0.0,   true},
    {"left_ring3",     32,  0.02,   0.0,    0.0,   true},
    {"left_thumb1",    20,  0.025,  0.03,  -0.01,  true},
    {"left_thumb2",    34,  0.03,   0.02,   0.0,   true},
    {"left_thumb3",    35,  0.025,  0.015,  0.0,   true},
    {"right_index1",   21, -0.09,   0.02,   0.0,   true},
    {"right_index2",   37, -0.03,   0.0,    0.0,   true},
    {"right_index3",   38, -0.02,   0.0,    0.0,   true},
    {"right_middle1",  21, -0.095,  0.0,    0.0,   true},
    {"right_middle2",  40, -0.033,  0.0,    0.0,   true},
    {"right_middle3",  41, -0.022,  0.0,    0.0,   true},
    {"right_pinky1",   21, -0.08,  -0.035,  0.0,   true},
    {"right_pinky2",   43, -0.025,  0.0,    0.0,   true},
    {"right_pinky3",   44, -0.018,  0.0,    0.0,   true},
    {"right_ring1",    21, -0.09,  -0.018,  0.0,   true},
    {"right_ring2",    46, -0.03,   0.0,    0.0,   true},
    {"right_ring3",    47, -0.02,   0.0,    0.0,   true},
    {"right_thumb1",   21, -0.025,  0.03,  -0.01,  true},
    {"right_thumb2",   49, -0.03,   0.02,   0.0,   true},
    {"right_thumb3",   50, -0.025,  0.015,  0.0,   true},
};
// clang-format on

SkeletonTopology build_topology() {
    SkeletonTopology t;
    for (int j = 0; j < kJointCount; ++j) {
        t.parent_index[j] = kJoints[j].parent;
        t.rest_offset[j] = Vec3(kJoints[j].x, kJoints[j].y, kJoints[j].z);
        t.joint_name[j] = kJoints[j].name;
        t.arm_chain[j] = kJoints[j].arm;
    }
    // CPF axes in the head frame: x right, y down, z forward (+y of the body).
    Mat3 m;
    m << 1, 0, 0,
         0, 0, 1,
         0, -1, 0;
    t.head_to_cpf_rotation = Rotation3(m, Rotation3::Unchecked{});
    return t;
}

}  // namespace

const SkeletonTopology& skeleton() {
    static const SkeletonTopology topo = build_topology();
    return topo;
}

bool is_ancestor_or_self(int ancestor, int joint) {
    static const auto table = [] {
        std::array<std::array<bool, kJointCount>, kJointCount> t{};
        const SkeletonTopology& topo = skeleton();
        for (int k = 0; k < kJointCount; ++k) {
            for (int a = k; a >= 0; a = topo.parent_index[a]) t[a][k] = true;
        }
        return t;
    }();
    return table[ancestor][joint];
}

std::uint64_t skeleton_hash() {
    static const std::uint64_t h = [] {
        std::uint64_t acc = 0xcbf29ce484222325ULL;
        auto mix = [&acc](const char* s) {
            for (; *s; ++s) {
                acc ^= static_cast<unsigned char>(*s);
                acc *= 0x100000001b3ULL;
            }
        };
        const SkeletonTopology& t = skeleton();
        char buf[192];
        for (int j = 0; j < kJointCount; ++j) {
            std::snprintf(buf, sizeof(buf), "%s|%d|%.17g|%.17g|%.17g|%d;", t.joint_name[j],
                          t.parent_index[j], t.rest_offset[j].x(), t.rest_offset[j].y(),
                          t.rest_offset[j].z(), t.arm_chain[j] ? 1 : 0);
            mix(buf);
        }
        std::snprintf(buf, sizeof(buf), "cpf|%.17g|%.17g|%.17g", t.cpf_offset.x(),
                      t.cpf_offset.y(), t.cpf_offset.z());
        mix(buf);
        return acc;
    }();
    return h;
}

}  // namespace egokit
