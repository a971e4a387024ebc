#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "egokit/body.hpp"

namespace egokit {

/// World-frame joint positions over time with role labels. Metrics run on
/// the 22-joint body set (root + 21); hand joints are reported separately
/// when needed.
struct JointTrajectory {
    std::vector<Eigen::Matrix3Xd> frames;  // 3 x J per timestep, constant J
    int head_joint = -1;
    std::vector<int> foot_joints;

    int joint_count() const { return frames.empty() ? 0 : static_cast<int>(frames[0].cols()); }
};

/// The 22 body joints of a FK result, with head/foot labels attached.
JointTrajectory body_joint_trajectory(const std::vector<BodyFrame>& frames);

/// World-frame mean per-joint position error, millimeters.
double mpjpe(const JointTrajectory& pred, const JointTrajectory& gt);

struct ProcrustesResult {
    double value_mm = 0.0;
    int excluded_frames = 0;  // degenerate (collinear) frames skipped
};

/// Per-timestep similarity alignment (rotation, translation, uniform scale)
/// of pred onto gt before the position error is computed.
ProcrustesResult pa_mpjpe(const JointTrajectory& pred, const JointTrajectory& gt);

inline constexpr double kGroundContactTolerance = 0.05;  // meters

/// 1 iff any foot joint ever comes within the tolerance of the floor.
int gnd(const JointTrajectory& pred, double floor_z,
        double tolerance = kGroundContactTolerance);

/// Mean head-joint position error over time, millimeters.
double t_head(const JointTrajectory& pred, const JointTrajectory& gt);

struct MetricRow {
    std::string metric;
    double value = 0.0;
    double stderr_value = 0.0;
    int n = 0;
};

/// CSV with header "metric,value,stderr,n".
void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows);

/// Mean and standard error of a sample.
MetricRow summarize(const std::string& metric, const std::vector<double>& samples);

}  // namespace egokit
