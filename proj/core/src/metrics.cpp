#include "egokit/metrics.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace egokit {

namespace {

void check_shapes(const JointTrajectory& pred, const JointTrajectory& gt) {
    if (pred.frames.size() != gt.frames.size()) {
        throw std::invalid_argument("metrics: trajectory lengths differ");
    }
    if (pred.joint_count() != gt.joint_count()) {
        throw std::invalid_argument("metrics: joint counts differ");
    }
}

}  // namespace

JointTrajectory body_joint_trajectory(const std::vector<BodyFrame>& frames) {
    JointTrajectory traj;
    traj.head_joint = skeleton().head_joint;
    traj.foot_joints = {skeleton().left_foot_joint, skeleton().right_foot_joint};
    traj.frames.reserve(frames.size());
    for (const BodyFrame& f : frames) {
        Eigen::Matrix3Xd m(3, kBodyJointCount + 1);
        for (int j = 0; j <= kBodyJointCount; ++j) m.col(j) = f.joints_world[j].position;
        traj.frames.push_back(std::move(m));
    }
    return traj;
}

double mpjpe(const JointTrajectory& pred, const JointTrajectory& gt) {
    check_shapes(pred, gt);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < pred.frames.size(); ++t) {
        sum += (pred.frames[t] - gt.frames[t]).colwise().norm().sum();
        count += pred.frames[t].cols();
    }
    if (count == 0) return 0.0;
    return 1000.0 * sum / static_cast<double>(count);
}

ProcrustesResult pa_mpjpe(const JointTrajectory& pred, const JointTrajectory& gt) {
    check_shapes(pred, gt);
    const int joints = pred.joint_count();
    if (joints < 3) throw std::invalid_argument("pa_mpjpe: needs at least 3 joints");

    ProcrustesResult result;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < pred.frames.size(); ++t) {
        const Eigen::Matrix3Xd& x = pred.frames[t];
        const Eigen::Matrix3Xd& y = gt.frames[t];
        const Vec3 mx = x.rowwise().mean();
        const Vec3 my = y.rowwise().mean();
        const Eigen::Matrix3Xd xc = x.colwise() - mx;
        const Eigen::Matrix3Xd yc = y.colwise() - my;

        // Collinear point sets have no unique similarity alignment.
        Eigen::JacobiSVD<Mat3> spread(xc * xc.transpose());
        const double s0 = spread.singularValues()(0);
        if (s0 <= 0.0 || spread.singularValues()(1) < 1e-12 * s0) {
            ++result.excluded_frames;
            continue;
        }

        const Mat3 cov = yc * xc.transpose();
        Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Vec3 d = Vec3::Ones();
        if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2) = -1.0;
        const Mat3 rot = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
        const double var_x = xc.squaredNorm();
        const double scale = svd.singularValues().dot(d) / var_x;

        const Eigen::Matrix3Xd aligned = (scale * (rot * xc)).colwise() + my;
        sum += (aligned - y).colwise().norm().sum();
        count += static_cast<std::size_t>(joints);
    }
    result.value_mm = count == 0 ? 0.0 : 1000.0 * sum / static_cast<double>(count);
    return result;
}

int gnd(const JointTrajectory& pred, double floor_z, double tolerance) {
    if (pred.foot_joints.empty()) throw std::invalid_argument("gnd: no foot joints labeled");
    for (const auto& frame : pred.frames) {
        for (int j : pred.foot_joints) {
            if (frame(2, j) - floor_z <= tolerance) return 1;
        }
    }
    return 0;
}

double t_head(const JointTrajectory& pred, const JointTrajectory& gt) {
    check_shapes(pred, gt);
    if (pred.head_joint < 0 || gt.head_joint < 0) {
        throw std::invalid_argument("t_head: head joint not labeled");
    }
    if (pred.frames.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t t = 0; t < pred.frames.size(); ++t) {
        sum += (pred.frames[t].col(pred.head_joint) - gt.frames[t].col(gt.head_joint)).norm();
    }
    return 1000.0 * sum / static_cast<double>(pred.frames.size());
}

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "metric,value,stderr,n\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%d\n", r.metric.c_str(), r.value,
                      r.stderr_value, r.n);
        out << buf;
    }
}

MetricRow summarize(const std::string& metric, const std::vector<double>& samples) {
    MetricRow row;
    row.metric = metric;
    row.n = static_cast<int>(samples.size());
    if (samples.empty()) return row;
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(samples.size());
    row.value = mean;
    if (samples.size() > 1) {
        double var = 0.0;
        for (double v : samples) var += (v - mean) * (v - mean);
        var /= static_cast<double>(samples.size() - 1);
        row.stderr_value = std::sqrt(var / static_cast<double>(samples.size()));
    }
    return row;
}

}  // namespace egokit
