#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "egokit/geometry.hpp"

namespace egokit {

struct SparsePointCloud {
    std::vector<Vec3> points;
    std::vector<double> confidence;
};

struct FloorConfig {
    double inlier_tolerance = 0.01;      // meters
    int iterations = 1000;
    double confidence_threshold = 0.5;
    int min_points = 50;
    std::uint64_t seed = 0;
};

struct FloorEstimate {
    double z = 0.0;
    int inlier_count = 0;
};

/// RANSAC over z only (flat-floor assumption): each round hypothesizes the
/// z of one random confidence-filtered point, counts points within the
/// tolerance, and the mean z of the largest inlier set wins. Throws when
/// fewer than min_points survive the confidence filter.
FloorEstimate estimate_floor(const SparsePointCloud& cloud, const FloorConfig& config);

/// Text format: one point per line as "x y z confidence", '#' comments.
SparsePointCloud load_point_cloud(const std::string& path);
void save_point_cloud(const std::string& path, const SparsePointCloud& cloud);

}  // namespace egokit
