#include "egokit/floor.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "egokit/random.hpp"

namespace egokit {

FloorEstimate estimate_floor(const SparsePointCloud& cloud, const FloorConfig& config) {
    if (cloud.points.size() != cloud.confidence.size()) {
        throw std::invalid_argument("estimate_floor: points/confidence size mismatch");
    }
    std::vector<double> zs;
    zs.reserve(cloud.points.size());
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        if (cloud.confidence[i] >= config.confidence_threshold) {
            zs.push_back(cloud.points[i].z());
        }
    }
    if (static_cast<int>(zs.size()) < config.min_points) {
        throw std::runtime_error("estimate_floor: insufficient points above the confidence "
                                 "threshold (" + std::to_string(zs.size()) + " < " +
                                 std::to_string(config.min_points) + ")");
    }

    // Hypothesis order must match the unsorted cloud so results are
    // reproducible; counting runs on a sorted copy with prefix sums.
    std::vector<double> sorted = zs;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> prefix(sorted.size() + 1, 0.0);
    for (std::size_t i = 0; i < sorted.size(); ++i) prefix[i + 1] = prefix[i] + sorted[i];

    int best_count = -1;
    double best_mean = 0.0;
    for (int it = 0; it < config.iterations; ++it) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(it)));
        const double z = zs[rng.uniform_index(zs.size())];
        // Inliers satisfy |z_i - z| < tol, a contiguous run in sorted order.
        const auto lo = std::upper_bound(sorted.begin(), sorted.end(), z - config.inlier_tolerance);
        const auto hi = std::lower_bound(sorted.begin(), sorted.end(), z + config.inlier_tolerance);
        const int count = static_cast<int>(hi - lo);
        if (count > best_count) {
            best_count = count;
            const std::size_t a = static_cast<std::size_t>(lo - sorted.begin());
            const std::size_t b = static_cast<std::size_t>(hi - sorted.begin());
            best_mean = count > 0 ? (prefix[b] - prefix[a]) / count : z;
        }
    }
    return FloorEstimate{best_mean, best_count};
}

SparsePointCloud load_point_cloud(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open point cloud: " + path);
    SparsePointCloud cloud;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        double x, y, z, c;
        if (!(ss >> x >> y >> z >> c)) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 'x y z confidence'");
        }
        cloud.points.emplace_back(x, y, z);
        cloud.confidence.push_back(c);
    }
    return cloud;
}

void save_point_cloud(const std::string& path, const SparsePointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# x y z confidence\n";
    char buf[160];
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g\n", cloud.points[i].x(),
                      cloud.points[i].y(), cloud.points[i].z(), cloud.confidence[i]);
        out << buf;
    }
}

}  // namespace egokit
