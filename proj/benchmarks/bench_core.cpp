#include <benchmark/benchmark.h>

#include <random>

#include "egokit/body.hpp"
#include "egokit/denoiser.hpp"
#include "egokit/diffusion.hpp"
#include "egokit/floor.hpp"
#include "egokit/guide.hpp"
#include "egokit/random.hpp"

using namespace egokit;

namespace {

LocalPose random_pose_for_bench(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 0.2);
    LocalPose pose;
    for (auto& r : pose.joint_rotations) {
        r = so3_exp(Vec3(n(rng), n(rng), n(rng)));
    }
    return pose;
}

PoseSE3 standing_cpf_bench(double x) {
    Mat3 base;
    base << 1, 0, 0,
            0, 0, 1,
            0, -1, 0;
    return PoseSE3(Rotation3(base, Rotation3::Unchecked{}), Vec3(x, 0.0, 1.62));
}

}  // namespace

static void BM_ForwardKinematics(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const LocalPose pose = random_pose_for_bench(rng);
    const ShapeParams shape(1.05, 0.98);
    const PoseSE3 root(rz(0.3), Vec3(1, 2, 0.96));
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward_kinematics(root, pose, shape));
    }
}
BENCHMARK(BM_ForwardKinematics);

static void BM_RootFromCpf(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const LocalPose pose = random_pose_for_bench(rng);
    const ShapeParams shape;
    const PoseSE3 cpf = standing_cpf_bench(0.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(root_from_cpf(pose, shape, cpf));
    }
}
BENCHMARK(BM_RootFromCpf);

static void BM_ConditioningEncode(benchmark::State& state) {
    std::vector<PoseSE3> traj;
    for (int t = 0; t < 128; ++t) traj.push_back(standing_cpf_bench(0.02 * t));
    for (auto _ : state) {
        benchmark::DoNotOptimize(encode(ConditioningVariant::kEgoAllo, traj));
    }
}
BENCHMARK(BM_ConditioningEncode);

static void BM_DenoiserForward(benchmark::State& state) {
    const int window = static_cast<int>(state.range(0));
    DenoiserArch arch;
    arch.cond_dim = 18;
    const auto params =
        init_denoiser(arch, ConditioningVariant::kEgoAllo, NoiseSchedule::cosine(1000), 3);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    Mat xn(window, arch.state_dim), cond(window, arch.cond_dim);
    for (int i = 0; i < xn.size(); ++i) xn(i / arch.state_dim, i % arch.state_dim) = n(rng);
    for (int i = 0; i < cond.size(); ++i) cond(i / arch.cond_dim, i % arch.cond_dim) = n(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(denoise(params, xn, 500, cond));
    }
}
BENCHMARK(BM_DenoiserForward)->Arg(32)->Arg(128);

static void BM_GuidanceSolve(benchmark::State& state) {
    const int window = static_cast<int>(state.range(0));
    std::mt19937_64 rng(5);
    std::vector<LocalPose> theta_hat;
    std::vector<PoseSE3> cpf;
    for (int t = 0; t < window; ++t) {
        theta_hat.push_back(random_pose_for_bench(rng));
        cpf.push_back(standing_cpf_bench(0.01 * t));
    }
    Eigen::MatrixXd contacts = Eigen::MatrixXd::Zero(window, kBodyJointCount);
    for (int t = 0; t < window; ++t) contacts(t, 9) = 1.0;
    const ShapeParams shape;
    GuideConfig config;
    for (auto _ : state) {
        benchmark::DoNotOptimize(guide(theta_hat, shape, contacts, cpf, {}, config));
    }
}
BENCHMARK(BM_GuidanceSolve)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_FloorRansac(benchmark::State& state) {
    Rng rng(6);
    SparsePointCloud cloud;
    for (int i = 0; i < 700; ++i) {
        cloud.points.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5),
                                  0.5 + rng.uniform(-0.005, 0.005));
        cloud.confidence.push_back(1.0);
    }
    for (int i = 0; i < 300; ++i) {
        cloud.points.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5),
                                  rng.uniform(0.0, 3.0));
        cloud.confidence.push_back(1.0);
    }
    FloorConfig config;
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_floor(cloud, config));
    }
}
BENCHMARK(BM_FloorRansac);

BENCHMARK_MAIN();
