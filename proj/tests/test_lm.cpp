#include <doctest.h>

#include <random>

#include "egokit/lm.hpp"
#include "test_util.hpp"

using namespace egokit;

namespace {

// SPD with eigenvalues in [0.5, 5]; the k-step CG bound is exact-arithmetic,
// so the float check needs a moderately conditioned spectrum.
Eigen::MatrixXd random_spd(std::mt19937_64& rng, int k) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd a(k, k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) a(i, j) = n(rng);
    }
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
    Eigen::VectorXd eigenvalues(k);
    std::uniform_real_distribution<double> u(0.5, 5.0);
    for (int i = 0; i < k; ++i) eigenvalues[i] = u(rng);
    return q * eigenvalues.asDiagonal() * q.transpose();
}

void assert_monotone(const std::vector<double>& trace) {
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1]);
}

}  // namespace

TEST_CASE("CG solves SPD systems within k iterations") {
    std::mt19937_64 rng(101);
    for (int k : {3, 10, 25, 50}) {
        for (int trial = 0; trial < 5; ++trial) {
            const Eigen::MatrixXd a = random_spd(rng, k);
            Eigen::VectorXd b(k);
            std::normal_distribution<double> n(0.0, 1.0);
            for (int i = 0; i < k; ++i) b[i] = n(rng);

            const auto matvec = [&](const Eigen::VectorXd& x) { return (a * x).eval(); };
            const Eigen::VectorXd x = conjugate_gradient(matvec, b, k, 1e-12);
            CHECK((a * x - b).norm() < 1e-8 * std::max(1.0, b.norm()));
        }
    }
}

TEST_CASE("linear least squares solved in at most 3 accepted iterations") {
    std::mt19937_64 rng(102);
    std::normal_distribution<double> n(0.0, 1.0);
    const int rows = 12, cols = 5;
    Eigen::MatrixXd a(rows, cols);
    Eigen::VectorXd b(rows);
    for (int i = 0; i < rows; ++i) {
        b[i] = n(rng);
        for (int j = 0; j < cols; ++j) a(i, j) = n(rng);
    }
    const Eigen::VectorXd expected = a.colPivHouseholderQr().solve(b);

    ResidualProblem problem;
    const int block = problem.add_euclidean_block(Eigen::VectorXd::Zero(cols));
    ResidualBlock res;
    res.name = "linear";
    res.blocks = {block};
    res.dim = rows;
    res.eval = [a, b](const std::vector<const VariableBlock*>& refs, Eigen::VectorXd& r,
                      std::vector<Eigen::MatrixXd>* jac) {
        r = a * refs[0]->value - b;
        if (jac) jac->assign(1, a);
    };
    problem.add_residual(std::move(res));

    const LmResult result = lm_solve(problem);
    CHECK(result.accepted_steps <= 3);
    CHECK((problem.block(block).value - expected).norm() < 1e-8);
    assert_monotone(result.cost_trace);
}

TEST_CASE("zero residual at init converges immediately") {
    ResidualProblem problem;
    const int block = problem.add_euclidean_block(Eigen::VectorXd::Ones(3));
    ResidualBlock res;
    res.name = "zero";
    res.blocks = {block};
    res.dim = 3;
    res.eval = [](const std::vector<const VariableBlock*>& refs, Eigen::VectorXd& r,
                  std::vector<Eigen::MatrixXd>* jac) {
        r = refs[0]->value - Eigen::VectorXd::Ones(3);
        if (jac) jac->assign(1, Eigen::MatrixXd::Identity(3, 3));
    };
    problem.add_residual(std::move(res));

    const LmResult result = lm_solve(problem);
    CHECK(result.accepted_steps == 0);
    CHECK(result.stop == LmStop::kGradientTolerance);
    CHECK(result.final_cost == 0.0);
    CHECK((problem.block(block).value - Eigen::VectorXd::Ones(3)).norm() == 0.0);
}

TEST_CASE("beats a 10000-step gradient-descent oracle on the Rosenbrock residual") {
    // r(x, y) = (10 (y - x^2), 1 - x), cost = ||r||^2, start (-1.2, 1).
    const auto residual = [](double x, double y) {
        return Eigen::Vector2d(10.0 * (y - x * x), 1.0 - x);
    };

    // Fixed-rate gradient descent oracle.
    double gx = -1.2, gy = 1.0;
    const double lr = 1e-3;
    for (int i = 0; i < 10000; ++i) {
        const Eigen::Vector2d r = residual(gx, gy);
        // grad of ||r||^2: via the Jacobian [[-20x, 10], [-1, 0]]
        const double dx = 2.0 * (r[0] * (-20.0 * gx) + r[1] * (-1.0));
        const double dy = 2.0 * (r[0] * 10.0);
        gx -= lr * dx;
        gy -= lr * dy;
    }
    const double gd_cost = residual(gx, gy).squaredNorm();

    ResidualProblem problem;
    Eigen::VectorXd init(2);
    init << -1.2, 1.0;
    const int block = problem.add_euclidean_block(init);
    ResidualBlock res;
    res.name = "rosenbrock";
    res.blocks = {block};
    res.dim = 2;
    res.eval = [&](const std::vector<const VariableBlock*>& refs, Eigen::VectorXd& r,
                   std::vector<Eigen::MatrixXd>* jac) {
        const double x = refs[0]->value[0];
        const double y = refs[0]->value[1];
        r = residual(x, y);
        if (jac) {
            Eigen::MatrixXd j(2, 2);
            j << -20.0 * x, 10.0,
                 -1.0, 0.0;
            jac->assign(1, j);
        }
    };
    problem.add_residual(std::move(res));

    LmConfig config;
    config.max_iterations = 100;
    const LmResult result = lm_solve(problem, config);
    assert_monotone(result.cost_trace);
    CHECK(result.final_cost <= gd_cost);
    CHECK(result.final_cost < 1e-12);  // true optimum is (1, 1)
    CHECK(problem.block(block).value[0] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("block-sparse and densified problems take identical steps") {
    // Three variable blocks with chained residuals vs. the same system as a
    // single dense block.
    std::mt19937_64 rng(103);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd a01(3, 4), a12(2, 4), a2(2, 2);
    Eigen::VectorXd b01(3), b12(2), b2(2);
    for (int i = 0; i < a01.size(); ++i) a01(i / 4, i % 4) = n(rng);
    for (int i = 0; i < a12.size(); ++i) a12(i / 4, i % 4) = n(rng);
    for (int i = 0; i < a2.size(); ++i) a2(i / 2, i % 2) = n(rng);
    for (int i = 0; i < 3; ++i) b01[i] = n(rng);
    for (int i = 0; i < 2; ++i) b12[i] = n(rng);
    for (int i = 0; i < 2; ++i) b2[i] = n(rng);

    // Nonlinear twist so several iterations happen: residuals use tanh.
    const auto make_sparse = [&]() {
        ResidualProblem p;
        const int v0 = p.add_euclidean_block(Eigen::VectorXd::Zero(2));
        const int v1 = p.add_euclidean_block(Eigen::VectorXd::Zero(2));
        const int v2 = p.add_euclidean_block(Eigen::VectorXd::Zero(2));
        ResidualBlock r01;
        r01.name = "r01";
        r01.blocks = {v0, v1};
        r01.dim = 3;
        r01.eval = [&](const std::vector<const VariableBlock*>& refs, Eigen::VectorXd& r,
                       std::vector<Eigen::MatrixXd>* jac) {
            Eigen::VectorXd x(4);
            x << refs[0]->value, refs[1]->value;
            r = a01 * x.array().tanh().matrix() - b01;
            if (jac) {
                const Eigen::VectorXd d = 1.0 - x.array().tanh().square();
                const Eigen::MatrixXd full = a01 * d.asDiagonal();
                jac->assign(2, Eigen::MatrixXd());
                (*jac)[0] = full.leftCols(2);
                (*jac)[1] = full.rightCols(2);
            }
        };
        p.add_residual(std::move(r01));
        ResidualBlock r12;
        r12.name = "r12";
        r12.blocks = {v1, v2};
        r12.dim = 2;
        r12.eval = [&](const std::vector<const VariableBlock*>& refs, Eigen::VectorXd& r,
                       std::vector<Eigen::MatrixXd>* jac) {
            Eigen::VectorXd x(4);
            x << refs[0]->value, refs[1]->value;
            r = a12 * x.array().tanh().matrix() - b12;
            if (jac) {
                const Eigen::VectorXd d = 1.0 - x.array().tanh().square();
                const Eigen::MatrixXd full = a12 * d.asDiagonal();
                jac->assign(2, Eigen::MatrixXd());
                (*jac)[0] = full.leftCols(2);
                (*jac)[1] = full.rightCols(2);
            }
        };
        p.add_residual(std::move(r12));
        ResidualBlock r2;
        r2.name = "r2";
        r2.blocks = {v2};
        r2.dim = 2;
        r2.eval = [&](const std::vector<const VariableBlock*>& refs, Eigen::VectorXd& r,
                      std::vector<Eigen::MatrixXd>* jac) {
            r = a2 * refs[0]->value.array().tanh().matrix() - b2;
            if (jac) {
                const Eigen::VectorXd d = 1.0 - refs[0]->value.array().tanh().square();
                jac->assign(1, (a2 * d.asDiagonal()).eval());
            }
        };
        p.add_residual(std::move(r2));
        return p;
    };

    const auto make_dense = [&]() {
        ResidualProblem p;
        const int v = p.add_euclidean_block(Eigen::VectorXd::Zero(6));
        ResidualBlock r;
        r.name = "dense";
        r.blocks = {v};
        r.dim = 7;
        r.eval = [&](const std::vector<const VariableBlock*>& refs, Eigen::VectorXd& out,
                     std::vector<Eigen::MatrixXd>* jac) {
            const Eigen::VectorXd& x = refs[0]->value;
            const Eigen::VectorXd tx = x.array().tanh().matrix();
            out.resize(7);
            out.head(3) = a01 * tx.head(4) - b01;
            out.segment(3, 2) = a12 * tx.segment(2, 4) - b12;
            out.tail(2) = a2 * tx.tail(2) - b2;
            if (jac) {
                const Eigen::VectorXd d = 1.0 - x.array().tanh().square();
                Eigen::MatrixXd full = Eigen::MatrixXd::Zero(7, 6);
                full.block(0, 0, 3, 4) = a01 * d.head(4).asDiagonal();
                full.block(3, 2, 2, 4) = a12 * d.segment(2, 4).asDiagonal();
                full.block(5, 4, 2, 2) = a2 * d.tail(2).asDiagonal();
                jac->assign(1, full);
            }
        };
        p.add_residual(std::move(r));
        return p;
    };

    ResidualProblem sparse = make_sparse();
    ResidualProblem dense = make_dense();
    LmConfig config;
    config.max_iterations = 30;
    config.cg_tolerance = 1e-14;
    const LmResult rs = lm_solve(sparse, config);
    const LmResult rd = lm_solve(dense, config);

    REQUIRE(rs.cost_trace.size() == rd.cost_trace.size());
    for (std::size_t i = 0; i < rs.cost_trace.size(); ++i) {
        CHECK(rs.cost_trace[i] == doctest::Approx(rd.cost_trace[i]).epsilon(1e-8));
    }
    Eigen::VectorXd sparse_values(6);
    sparse_values << sparse.block(0).value, sparse.block(1).value, sparse.block(2).value;
    CHECK((sparse_values - dense.block(0).value).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("rotation blocks optimize on the manifold") {
    std::mt19937_64 rng(104);
    const Rotation3 target = egotest::random_rotation(rng);

    ResidualProblem problem;
    const int block = problem.add_rotation_block({Rotation3::identity()});
    ResidualBlock res;
    res.name = "orientation";
    res.blocks = {block};
    res.dim = 3;
    res.eval = [&](const std::vector<const VariableBlock*>& refs, Eigen::VectorXd& r,
                   std::vector<Eigen::MatrixXd>* jac) {
        const Rotation3 current = refs[0]->rotations()[0];
        const Vec3 v = so3_log(Rotation3(target.matrix().transpose() * current.matrix(),
                                         Rotation3::Unchecked{}));
        r = v;
        if (jac) jac->assign(1, so3_right_jacobian_inverse(v));
    };
    problem.add_residual(std::move(res));

    LmConfig config;
    config.max_iterations = 40;
    const LmResult result = lm_solve(problem, config);
    assert_monotone(result.cost_trace);
    CHECK(result.final_cost < 1e-16);
    CHECK(geodesic_angle(problem.block(block).rotations()[0], target) < 1e-8);
    // Still a valid rotation after many retractions.
    const Mat3 m = problem.block(block).rotations()[0].matrix();
    CHECK((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("non-finite residuals raise an error naming the block") {
    ResidualProblem problem;
    const int block = problem.add_euclidean_block(Eigen::VectorXd::Ones(2));
    ResidualBlock res;
    res.name = "exploding";
    res.blocks = {block};
    res.dim = 1;
    res.eval = [](const std::vector<const VariableBlock*>&, Eigen::VectorXd& r,
                  std::vector<Eigen::MatrixXd>* jac) {
        r.setConstant(std::numeric_limits<double>::quiet_NaN());
        if (jac) jac->assign(1, Eigen::MatrixXd::Zero(1, 2));
    };
    problem.add_residual(std::move(res));
    CHECK_THROWS_WITH_AS(lm_solve(problem), doctest::Contains("exploding"),
                         std::runtime_error);
}
