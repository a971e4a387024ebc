#pragma once

#include <functional>
#include <string>
#include <vector>

#include "egokit/residual_problem.hpp"

namespace egokit {

/// Conjugate gradients for a symmetric positive-definite operator given as
/// a matvec. Stops at relative residual `tolerance` or `max_iterations`.
/// An optional Jacobi preconditioner is given as the inverse diagonal.
Eigen::VectorXd conjugate_gradient(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& matvec,
    const Eigen::VectorXd& rhs, int max_iterations, double tolerance,
    const Eigen::VectorXd* jacobi_inverse_diag = nullptr);

struct LmConfig {
    int max_iterations = 50;
    double initial_damping = 1e-4;
    double damping_decrease = 1.0 / 3.0;  // on accepted steps
    double damping_increase = 3.0;        // on rejected steps
    double relative_decrease_tol = 1e-8;
    double gradient_tol = 1e-10;
    int cg_max_iterations = 0;   // 0: the tangent dimension
    double cg_tolerance = 1e-10;
};

enum class LmStop {
    kGradientTolerance,
    kRelativeDecrease,
    kMaxIterations,
    kDampingOverflow,
};

struct LmResult {
    std::vector<double> cost_trace;  // initial cost, then one entry per accepted step
    double final_cost = 0.0;
    int iterations = 0;       // total (accepted + rejected)
    int accepted_steps = 0;
    LmStop stop = LmStop::kMaxIterations;
};

/// Damped Gauss-Newton over the block-sparse problem:
/// (J^T J + damping * diag(J^T J)) delta = -J^T r, solved by CG, with the
/// step accepted iff the cost decreases. Rotation blocks update by right
/// retraction. Throws on non-finite residuals or Jacobians, naming the
/// offending block.
LmResult lm_solve(ResidualProblem& problem, const LmConfig& config = {});

}  // namespace egokit
