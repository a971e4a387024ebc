#include "egokit/lm.hpp"

#include <cmath>
#include <stdexcept>

namespace egokit {

Eigen::VectorXd conjugate_gradient(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& matvec,
    const Eigen::VectorXd& rhs, int max_iterations, double tolerance,
    const Eigen::VectorXd* jacobi_inverse_diag) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(rhs.size());
    Eigen::VectorXd r = rhs;
    Eigen::VectorXd z =
        jacobi_inverse_diag ? jacobi_inverse_diag->cwiseProduct(r).eval() : r;
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    const double stop = tolerance * tolerance * rhs.squaredNorm();
    if (r.squaredNorm() <= stop) return x;
    for (int it = 0; it < max_iterations; ++it) {
        const Eigen::VectorXd ap = matvec(p);
        const double pap = p.dot(ap);
        if (pap <= 0.0) break;  // lost positive definiteness numerically
        const double alpha = rz / pap;
        x += alpha * p;
        r -= alpha * ap;
        if (r.squaredNorm() <= stop) break;
        z = jacobi_inverse_diag ? jacobi_inverse_diag->cwiseProduct(r).eval() : r;
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    return x;
}

namespace {

struct Linearization {
    double cost = 0.0;
    std::vector<Eigen::VectorXd> residuals;             // per residual block
    std::vector<std::vector<Eigen::MatrixXd>> jacobians;  // per residual, per referenced block
};

Linearization linearize(const ResidualProblem& problem) {
    Linearization lin;
    const auto& residuals = problem.residuals();
    lin.residuals.resize(residuals.size());
    lin.jacobians.resize(residuals.size());
    std::vector<const VariableBlock*> refs;
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        const ResidualBlock& res = residuals[i];
        refs.clear();
        for (int b : res.blocks) refs.push_back(&problem.block(b));
        lin.residuals[i].resize(res.dim);
        lin.jacobians[i].clear();
        res.eval(refs, lin.residuals[i], &lin.jacobians[i]);
        if (!lin.residuals[i].allFinite()) {
            throw std::runtime_error("lm_solve: non-finite residual in block '" + res.name + "'");
        }
        if (lin.jacobians[i].size() != res.blocks.size()) {
            throw std::runtime_error("lm_solve: '" + res.name +
                                     "' did not return one Jacobian per referenced block");
        }
        for (std::size_t k = 0; k < lin.jacobians[i].size(); ++k) {
            const auto& jac = lin.jacobians[i][k];
            if (jac.rows() != res.dim || jac.cols() != res.col_ranges[k].second) {
                throw std::runtime_error("lm_solve: Jacobian shape mismatch in '" + res.name +
                                         "'");
            }
            if (!jac.allFinite()) {
                throw std::runtime_error("lm_solve: non-finite Jacobian in block '" + res.name +
                                         "'");
            }
        }
        lin.cost += lin.residuals[i].squaredNorm();
    }
    return lin;
}

}  // namespace

LmResult lm_solve(ResidualProblem& problem, const LmConfig& config) {
    const int dim = problem.total_tangent_dim();
    const auto& residuals = problem.residuals();

    LmResult result;
    double damping = config.initial_damping;

    Linearization lin = linearize(problem);
    result.cost_trace.push_back(lin.cost);
    result.final_cost = lin.cost;

    for (int it = 0; it < config.max_iterations; ++it) {
        ++result.iterations;

        // Gradient and the diagonal of J^T J.
        Eigen::VectorXd gradient = Eigen::VectorXd::Zero(dim);
        Eigen::VectorXd jtj_diag = Eigen::VectorXd::Zero(dim);
        for (std::size_t i = 0; i < residuals.size(); ++i) {
            for (std::size_t k = 0; k < residuals[i].blocks.size(); ++k) {
                const int b = residuals[i].blocks[k];
                const auto [off, width] = residuals[i].col_ranges[k];
                const int at = problem.tangent_offset(b) + off;
                const auto& jac = lin.jacobians[i][k];
                gradient.segment(at, width).noalias() += jac.transpose() * lin.residuals[i];
                jtj_diag.segment(at, width) += jac.colwise().squaredNorm().transpose();
            }
        }
        if (gradient.norm() < config.gradient_tol) {
            result.stop = LmStop::kGradientTolerance;
            break;
        }

        const Eigen::VectorXd damping_diag = damping * jtj_diag.cwiseMax(1e-12);
        const Eigen::VectorXd inverse_diag =
            (jtj_diag + damping_diag).cwiseMax(1e-12).cwiseInverse();
        int max_dim = 0;
        for (const auto& res : residuals) max_dim = std::max(max_dim, res.dim);
        Eigen::VectorXd scratch(max_dim);
        const auto matvec = [&](const Eigen::VectorXd& x) {
            Eigen::VectorXd y = damping_diag.cwiseProduct(x);
            for (std::size_t i = 0; i < residuals.size(); ++i) {
                const ResidualBlock& res = residuals[i];
                auto u = scratch.head(res.dim);
                u.setZero();
                for (std::size_t k = 0; k < res.blocks.size(); ++k) {
                    const auto [off, width] = res.col_ranges[k];
                    const int at = problem.tangent_offset(res.blocks[k]) + off;
                    u.noalias() += lin.jacobians[i][k] * x.segment(at, width);
                }
                for (std::size_t k = 0; k < res.blocks.size(); ++k) {
                    const auto [off, width] = res.col_ranges[k];
                    const int at = problem.tangent_offset(res.blocks[k]) + off;
                    y.segment(at, width).noalias() += lin.jacobians[i][k].transpose() * u;
                }
            }
            return y;
        };

        const int cg_iters = config.cg_max_iterations > 0 ? config.cg_max_iterations : dim;
        const Eigen::VectorXd step = conjugate_gradient(matvec, -gradient, cg_iters,
                                                        config.cg_tolerance, &inverse_diag);

        // Trial point.
        ResidualProblem trial = problem;
        trial.retract_all(step);
        double trial_cost;
        try {
            trial_cost = trial.cost();
        } catch (...) {
            trial_cost = std::numeric_limits<double>::infinity();
        }

        if (std::isfinite(trial_cost) && trial_cost < result.final_cost) {
            const double previous = result.final_cost;
            problem = std::move(trial);
            lin = linearize(problem);
            result.final_cost = lin.cost;
            result.cost_trace.push_back(lin.cost);
            ++result.accepted_steps;
            damping *= config.damping_decrease;
            if ((previous - result.final_cost) <=
                config.relative_decrease_tol * std::max(previous, 1e-300)) {
                result.stop = LmStop::kRelativeDecrease;
                break;
            }
        } else {
            damping *= config.damping_increase;
            if (damping > 1e32) {
                result.stop = LmStop::kDampingOverflow;
                break;
            }
        }
    }
    return result;
}

}  // namespace egokit
