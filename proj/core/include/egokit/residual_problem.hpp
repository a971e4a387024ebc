#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "egokit/geometry.hpp"

namespace egokit {

/// Variable blocks are either plain vectors or bundles of rotation
/// matrices optimized on the manifold (3-dim tangent per rotation, right
/// retraction).
enum class Manifold { kEuclidean, kRotationBundle };

struct VariableBlock {
    Manifold manifold = Manifold::kEuclidean;
    Eigen::VectorXd value;  // euclidean: the parameters; rotations: 9 per matrix, row-major
    int tangent_dim = 0;

    std::vector<Rotation3> rotations() const;
    void retract(const Eigen::VectorXd& delta);
};

/// One residual term referencing a sparse set of variable blocks. eval fills
/// the residual and, when `jacobians` is non-null, one dense block per
/// referenced variable. A residual touching only a column slice of a block
/// may declare it in col_ranges (offset, width) and return dim x width
/// Jacobians; an empty list means full-width blocks.
struct ResidualBlock {
    std::string name;
    std::vector<int> blocks;
    std::vector<std::pair<int, int>> col_ranges;
    int dim = 0;
    std::function<void(const std::vector<const VariableBlock*>&, Eigen::VectorXd&,
                       std::vector<Eigen::MatrixXd>*)>
        eval;
};

/// Nonlinear least-squares problem with block-sparse structure: the Jacobian
/// sparsity pattern is exactly the union of residual-to-block references.
class ResidualProblem {
public:
    int add_euclidean_block(Eigen::VectorXd initial);
    int add_rotation_block(const std::vector<Rotation3>& rotations);
    void add_residual(ResidualBlock block);

    int block_count() const { return static_cast<int>(blocks_.size()); }
    int residual_count() const { return static_cast<int>(residuals_.size()); }
    const VariableBlock& block(int i) const { return blocks_[i]; }
    VariableBlock& block(int i) { return blocks_[i]; }
    const std::vector<ResidualBlock>& residuals() const { return residuals_; }

    int total_tangent_dim() const;
    int tangent_offset(int block) const { return tangent_offsets_[block]; }

    /// Applies a full tangent step to every block in place.
    void retract_all(const Eigen::VectorXd& delta);

    /// Total cost (sum of squared residuals) at the current values.
    double cost() const;

private:
    std::vector<VariableBlock> blocks_;
    std::vector<ResidualBlock> residuals_;
    std::vector<int> tangent_offsets_;
};

}  // namespace egokit
