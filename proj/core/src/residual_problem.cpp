#include "egokit/residual_problem.hpp"

#include <stdexcept>

namespace egokit {

std::vector<Rotation3> VariableBlock::rotations() const {
    if (manifold != Manifold::kRotationBundle) {
        throw std::logic_error("VariableBlock: not a rotation bundle");
    }
    const int count = tangent_dim / 3;
    std::vector<Rotation3> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        Mat3 m;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) m(r, c) = value[i * 9 + r * 3 + c];
        }
        out.emplace_back(m, Rotation3::Unchecked{});
    }
    return out;
}

void VariableBlock::retract(const Eigen::VectorXd& delta) {
    if (delta.size() != tangent_dim) {
        throw std::invalid_argument("VariableBlock::retract: wrong tangent size");
    }
    if (manifold == Manifold::kEuclidean) {
        value += delta;
        return;
    }
    const int count = tangent_dim / 3;
    for (int i = 0; i < count; ++i) {
        Mat3 m;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) m(r, c) = value[i * 9 + r * 3 + c];
        }
        const Mat3 updated = m * so3_exp(delta.segment<3>(3 * i)).matrix();
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) value[i * 9 + r * 3 + c] = updated(r, c);
        }
    }
}

int ResidualProblem::add_euclidean_block(Eigen::VectorXd initial) {
    VariableBlock b;
    b.manifold = Manifold::kEuclidean;
    b.tangent_dim = static_cast<int>(initial.size());
    b.value = std::move(initial);
    tangent_offsets_.push_back(blocks_.empty()
                                   ? 0
                                   : tangent_offsets_.back() + blocks_.back().tangent_dim);
    blocks_.push_back(std::move(b));
    return static_cast<int>(blocks_.size()) - 1;
}

int ResidualProblem::add_rotation_block(const std::vector<Rotation3>& rotations) {
    VariableBlock b;
    b.manifold = Manifold::kRotationBundle;
    b.tangent_dim = 3 * static_cast<int>(rotations.size());
    b.value.resize(9 * rotations.size());
    for (std::size_t i = 0; i < rotations.size(); ++i) {
        const Mat3& m = rotations[i].matrix();
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) b.value[i * 9 + r * 3 + c] = m(r, c);
        }
    }
    tangent_offsets_.push_back(blocks_.empty()
                                   ? 0
                                   : tangent_offsets_.back() + blocks_.back().tangent_dim);
    blocks_.push_back(std::move(b));
    return static_cast<int>(blocks_.size()) - 1;
}

void ResidualProblem::add_residual(ResidualBlock block) {
    if (block.blocks.empty()) {
        throw std::invalid_argument("add_residual: must reference at least one block");
    }
    for (int b : block.blocks) {
        if (b < 0 || b >= block_count()) {
            throw std::invalid_argument("add_residual: unknown variable block");
        }
    }
    if (block.dim <= 0) throw std::invalid_argument("add_residual: dimension must be positive");
    if (block.col_ranges.empty()) {
        for (int b : block.blocks) block.col_ranges.emplace_back(0, blocks_[b].tangent_dim);
    } else if (block.col_ranges.size() != block.blocks.size()) {
        throw std::invalid_argument("add_residual: one column range per referenced block");
    } else {
        for (std::size_t k = 0; k < block.blocks.size(); ++k) {
            const auto [off, width] = block.col_ranges[k];
            if (off < 0 || width <= 0 ||
                off + width > blocks_[block.blocks[k]].tangent_dim) {
                throw std::invalid_argument("add_residual: column range out of bounds");
            }
        }
    }
    residuals_.push_back(std::move(block));
}

int ResidualProblem::total_tangent_dim() const {
    return blocks_.empty() ? 0 : tangent_offsets_.back() + blocks_.back().tangent_dim;
}

void ResidualProblem::retract_all(const Eigen::VectorXd& delta) {
    if (delta.size() != total_tangent_dim()) {
        throw std::invalid_argument("retract_all: wrong tangent size");
    }
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        blocks_[i].retract(delta.segment(tangent_offsets_[i], blocks_[i].tangent_dim));
    }
}

double ResidualProblem::cost() const {
    int max_dim = 0;
    for (const ResidualBlock& res : residuals_) max_dim = std::max(max_dim, res.dim);
    Eigen::VectorXd scratch(max_dim);
    double total = 0.0;
    std::vector<const VariableBlock*> refs;
    Eigen::VectorXd r;
    for (const ResidualBlock& res : residuals_) {
        refs.clear();
        for (int b : res.blocks) refs.push_back(&blocks_[b]);
        r = scratch.head(res.dim);
        res.eval(refs, r, nullptr);
        total += r.squaredNorm();
    }
    return total;
}

}  // namespace egokit
