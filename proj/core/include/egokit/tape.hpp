#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace egokit {

using Mat = Eigen::MatrixXd;

/// Reverse-mode differentiation over the closed operation set used by the
/// denoiser: matrix multiply, row-broadcast add, layer normalization,
/// softmax, GELU, rotary embedding, column slicing/concatenation, and a
/// squared-norm reduction. Values are computed eagerly; backward() walks
/// the node list in reverse.
class Tape {
public:
    struct Var {
        int idx = -1;
        bool valid() const { return idx >= 0; }
    };

    Var leaf(Mat value);

    const Mat& value(Var v) const { return values_[v.idx]; }
    const Mat& gradient(Var v) const { return grads_[v.idx]; }

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    /// a (T x D) plus a (1 x D) row broadcast over rows.
    Var add_row_broadcast(Var a, Var row);
    Var scale(Var a, double s);
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var softmax_rows(Var a);
    /// Normalizes each row; gain/bias are (1 x D).
    Var layer_norm_rows(Var a, Var gain, Var bias, double eps = 1e-5);
    Var gelu(Var a);
    /// Rotary embedding over the temporal (row) axis; pairs of columns are
    /// rotated by angles position / base^(2i/d).
    Var rope(Var a, double base);
    Var slice_cols(Var a, int col0, int count);
    Var concat_cols(const std::vector<Var>& parts);
    /// Sum of squared entries of (a - target), a 1x1 result.
    Var squared_error(Var a, const Mat& target);

    /// Seeds a 1x1 node with 1 and accumulates gradients into every node.
    void backward(Var scalar);

private:
    Var emplace(Mat value, std::function<void()> backward_fn);

    std::vector<Mat> values_;
    std::vector<Mat> grads_;
    std::vector<std::function<void()>> backward_fns_;
};

}  // namespace egokit
