#include "egokit/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace egokit {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

}  // namespace

Tape::Var Tape::emplace(Mat value, std::function<void()> backward_fn) {
    values_.push_back(std::move(value));
    grads_.emplace_back(Mat::Zero(values_.back().rows(), values_.back().cols()));
    backward_fns_.push_back(std::move(backward_fn));
    return Var{static_cast<int>(values_.size()) - 1};
}

Tape::Var Tape::leaf(Mat value) {
    return emplace(std::move(value), nullptr);
}

Tape::Var Tape::add(Var a, Var b) {
    Var out = emplace(values_[a.idx] + values_[b.idx], nullptr);
    backward_fns_[out.idx] = [this, a, b, out] {
        grads_[a.idx] += grads_[out.idx];
        grads_[b.idx] += grads_[out.idx];
    };
    return out;
}

Tape::Var Tape::sub(Var a, Var b) {
    Var out = emplace(values_[a.idx] - values_[b.idx], nullptr);
    backward_fns_[out.idx] = [this, a, b, out] {
        grads_[a.idx] += grads_[out.idx];
        grads_[b.idx] -= grads_[out.idx];
    };
    return out;
}

Tape::Var Tape::add_row_broadcast(Var a, Var row) {
    Var out = emplace(values_[a.idx].rowwise() + values_[row.idx].row(0), nullptr);
    backward_fns_[out.idx] = [this, a, row, out] {
        grads_[a.idx] += grads_[out.idx];
        grads_[row.idx] += grads_[out.idx].colwise().sum();
    };
    return out;
}

Tape::Var Tape::scale(Var a, double s) {
    Var out = emplace(s * values_[a.idx], nullptr);
    backward_fns_[out.idx] = [this, a, out, s] { grads_[a.idx] += s * grads_[out.idx]; };
    return out;
}

Tape::Var Tape::matmul(Var a, Var b) {
    Var out = emplace(values_[a.idx] * values_[b.idx], nullptr);
    backward_fns_[out.idx] = [this, a, b, out] {
        grads_[a.idx].noalias() += grads_[out.idx] * values_[b.idx].transpose();
        grads_[b.idx].noalias() += values_[a.idx].transpose() * grads_[out.idx];
    };
    return out;
}

Tape::Var Tape::transpose(Var a) {
    Var out = emplace(values_[a.idx].transpose(), nullptr);
    backward_fns_[out.idx] = [this, a, out] {
        grads_[a.idx] += grads_[out.idx].transpose();
    };
    return out;
}

Tape::Var Tape::softmax_rows(Var a) {
    Mat y = values_[a.idx];
    for (int i = 0; i < y.rows(); ++i) {
        y.row(i).array() -= y.row(i).maxCoeff();
        y.row(i) = y.row(i).array().exp();
        y.row(i) /= y.row(i).sum();
    }
    Var out = emplace(std::move(y), nullptr);
    backward_fns_[out.idx] = [this, a, out] {
        const Mat& yv = values_[out.idx];
        const Mat& dy = grads_[out.idx];
        // dx = y .* (dy - rowsum(dy .* y))
        const Eigen::VectorXd dot = (dy.array() * yv.array()).rowwise().sum();
        grads_[a.idx].array() += yv.array() * (dy.array().colwise() - dot.array());
    };
    return out;
}

Tape::Var Tape::layer_norm_rows(Var a, Var gain, Var bias, double eps) {
    const Mat& x = values_[a.idx];
    const int cols = static_cast<int>(x.cols());
    Eigen::VectorXd mean = x.rowwise().mean();
    Mat centered = x.colwise() - mean;
    Eigen::VectorXd inv_std =
        ((centered.array().square().rowwise().sum() / cols) + eps).sqrt().inverse();
    Mat x_hat = centered.array().colwise() * inv_std.array();
    Mat y = (x_hat.array().rowwise() * values_[gain.idx].row(0).array()).rowwise() +
            values_[bias.idx].row(0).array();
    Var out = emplace(std::move(y), nullptr);
    backward_fns_[out.idx] =
        [this, a, gain, bias, out, x_hat = std::move(x_hat), inv_std = std::move(inv_std),
         cols] {
            const Mat& dy = grads_[out.idx];
            grads_[bias.idx] += dy.colwise().sum();
            grads_[gain.idx] += (dy.array() * x_hat.array()).colwise().sum().matrix();
            const Mat dxhat = dy.array().rowwise() * values_[gain.idx].row(0).array();
            const Eigen::VectorXd m1 = dxhat.rowwise().mean();
            const Eigen::VectorXd m2 =
                (dxhat.array() * x_hat.array()).rowwise().sum() / cols;
            Mat dx = dxhat.colwise() - m1;
            dx.array() -= x_hat.array().colwise() * m2.array();
            grads_[a.idx].array() += dx.array().colwise() * inv_std.array();
        };
    return out;
}

Tape::Var Tape::gelu(Var a) {
    const Mat& x = values_[a.idx];
    Mat y = x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); });
    Var out = emplace(std::move(y), nullptr);
    backward_fns_[out.idx] = [this, a, out] {
        const Mat& xv = values_[a.idx];
        const Mat deriv = xv.unaryExpr([](double v) {
            const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            return cdf + v * pdf;
        });
        grads_[a.idx].array() += grads_[out.idx].array() * deriv.array();
    };
    return out;
}

Tape::Var Tape::rope(Var a, double base) {
    const Mat& x = values_[a.idx];
    const int rows = static_cast<int>(x.rows());
    const int dim = static_cast<int>(x.cols());
    if (dim % 2 != 0) throw std::invalid_argument("rope: column count must be even");
    // Precompute cos/sin per (row, pair).
    Mat cs(rows, dim / 2), sn(rows, dim / 2);
    for (int p = 0; p < dim / 2; ++p) {
        const double freq = std::pow(base, -2.0 * p / dim);
        for (int t = 0; t < rows; ++t) {
            cs(t, p) = std::cos(t * freq);
            sn(t, p) = std::sin(t * freq);
        }
    }
    Mat y(rows, dim);
    for (int p = 0; p < dim / 2; ++p) {
        y.col(2 * p) = cs.col(p).cwiseProduct(x.col(2 * p)) - sn.col(p).cwiseProduct(x.col(2 * p + 1));
        y.col(2 * p + 1) =
            sn.col(p).cwiseProduct(x.col(2 * p)) + cs.col(p).cwiseProduct(x.col(2 * p + 1));
    }
    Var out = emplace(std::move(y), nullptr);
    backward_fns_[out.idx] = [this, a, out, cs = std::move(cs), sn = std::move(sn), dim] {
        const Mat& dy = grads_[out.idx];
        Mat& dx = grads_[a.idx];
        // Inverse rotation applied to the upstream gradient.
        for (int p = 0; p < dim / 2; ++p) {
            dx.col(2 * p) += cs.col(p).cwiseProduct(dy.col(2 * p)) +
                             sn.col(p).cwiseProduct(dy.col(2 * p + 1));
            dx.col(2 * p + 1) += cs.col(p).cwiseProduct(dy.col(2 * p + 1)) -
                                 sn.col(p).cwiseProduct(dy.col(2 * p));
        }
    };
    return out;
}

Tape::Var Tape::slice_cols(Var a, int col0, int count) {
    Var out = emplace(values_[a.idx].middleCols(col0, count), nullptr);
    backward_fns_[out.idx] = [this, a, out, col0, count] {
        grads_[a.idx].middleCols(col0, count) += grads_[out.idx];
    };
    return out;
}

Tape::Var Tape::concat_cols(const std::vector<Var>& parts) {
    int cols = 0;
    for (Var p : parts) cols += static_cast<int>(values_[p.idx].cols());
    Mat y(values_[parts[0].idx].rows(), cols);
    int at = 0;
    for (Var p : parts) {
        const int c = static_cast<int>(values_[p.idx].cols());
        y.middleCols(at, c) = values_[p.idx];
        at += c;
    }
    Var out = emplace(std::move(y), nullptr);
    backward_fns_[out.idx] = [this, parts, out] {
        int at = 0;
        for (Var p : parts) {
            const int c = static_cast<int>(values_[p.idx].cols());
            grads_[p.idx] += grads_[out.idx].middleCols(at, c);
            at += c;
        }
    };
    return out;
}

Tape::Var Tape::squared_error(Var a, const Mat& target) {
    if (values_[a.idx].rows() != target.rows() || values_[a.idx].cols() != target.cols()) {
        throw std::invalid_argument("squared_error: shape mismatch");
    }
    Mat diff = values_[a.idx] - target;
    Mat y(1, 1);
    y(0, 0) = diff.squaredNorm();
    Var out = emplace(std::move(y), nullptr);
    backward_fns_[out.idx] = [this, a, out, diff = std::move(diff)] {
        grads_[a.idx] += 2.0 * grads_[out.idx](0, 0) * diff;
    };
    return out;
}

void Tape::backward(Var scalar) {
    if (values_[scalar.idx].size() != 1) {
        throw std::invalid_argument("backward: seed must be a 1x1 node");
    }
    grads_[scalar.idx](0, 0) = 1.0;
    for (int i = scalar.idx; i >= 0; --i) {
        if (backward_fns_[i]) backward_fns_[i]();
    }
}

}  // namespace egokit
