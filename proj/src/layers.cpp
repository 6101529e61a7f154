#include "pfan/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pfan {

void LayerParams::zero_grad() {
    grad_weight.fill(0.0);
    std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
}

void LayerParams::zero_momentum() {
    momentum_weight.fill(0.0);
    std::fill(momentum_bias.begin(), momentum_bias.end(), 0.0);
}

void LayerParams::init_glorot(Rng& rng) {
    double a = std::sqrt(6.0 / (in_dim() + out_dim()));
    for (double& w : weight.data) w = rng.uniform(-a, a);
    std::fill(bias.begin(), bias.end(), 0.0);
    zero_grad();
    zero_momentum();
}

void LayerParams::init_zero() {
    weight.fill(0.0);
    std::fill(bias.begin(), bias.end(), 0.0);
    zero_grad();
    zero_momentum();
}

Matrix affine_forward(const Matrix& x, const LayerParams& p) {
    if (x.cols != p.in_dim())
        throw DimensionError("affine_forward: input has " + std::to_string(x.cols) +
                             " cols, layer expects " + std::to_string(p.in_dim()));
    Matrix out = matmul(x, p.weight);
    for (int i = 0; i < out.rows; ++i) {
        double* row = out.row_ptr(i);
        for (int j = 0; j < out.cols; ++j) row[j] += p.bias[static_cast<std::size_t>(j)];
    }
    return out;
}

Matrix affine_backward(const Matrix& x, LayerParams& p, const Matrix& grad_out) {
    if (x.cols != p.in_dim() || grad_out.cols != p.out_dim() || x.rows != grad_out.rows)
        throw DimensionError("affine_backward: shape mismatch");
    Matrix gw = matmul_at_b(x, grad_out);
    add_inplace(p.grad_weight, gw);
    for (int i = 0; i < grad_out.rows; ++i) {
        const double* row = grad_out.row_ptr(i);
        for (int j = 0; j < grad_out.cols; ++j) p.grad_bias[static_cast<std::size_t>(j)] += row[j];
    }
    return matmul_a_bt(grad_out, p.weight);
}

Matrix relu_forward(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

Matrix relu_backward(const Matrix& x, const Matrix& grad_out) {
    if (!x.same_shape(grad_out)) throw DimensionError("relu_backward: shape mismatch");
    Matrix out = grad_out;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        if (!(x.data[i] > 0.0)) out.data[i] = 0.0;
    return out;
}

Matrix softmax_temperature(const Matrix& z, double temperature) {
    if (!(temperature > 0.0))
        throw ParameterError("softmax temperature must be > 0, got " + std::to_string(temperature));
    Matrix q(z.rows, z.cols);
    for (int i = 0; i < z.rows; ++i) {
        const double* zi = z.row_ptr(i);
        double* qi = q.row_ptr(i);
        double zmax = zi[0];
        for (int j = 1; j < z.cols; ++j) zmax = std::max(zmax, zi[j]);
        double sum = 0.0;
        for (int j = 0; j < z.cols; ++j) {
            qi[j] = std::exp((zi[j] - zmax) / temperature);
            sum += qi[j];
        }
        for (int j = 0; j < z.cols; ++j) qi[j] /= sum;
    }
    return q;
}

double cross_entropy(const Matrix& probs, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != probs.rows)
        throw DimensionError("cross_entropy: label count != row count");
    double total = 0.0;
    for (int i = 0; i < probs.rows; ++i) {
        int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= probs.cols)
            throw ParameterError("cross_entropy: label " + std::to_string(y) + " out of range [0," +
                                 std::to_string(probs.cols) + ")");
        total += -std::log(probs.at(i, y));
    }
    return probs.rows > 0 ? total / probs.rows : 0.0;
}

Matrix softmax_ce_grad(const Matrix& probs, const std::vector<int>& labels, double temperature) {
    if (static_cast<int>(labels.size()) != probs.rows)
        throw DimensionError("softmax_ce_grad: label count != row count");
    Matrix g = probs;
    double scale = 1.0 / (temperature * probs.rows);
    for (int i = 0; i < g.rows; ++i) {
        int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= g.cols)
            throw ParameterError("softmax_ce_grad: label out of range");
        g.at(i, y) -= 1.0;
        double* row = g.row_ptr(i);
        for (int j = 0; j < g.cols; ++j) row[j] *= scale;
    }
    return g;
}

void sgd_momentum_step(LayerParams& p, double lr, double momentum) {
    if (!p.grad_weight.all_finite())
        throw TrainingDivergence("sgd_momentum_step: non-finite weight gradient");
    for (double g : p.grad_bias)
        if (!std::isfinite(g)) throw TrainingDivergence("sgd_momentum_step: non-finite bias gradient");
    for (std::size_t i = 0; i < p.weight.data.size(); ++i) {
        double v = momentum * p.momentum_weight.data[i] + p.grad_weight.data[i];
        p.momentum_weight.data[i] = v;
        p.weight.data[i] -= lr * v;
    }
    for (std::size_t i = 0; i < p.bias.size(); ++i) {
        double v = momentum * p.momentum_bias[i] + p.grad_bias[i];
        p.momentum_bias[i] = v;
        p.bias[i] -= lr * v;
    }
}

}  // namespace pfan
