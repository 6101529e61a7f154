#ifndef PFAN_LAYERS_HPP
#define PFAN_LAYERS_HPP

#include <vector>

#include "pfan/matrix.hpp"
#include "pfan/rng.hpp"

namespace pfan {

// One affine layer's parameters with matching gradient and momentum buffers.
struct LayerParams {
    Matrix weight;               // in x out
    std::vector<double> bias;    // out
    Matrix grad_weight;
    std::vector<double> grad_bias;
    Matrix momentum_weight;
    std::vector<double> momentum_bias;

    LayerParams() = default;
    LayerParams(int in, int out)
        : weight(in, out), bias(static_cast<std::size_t>(out), 0.0),
          grad_weight(in, out), grad_bias(static_cast<std::size_t>(out), 0.0),
          momentum_weight(in, out), momentum_bias(static_cast<std::size_t>(out), 0.0) {}

    int in_dim() const { return weight.rows; }
    int out_dim() const { return weight.cols; }

    void zero_grad();
    void zero_momentum();

    // Glorot-uniform weights, zero biases.
    void init_glorot(Rng& rng);

    // All-zero weights and biases; the layer's output starts at exactly zero.
    void init_zero();
};

// out = x * W + bias (broadcast per row).
Matrix affine_forward(const Matrix& x, const LayerParams& p);

// Accumulates grad_weight += x^T * grad_out and grad_bias += column sums,
// returns grad_x = grad_out * W^T.
Matrix affine_backward(const Matrix& x, LayerParams& p, const Matrix& grad_out);

Matrix relu_forward(const Matrix& x);

// Masks by x > 0; the derivative at exactly 0 is taken as 0.
Matrix relu_backward(const Matrix& x, const Matrix& grad_out);

// Row-wise softmax of z / T with max-subtraction.  T must be > 0.
Matrix softmax_temperature(const Matrix& z, double temperature);

// Mean of -log(probs[true]) over rows.  Rows must be probability vectors.
double cross_entropy(const Matrix& probs, const std::vector<int>& labels);

// Gradient of (softmax_temperature o cross_entropy) w.r.t. the logits:
// (q - onehot) / (T * B).
Matrix softmax_ce_grad(const Matrix& probs, const std::vector<int>& labels, double temperature);

// v <- momentum * v + grad; param <- param - lr * v.  Buffers updated in place.
// Throws TrainingDivergence on non-finite gradients.
void sgd_momentum_step(LayerParams& p, double lr, double momentum);

}  // namespace pfan

#endif
