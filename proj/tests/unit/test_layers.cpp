#include <doctest.h>

#include <cmath>
#include <vector>

#include "pfan/errors.hpp"
#include "pfan/grad_check.hpp"
#include "pfan/layers.hpp"
#include "pfan/rng.hpp"

using namespace pfan;

namespace {

LayerParams identity_layer(int n) {
    LayerParams p(n, n);
    for (int i = 0; i < n; ++i) p.weight.at(i, i) = 1.0;
    return p;
}

}  // namespace

TEST_SUITE("layers") {

TEST_CASE("affine forward with identity weights adds the bias") {
    LayerParams p = identity_layer(2);
    p.bias = {0.5, -0.5};
    Matrix x(2, 2);
    x.data = {1.0, 2.0, 3.0, 4.0};
    Matrix y = affine_forward(x, p);
    CHECK(y.at(0, 0) == 1.5);
    CHECK(y.at(0, 1) == 1.5);
    CHECK(y.at(1, 0) == 3.5);
    CHECK(y.at(1, 1) == 3.5);
}

TEST_CASE("affine forward hand computation") {
    // x = [[1,2]], W = [[1,2],[3,4]], b = [10,20] -> [[1+6+10, 2+8+20]]
    LayerParams p(2, 2);
    p.weight.data = {1.0, 2.0, 3.0, 4.0};
    p.bias = {10.0, 20.0};
    Matrix x(1, 2);
    x.data = {1.0, 2.0};
    Matrix y = affine_forward(x, p);
    CHECK(y.at(0, 0) == 17.0);
    CHECK(y.at(0, 1) == 30.0);
}

TEST_CASE("affine forward with zero rows") {
    LayerParams p(3, 2);
    Matrix x(0, 3);
    Matrix y = affine_forward(x, p);
    CHECK(y.rows == 0);
    CHECK(y.cols == 2);
}

TEST_CASE("affine backward scalar case") {
    // y = w*x + b with w=5, x=2, upstream grad 3:
    // grad_w = x*g = 6, grad_b = g = 3, grad_x = w*g = 15.
    LayerParams p(1, 1);
    p.weight.at(0, 0) = 5.0;
    Matrix x(1, 1);
    x.at(0, 0) = 2.0;
    Matrix g(1, 1);
    g.at(0, 0) = 3.0;
    Matrix gx = affine_backward(x, p, g);
    CHECK(p.grad_weight.at(0, 0) == 6.0);
    CHECK(p.grad_bias[0] == 3.0);
    CHECK(gx.at(0, 0) == 15.0);
}

TEST_CASE("affine backward accumulates across calls") {
    LayerParams p(1, 1);
    p.weight.at(0, 0) = 1.0;
    Matrix x(1, 1);
    x.at(0, 0) = 2.0;
    Matrix g(1, 1);
    g.at(0, 0) = 1.0;
    affine_backward(x, p, g);
    affine_backward(x, p, g);
    CHECK(p.grad_weight.at(0, 0) == 4.0);
    CHECK(p.grad_bias[0] == 2.0);
    p.zero_grad();
    CHECK(p.grad_weight.at(0, 0) == 0.0);
    CHECK(p.grad_bias[0] == 0.0);
}

TEST_CASE("affine gradients agree with finite differences") {
    Rng rng(11);
    LayerParams p(3, 2);
    p.init_glorot(rng);
    Matrix x(4, 3);
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
    // Loss: sum of squares of the affine outputs.
    auto loss = [&]() {
        Matrix y = affine_forward(x, p);
        double s = 0.0;
        for (double v : y.data) s += 0.5 * v * v;
        return s;
    };
    Matrix y = affine_forward(x, p);
    p.zero_grad();
    affine_backward(x, p, y);  // d(loss)/dy = y
    auto views = param_views(p);
    GradCheckResult res = grad_check(loss, views, 1e-5);
    CHECK(res.max_rel_error < 1e-7);
    CHECK(res.checked > 0);
}

TEST_CASE("relu forward and backward") {
    Matrix x(1, 3);
    x.data = {-1.0, 0.0, 2.0};
    Matrix y = relu_forward(x);
    CHECK(y.data[0] == 0.0);
    CHECK(y.data[1] == 0.0);
    CHECK(y.data[2] == 2.0);
    Matrix g(1, 3);
    g.data = {5.0, 5.0, 5.0};
    Matrix gx = relu_backward(x, g);
    CHECK(gx.data[0] == 0.0);
    CHECK(gx.data[1] == 0.0);  // derivative at exactly 0 is 0
    CHECK(gx.data[2] == 5.0);
}

TEST_CASE("softmax of zero logits is uniform") {
    Matrix z(2, 3, 0.0);
    Matrix q = softmax_temperature(z, 1.8);
    for (double v : q.data) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("softmax hand value at temperature 2") {
    // z = [2, 0], T = 2 -> softmax([1, 0]) = [e/(e+1), 1/(e+1)]
    Matrix z(1, 2);
    z.data = {2.0, 0.0};
    Matrix q = softmax_temperature(z, 2.0);
    double e = std::exp(1.0);
    CHECK(q.at(0, 0) == doctest::Approx(e / (e + 1.0)).epsilon(1e-14));
    CHECK(q.at(0, 1) == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-14));
    CHECK(q.at(0, 0) == doctest::Approx(0.731059).epsilon(1e-6));
    CHECK(q.at(0, 1) == doctest::Approx(0.268941).epsilon(1e-6));
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(7);
    Matrix z(5, 4);
    for (double& v : z.data) v = rng.uniform(-30.0, 30.0);
    for (double t : {1.0, 1.8, 0.25}) {
        Matrix q = softmax_temperature(z, t);
        for (int r = 0; r < 5; ++r) {
            double s = 0.0;
            for (int c = 0; c < 4; ++c) {
                CHECK(q.at(r, c) > 0.0);
                s += q.at(r, c);
            }
            CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("softmax is invariant to a constant logit shift") {
    Matrix z(1, 3);
    z.data = {0.3, -1.2, 2.2};
    Matrix shifted = z;
    for (double& v : shifted.data) v += 100.0;
    Matrix a = softmax_temperature(z, 1.8);
    Matrix b = softmax_temperature(shifted, 1.8);
    for (int c = 0; c < 3; ++c) CHECK(a.at(0, c) == doctest::Approx(b.at(0, c)).epsilon(1e-12));
}

TEST_CASE("temperature above one flattens the distribution") {
    Matrix z(1, 2);
    z.data = {3.0, 0.0};
    Matrix sharp = softmax_temperature(z, 1.0);
    Matrix soft = softmax_temperature(z, 1.8);
    CHECK(soft.at(0, 0) < sharp.at(0, 0));
    CHECK(soft.at(0, 0) > 0.5);
}

TEST_CASE("softmax rejects non-positive temperature") {
    Matrix z(1, 2, 0.0);
    CHECK_THROWS_AS(softmax_temperature(z, 0.0), ParameterError);
    CHECK_THROWS_AS(softmax_temperature(z, -1.0), ParameterError);
}

TEST_CASE("cross entropy of a perfect prediction is zero") {
    Matrix q(1, 3, 0.0);
    q.at(0, 1) = 1.0;
    CHECK(cross_entropy(q, {1}) == 0.0);
}

TEST_CASE("cross entropy of uniform predictions is log C") {
    Matrix q(2, 4, 0.25);
    CHECK(cross_entropy(q, {0, 3}) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
}

TEST_CASE("cross entropy label bounds") {
    Matrix q(1, 3, 1.0 / 3.0);
    CHECK_THROWS_AS(cross_entropy(q, {3}), ParameterError);
    CHECK_THROWS_AS(cross_entropy(q, {-1}), ParameterError);
}

TEST_CASE("softmax cross-entropy gradient matches finite differences") {
    Rng rng(23);
    std::vector<int> labels = {2, 0, 1};
    for (double t : {1.0, 1.8}) {
        Matrix z(3, 4);
        for (double& v : z.data) v = rng.uniform(-2.0, 2.0);
        auto loss = [&]() { return cross_entropy(softmax_temperature(z, t), labels); };
        Matrix q = softmax_temperature(z, t);
        Matrix g = softmax_ce_grad(q, labels, t);
        std::vector<ParamView> views = {{z.data.data(), g.data.data(), z.data.size()}};
        GradCheckResult res = grad_check(loss, views, 1e-6);
        CHECK(res.max_rel_error < 1e-8);
        CHECK(res.checked == 12);
    }
}

TEST_CASE("softmax cross-entropy gradient rows sum to zero") {
    Matrix z(2, 3);
    z.data = {1.0, -0.5, 0.25, 0.0, 2.0, -2.0};
    Matrix q = softmax_temperature(z, 1.8);
    Matrix g = softmax_ce_grad(q, {0, 2}, 1.8);
    for (int r = 0; r < 2; ++r) {
        double s = 0.0;
        for (int c = 0; c < 3; ++c) s += g.at(r, c);
        CHECK(s == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("sgd with zero gradients leaves parameters unchanged") {
    LayerParams p(2, 2);
    p.weight.fill(3.0);
    p.bias = {1.0, -1.0};
    sgd_momentum_step(p, 0.1, 0.9);
    CHECK(p.weight.at(0, 0) == 3.0);
    CHECK(p.bias[0] == 1.0);
}

TEST_CASE("sgd first step moves by lr times gradient") {
    LayerParams p(1, 1);
    p.weight.at(0, 0) = 1.0;
    p.grad_weight.at(0, 0) = 2.0;
    sgd_momentum_step(p, 0.5, 0.9);
    CHECK(p.weight.at(0, 0) == 0.0);  // 1 - 0.5*2
    CHECK(p.momentum_weight.at(0, 0) == 2.0);
}

TEST_CASE("sgd second step includes momentum") {
    // v1 = g = 2 -> w = 1 - 0.5*2 = 0
    // v2 = 0.9*2 + 0.1 = 1.9 -> w = 0 - 0.5*1.9 = -0.95
    LayerParams p(1, 1);
    p.weight.at(0, 0) = 1.0;
    p.grad_weight.at(0, 0) = 2.0;
    sgd_momentum_step(p, 0.5, 0.9);
    p.zero_grad();
    p.grad_weight.at(0, 0) = 0.1;
    sgd_momentum_step(p, 0.5, 0.9);
    CHECK(p.weight.at(0, 0) == doctest::Approx(-0.95).epsilon(1e-15));
    CHECK(p.momentum_weight.at(0, 0) == doctest::Approx(1.9).epsilon(1e-15));
}

TEST_CASE("sgd rejects non-finite gradients") {
    LayerParams p(1, 1);
    p.grad_weight.at(0, 0) = std::nan("");
    CHECK_THROWS_AS(sgd_momentum_step(p, 0.1, 0.9), TrainingDivergence);
}

TEST_CASE("glorot init is within bounds and zero-init is exact") {
    Rng rng(3);
    LayerParams p(10, 20);
    p.init_glorot(rng);
    double a = std::sqrt(6.0 / 30.0);
    bool nonzero = false;
    for (double w : p.weight.data) {
        CHECK(w >= -a);
        CHECK(w <= a);
        if (w != 0.0) nonzero = true;
    }
    CHECK(nonzero);
    for (double b : p.bias) CHECK(b == 0.0);

    p.init_zero();
    for (double w : p.weight.data) CHECK(w == 0.0);
    for (double b : p.bias) CHECK(b == 0.0);
}

}  // TEST_SUITE
