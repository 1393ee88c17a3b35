// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <limits>

#include <cmath>
#include <vector>

#include "error.hpp"
#include "network.hpp"
#include "optimizer.hpp"
#include "rng.hpp"

using namespace sparsetrain;

namespace {

Model tiny_linear_model(int64_t in, int64_t out) {
    NetworkSpec s;
    s.name = "tiny";
    s.input_shape = {in};
    s.layers = {LayerSpec::linear(in, out, false), LayerSpec::softmax_cross_entropy()};
    return Model::build(s);
}

} // namespace

TEST_CASE("identity-weight linear maps input through unchanged") {
    Model m = tiny_linear_model(2, 2);
    // weight is (out, in); identity
    m.params[0].values[0] = 1.0;
    m.params[0].values[3] = 1.0;
    Tensor x({1, 2});
    x[0] = 1.0;
    x[1] = 2.0;
    const Tensor y = forward(m, x, nullptr, false);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 2.0);
}

TEST_CASE("all-zero weights give zero logits") {
    Model m = tiny_linear_model(3, 4);
    Tensor x({2, 3});
    for (auto& v : x.data) v = 1.7;
    const Tensor y = forward(m, x, nullptr, false);
    for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("three-layer mlp forward matches a straight-line reference") {
    NetworkSpec s = build_network("mlp:5-7-6-4");
    Model m = Model::build(s);
    Rng rng(99);
    m.init_params(rng);
    Tensor x({3, 5});
    for (auto& v : x.data) v = rng.next_normal();

    const Tensor got = forward(m, x, nullptr, false);

    // Independent naive evaluation: y = relu(x W1^T + b1) etc., scalar loops.
    auto matmul_bias = [&](const std::vector<double>& in, int64_t b, int64_t ni, int pidx,
                           int64_t no) {
        const Tensor& w = m.params[size_t(pidx)].values;
        const Tensor& bias = m.params[size_t(pidx) + 1].values;
        std::vector<double> out(size_t(b * no), 0.0);
        for (int64_t r = 0; r < b; ++r)
            for (int64_t o = 0; o < no; ++o) {
                double acc = bias[o];
                for (int64_t i = 0; i < ni; ++i) acc += in[size_t(r * ni + i)] * w[o * ni + i];
                out[size_t(r * no + o)] = acc;
            }
        return out;
    };
    std::vector<double> h(x.data.begin(), x.data.end());
    h = matmul_bias(h, 3, 5, 0, 7);
    for (auto& v : h) v = v > 0 ? v : 0;
    h = matmul_bias(h, 3, 7, 2, 6);
    for (auto& v : h) v = v > 0 ? v : 0;
    h = matmul_bias(h, 3, 6, 4, 4);

    REQUIRE(got.numel() == int64_t(h.size()));
    for (int64_t i = 0; i < got.numel(); ++i)
        CHECK(std::fabs(got[i] - h[size_t(i)]) <= 1e-12 * std::max(1.0, std::fabs(h[size_t(i)])));
}

TEST_CASE("forward rejects shape mismatches and non-finite activations") {
    Model m = tiny_linear_model(3, 2);
    Tensor bad({2, 4});
    CHECK_THROWS_AS(forward(m, bad, nullptr, false), Error);

    Tensor x({1, 3});
    x[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(forward(m, x, nullptr, false), Error);
}

TEST_CASE("sum-of-outputs loss gives outer-product weight gradient") {
    Model m = tiny_linear_model(3, 2);
    Rng rng(5);
    m.init_params(rng);
    Tensor x({1, 3});
    x[0] = 0.5;
    x[1] = -1.0;
    x[2] = 2.0;
    ForwardCache cache;
    forward(m, x, &cache, true);
    Tensor ones({1, 2});
    ones.fill(1.0);
    const auto grads = backward(m, cache, ones);
    // dW[o][i] = x[i] for every output row; db[o] = 1.
    for (int64_t o = 0; o < 2; ++o) {
        for (int64_t i = 0; i < 3; ++i) CHECK(grads[0][o * 3 + i] == doctest::Approx(x[i]));
        CHECK(grads[1][o] == doctest::Approx(1.0));
    }
}

TEST_CASE("gradients are reported at masked positions but never applied") {
    NetworkSpec s;
    s.name = "masked";
    s.input_shape = {3};
    s.layers = {LayerSpec::linear(3, 2, true), LayerSpec::softmax_cross_entropy()};
    Model m = Model::build(s);
    Rng rng(6);
    m.init_params(rng);
    sample_sparse_masks(m.params, 0.5, rng);

    int64_t masked_pos = -1;
    for (int64_t i = 0; i < m.params[0].numel(); ++i)
        if (!m.params[0].mask.test(i)) masked_pos = i;
    REQUIRE(masked_pos >= 0);

    Tensor x({2, 3});
    for (auto& v : x.data) v = 1.0 + rng.next_uniform();
    ForwardCache cache;
    const Tensor logits = forward(m, x, &cache, true);
    Tensor dlogits;
    std::vector<int> labels = {0, 1};
    softmax_cross_entropy_loss(logits, labels, &dlogits);
    const auto grads = backward(m, cache, dlogits);
    CHECK(grads[0][masked_pos] != 0.0);  // reported

    SgdOptimizer opt(0.9, true, 0.0, 0.0);
    opt.attach(m);
    for (int step = 0; step < 5; ++step) opt.step(m, grads, 0.1);
    CHECK(m.params[0].values[masked_pos] == 0.0);  // never applied
}

TEST_CASE("sgd arithmetic") {
    Model m = tiny_linear_model(1, 1);
    m.params[0].values[0] = 1.0;
    std::vector<Tensor> g;
    g.emplace_back(std::vector<int64_t>{1, 1});
    g.emplace_back(std::vector<int64_t>{1});

    SUBCASE("plain step") {
        g[0][0] = 0.25;
        SgdOptimizer opt(0.0, false, 0.0, 0.0);
        opt.attach(m);
        opt.step(m, g, 0.1);
        CHECK(m.params[0].values[0] == doctest::Approx(1.0 - 0.1 * 0.25));
    }
    SUBCASE("weight decay with zero gradient") {
        g[0][0] = 0.0;
        SgdOptimizer opt(0.0, false, 0.0, 0.0005);
        opt.attach(m);
        opt.step(m, g, 0.1);
        CHECK(m.params[0].values[0] == doctest::Approx(0.99995).epsilon(1e-12));
    }
    SUBCASE("nesterov momentum matches a hand-rolled reference") {
        SgdOptimizer opt(0.9, true, 0.0, 0.0);
        opt.attach(m);
        double w = 1.0, v = 0.0;
        for (int step = 0; step < 3; ++step) {
            const double grad = 0.2 + 0.1 * step;
            g[0][0] = grad;
            opt.step(m, g, 0.05);
            v = 0.9 * v + grad;
            w -= 0.05 * (grad + 0.9 * v);
            CHECK(m.params[0].values[0] == doctest::Approx(w).epsilon(1e-12));
        }
    }
    SUBCASE("l1 pulls toward zero") {
        g[0][0] = 0.0;
        SgdOptimizer opt(0.0, false, 0.01, 0.0);
        opt.attach(m);
        opt.step(m, g, 0.1);
        CHECK(m.params[0].values[0] == doctest::Approx(1.0 - 0.1 * 0.01));
    }
}

TEST_CASE("network validation rejects inconsistent chains") {
    NetworkSpec s;
    s.name = "bad";
    s.input_shape = {4};
    s.layers = {LayerSpec::linear(5, 3, false), LayerSpec::softmax_cross_entropy()};
    CHECK_THROWS_AS(s.validate(), Error);

    NetworkSpec s2;
    s2.name = "noloss";
    s2.input_shape = {4};
    s2.layers = {LayerSpec::linear(4, 3, false)};
    CHECK_THROWS_AS(s2.validate(), Error);
}
