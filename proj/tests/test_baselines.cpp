// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <limits>

#include <cmath>
#include <numeric>

#include "baselines.hpp"
#include "error.hpp"
#include "network.hpp"

using namespace sparsetrain;

namespace {

MaskedTensor with_values(const std::string& name, std::vector<double> vals) {
    MaskedTensor t(name, {int64_t(vals.size())}, true);
    for (size_t i = 0; i < vals.size(); ++i) t.values[int64_t(i)] = vals[i];
    return t;
}

} // namespace

TEST_CASE("set_step prunes the smallest magnitudes and regrows in place") {
    Rng rng(3);
    std::vector<MaskedTensor> ps;
    ps.push_back(with_values("a", {0.9, 0.5, 0.1, 0.0, 0.0}));
    ps[0].mask.clear(3);
    ps[0].mask.clear(4);
    ps[0].values[3] = ps[0].values[4] = 0.0;

    const SetReport rep = set_step(ps, 1, rng);
    CHECK(rep.pruned_total == 1);
    CHECK(!ps[0].mask.test(2));  // 0.1 was the smallest
    CHECK(ps[0].values[2] == 0.0);
    CHECK(ps[0].active_count() == 3);  // defining invariant: per-tensor count fixed
    CHECK(ps[0].consistent());

    SUBCASE("zero budget is a no-op") {
        std::vector<MaskedTensor> qs;
        qs.push_back(with_values("b", {0.9, 0.5}));
        const auto before = qs[0].values.data;
        set_step(qs, 0, rng);
        CHECK(qs[0].values.data == before);
    }
}

TEST_CASE("set_step keeps every per-tensor count constant over random steps") {
    Rng rng(11);
    std::vector<MaskedTensor> ps;
    for (int l = 0; l < 3; ++l) {
        MaskedTensor t("t" + std::to_string(l), {40 + 20 * l}, true);
        for (int64_t i = 0; i < t.numel(); ++i) {
            if (rng.next_uniform() < 0.5) {
                t.values[i] = rng.next_normal();
            } else {
                t.mask.clear(i);
                t.values[i] = 0.0;
            }
        }
        ps.push_back(std::move(t));
    }
    std::vector<int64_t> before;
    for (const auto& p : ps) before.push_back(p.active_count());
    for (int step = 0; step < 200; ++step) {
        for (auto& p : ps)
            for (int64_t i = 0; i < p.numel(); ++i)
                if (p.mask.test(i) && p.values[i] == 0.0) p.values[i] = rng.next_normal();
        set_step(ps, 6, rng);
        for (size_t l = 0; l < ps.size(); ++l) {
            CHECK(ps[l].active_count() == before[l]);
            CHECK(ps[l].consistent());
        }
    }
}

TEST_CASE("deepr_step") {
    NetworkSpec spec;
    spec.name = "d";
    spec.input_shape = {4};
    spec.layers = {LayerSpec::linear(4, 3, true), LayerSpec::softmax_cross_entropy()};

    SUBCASE("T=0, alpha=0, no crossing reduces to plain masked sgd") {
        Rng rng(5);
        Model m = Model::build(spec);
        m.init_params(rng);
        sample_sparse_masks(m.params, 0.5, rng);
        Model copy = m;

        std::vector<Tensor> grads;
        for (const auto& p : m.params) {
            Tensor g(p.values.shape);
            for (auto& v : g.data) v = 0.01 * rng.next_normal();  // small: no sign crossings
            grads.push_back(std::move(g));
        }
        DeepRState st = DeepRState::init(m.params, rng);
        Rng noise(1), rewire(2);
        const int64_t rewired =
            deepr_step(m.params, st, grads, m.sparse_param_indices(), 0.05, 0.0, 0.0, noise, rewire);
        CHECK(rewired == 0);

        for (int64_t i = 0; i < copy.params[0].numel(); ++i) {
            if (!copy.params[0].mask.test(i)) continue;
            const double expect = copy.params[0].values[i] - 0.05 * grads[0][i];
            CHECK(m.params[0].values[i] == doctest::Approx(expect).epsilon(1e-12));
        }
    }

    SUBCASE("a crossing deactivates and the budget is refilled") {
        Rng rng(6);
        Model m = Model::build(spec);
        m.init_params(rng);
        sample_sparse_masks(m.params, 0.5, rng);
        DeepRState st = DeepRState::init(m.params, rng);

        int64_t pos = -1;
        for (int64_t i = 0; i < m.params[0].numel(); ++i)
            if (m.params[0].mask.test(i)) pos = i;
        REQUIRE(pos >= 0);
        m.params[0].values[pos] = 0.001;
        st.signs[0][size_t(pos)] = 1;

        std::vector<Tensor> grads;
        for (const auto& p : m.params) grads.emplace_back(p.values.shape);
        grads[0][pos] = 1.0;  // lr * 0.01... push theta' = 0.001 - 0.05 < 0

        const int64_t active_before = m.params[0].active_count();
        Rng noise(1), rewire(2);
        const int64_t rewired =
            deepr_step(m.params, st, grads, m.sparse_param_indices(), 0.05, 0.0, 0.0, noise, rewire);
        CHECK(rewired >= 1);
        CHECK(!m.params[0].mask.test(pos));
        CHECK(m.params[0].values[pos] == 0.0);
        CHECK(m.params[0].active_count() == active_before);  // refilled elsewhere
    }

    SUBCASE("total active count constant and signs stable over 1000 noisy steps") {
        Rng rng(7);
        Model m = Model::build(spec);
        m.init_params(rng);
        sample_sparse_masks(m.params, 0.5, rng);
        DeepRState st = DeepRState::init(m.params, rng);
        const int64_t active_before = m.params[0].active_count();

        // Track that an active connection never flips sign while active.
        std::vector<int8_t> last_sign(size_t(m.params[0].numel()), 0);
        Rng noise(8), rewire(9);
        for (int step = 0; step < 1000; ++step) {
            std::vector<Tensor> grads;
            for (const auto& p : m.params) {
                Tensor g(p.values.shape);
                for (auto& v : g.data) v = rng.next_normal();
                grads.push_back(std::move(g));
            }
            deepr_step(m.params, st, grads, m.sparse_param_indices(), 0.01, 1e-4, 1e-3, noise,
                       rewire);
            CHECK(m.params[0].active_count() == active_before);
            for (int64_t i = 0; i < m.params[0].numel(); ++i) {
                const double v = m.params[0].values[i];
                if (!m.params[0].mask.test(i) || v == 0.0) {
                    last_sign[size_t(i)] = 0;
                    continue;
                }
                const int8_t sign = v > 0 ? 1 : -1;
                if (last_sign[size_t(i)] != 0) CHECK(sign == last_sign[size_t(i)]);
                last_sign[size_t(i)] = sign;
            }
        }
    }
}

TEST_CASE("global magnitude pruning hits exact counts") {
    Rng rng(13);
    std::vector<MaskedTensor> ps;
    ps.push_back(with_values("a", {0.9, 0.05, 0.5, 0.01}));
    ps.push_back(with_values("b", {0.2, 0.03, 0.7}));
    // total 7 active; target sparsity 3/7 zeros -> keep 4
    const int64_t pruned = prune_global_to_sparsity(ps, 3.0 / 7.0);
    CHECK(pruned == 3);
    CHECK(ps[0].active_count() + ps[1].active_count() == 4);
    // the three smallest magnitudes were 0.01, 0.03, 0.05
    CHECK(!ps[0].mask.test(1));
    CHECK(!ps[0].mask.test(3));
    CHECK(!ps[1].mask.test(1));

    SUBCASE("already at target: no-op") {
        CHECK(prune_global_to_sparsity(ps, 3.0 / 7.0) == 0);
    }
}

TEST_CASE("compression schedule endpoints and cubic ramp") {
    CompressionSchedule cs;
    cs.pruning_iterations = 20;
    cs.epochs_between = 2;
    cs.epochs_post = 10;
    cs.target_sparsity = 0.9;
    CHECK(cs.sparsity_at(0) == 0.0);
    CHECK(cs.sparsity_at(20) == doctest::Approx(0.9));
    CHECK(cs.sparsity_at(10) == doctest::Approx(0.7875));
    for (int64_t t = 1; t <= 20; ++t) CHECK(cs.sparsity_at(t) >= cs.sparsity_at(t - 1));
    CHECK_THROWS_AS(cs.sparsity_at(21), Error);
}

TEST_CASE("thin-dense sizing") {
    const NetworkSpec lenet = build_network("lenet300100");

    SUBCASE("target equal to the original count keeps widths") {
        // (1-s) + 1/32 == 1 at s = 1/32.
        const NetworkSpec thin = build_thin_dense(lenet, 1.0 / 32.0);
        CHECK(thin.layers[0].out == 300);
        CHECK(thin.layers[2].out == 100);
    }
    SUBCASE("lenet at s=0.9 lands within 1% of the descriptive-length target") {
        const NetworkSpec thin = build_thin_dense(lenet, 0.9);
        int64_t count = 0;
        for (const auto& l : thin.layers)
            if (l.kind == LayerKind::linear) count += l.in * l.out + l.out;
        const double target = (0.1 + 1.0 / 32.0) * 266200.0 + 410.0;
        CHECK(std::fabs(double(count) - target) / target < 0.01);
        for (const auto& l : thin.layers) CHECK(!l.sparse);
        CHECK(thin.layers[4].out == 10);  // classifier width pinned
    }
    SUBCASE("higher sparsity gives strictly fewer parameters") {
        int64_t prev = std::numeric_limits<int64_t>::max();
        for (double s : {0.5, 0.7, 0.9, 0.97}) {
            const NetworkSpec thin = build_thin_dense(lenet, s);
            int64_t count = 0;
            for (const auto& l : thin.layers)
                if (l.kind == LayerKind::linear) count += l.in * l.out + l.out;
            CHECK(count < prev);
            prev = count;
        }
    }
}

TEST_CASE("hashed weight sharing") {
    NetworkSpec spec;
    spec.name = "h";
    spec.input_shape = {4};
    spec.layers = {LayerSpec::linear(4, 2, true), LayerSpec::softmax_cross_entropy()};

    SUBCASE("M == N behaves as a plain dense layer") {
        Rng rng(2);
        Model m = Model::build(spec);
        m.init_params(rng);
        const Tensor dense_before = m.params[0].values;
        // sparsity ~ 0 keeps every unique parameter: identity mapping.
        std::vector<HashedTensor> hs = build_hashed_tensors(m, 1e-9, HashedConfig{123});
        CHECK(hs[0].unique_count == 8);
        Tensor out({8});
        hs[0].expand_into(out);
        CHECK(out.data == dense_before.data);
    }
    SUBCASE("M == 1 shares one weight everywhere and sums gradients") {
        Rng rng(3);
        Model m = Model::build(spec);
        m.init_params(rng);
        std::vector<HashedTensor> hs = build_hashed_tensors(m, 0.9999, HashedConfig{5});
        CHECK(hs[0].unique_count == 1);
        Tensor out({8});
        hs[0].expand_into(out);
        for (int64_t i = 0; i < 8; ++i) CHECK(out[i] == out[0]);
        Tensor g({8});
        for (int64_t i = 0; i < 8; ++i) g[i] = double(i);
        const Tensor du = hs[0].gather_gradient(g);
        CHECK(du[0] == doctest::Approx(28.0));
    }
    SUBCASE("the position map is the seeded mixing hash, recomputed independently") {
        HashedTensor h;
        h.dense_numel = 8;
        h.unique_count = 3;
        h.seed = 0xFEEDu;
        h.unique = Tensor({3});
        for (int64_t i = 0; i < 8; ++i) {
            uint64_t x = h.seed ^ uint64_t(i);
            x ^= x >> 30;
            x *= 0xBF58476D1CE4E5B9ull;
            x ^= x >> 27;
            x *= 0x94D049BB133111EBull;
            x ^= x >> 31;
            CHECK(h.map_position(i) == int64_t(x % 3));
        }
    }
}
