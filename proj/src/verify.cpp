// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "verify.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "baselines.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "network.hpp"
#include "realloc.hpp"
#include "reference_realloc.hpp"
#include "train.hpp"

namespace sparsetrain {

namespace {

MaskedTensor random_masked(const std::string& name, int64_t n, double keep_prob, Rng& rng) {
    MaskedTensor t(name, {n}, true);
    t.mask = Bitmask(n, false);
    for (int64_t i = 0; i < n; ++i) {
        if (rng.next_uniform() < keep_prob) {
            t.mask.set(i);
            t.values[i] = rng.next_normal();
        } else {
            t.values[i] = 0.0;
        }
    }
    return t;
}

} // namespace

bool check_realloc_oracle(int instances, std::string* detail) {
    for (int inst = 0; inst < instances; ++inst) {
        Rng setup(mix64(0xA11CE000u + uint64_t(inst)));
        const int n_tensors = 1 + int(setup.next_below(3));
        std::vector<MaskedTensor> params;
        std::vector<reference::RefTensor> ref;
        for (int l = 0; l < n_tensors; ++l) {
            const int64_t n = 2 + int64_t(setup.next_below(19));  // <= 20 entries
            MaskedTensor t = random_masked("t" + std::to_string(l), n, 0.3 + 0.6 * setup.next_uniform(),
                                           setup);
            reference::RefTensor r;
            r.values = t.values.data;
            r.active.assign(size_t(n), 0);
            for (int64_t i = 0; i < n; ++i) r.active[size_t(i)] = t.mask.test(i) ? 1 : 0;
            params.push_back(std::move(t));
            ref.push_back(std::move(r));
        }
        // Guarantee at least one inactive slot so growth always has room.
        if (params[0].mask.active() == params[0].numel()) {
            params[0].mask.clear(0);
            params[0].values[0] = 0.0;
            ref[0].active[0] = 0;
            ref[0].values[0] = 0.0;
        }

        ReallocConfig cfg;
        cfg.n_prune = 1 + int64_t(setup.next_below(8));
        cfg.tolerance = 0.05 + 0.3 * setup.next_uniform();
        cfg.initial_threshold = 1.0;
        cfg.period_schedule = {{1, 1, 1}};
        const double threshold = std::pow(10.0, -2.0 + 2.5 * setup.next_uniform());

        const uint64_t draw_seed = mix64(0xD4A30000u + uint64_t(inst));
        Rng rng_impl(draw_seed), rng_ref(draw_seed);

        ReallocState state{threshold, 0};
        const StepReport rep = realloc_step(params, state, cfg, rng_impl);
        const reference::RefResult want =
            reference::realloc_step(ref, threshold, cfg.n_prune, cfg.tolerance, rng_ref);

        auto fail_inst = [&](const std::string& what) {
            if (detail) {
                std::ostringstream os;
                os << "instance " << inst << ": " << what;
                *detail = os.str();
            }
            return false;
        };
        if (state.threshold != want.threshold_after) return fail_inst("threshold mismatch");
        if (rep.pruned_total != want.pruned_total) return fail_inst("pruned total mismatch");
        for (int l = 0; l < n_tensors; ++l) {
            if (rep.per_tensor[size_t(l)].pruned != want.pruned[size_t(l)])
                return fail_inst("K_l mismatch");
            if (rep.per_tensor[size_t(l)].survived != want.survived[size_t(l)])
                return fail_inst("R_l mismatch");
            if (rep.per_tensor[size_t(l)].grown != want.grown[size_t(l)])
                return fail_inst("G_l mismatch");
            const MaskedTensor& t = params[size_t(l)];
            for (int64_t i = 0; i < t.numel(); ++i) {
                if (t.mask.test(i) != (want.tensors[size_t(l)].active[size_t(i)] != 0))
                    return fail_inst("mask mismatch");
                if (t.values[i] != want.tensors[size_t(l)].values[size_t(i)])
                    return fail_inst("value mismatch");
            }
        }
    }
    if (detail) *detail = std::to_string(instances) + " randomized instances";
    return true;
}

bool check_conservation(int64_t steps, std::string* detail) {
    const int64_t runs = 20;
    const int64_t steps_per_run = steps / runs;
    for (int64_t r = 0; r < runs; ++r) {
        Rng rng(mix64(0xC0A5E000u + uint64_t(r)));
        std::vector<MaskedTensor> params;
        const int n_tensors = 2 + int(rng.next_below(4));
        for (int l = 0; l < n_tensors; ++l)
            params.push_back(random_masked("t" + std::to_string(l),
                                           50 + int64_t(rng.next_below(350)), 0.5, rng));
        int64_t active_total = 0;
        for (const auto& p : params) active_total += p.active_count();

        ReallocConfig cfg;
        cfg.n_prune = std::max<int64_t>(1, active_total / 20);
        cfg.tolerance = 0.1;
        cfg.initial_threshold = 0.5;
        cfg.period_schedule = {{1, 1, 1}};
        ReallocState state = ReallocState::initial(cfg);

        for (int64_t s = 0; s < steps_per_run; ++s) {
            // Fresh magnitudes at the active positions, zeros stay zero.
            for (auto& p : params)
                for (int64_t i = 0; i < p.numel(); ++i)
                    if (p.mask.test(i)) p.values[i] = rng.next_normal();
            realloc_step(params, state, cfg, rng);

            int64_t now = 0;
            for (const auto& p : params) {
                if (!p.consistent()) {
                    if (detail) *detail = "mask/value inconsistency in run " + std::to_string(r);
                    return false;
                }
                now += p.active_count();
            }
            if (now != active_total) {
                if (detail)
                    *detail = "active count drifted: " + std::to_string(active_total) + " -> " +
                              std::to_string(now);
                return false;
            }
        }
    }
    if (detail) *detail = std::to_string(runs * steps_per_run) + " steps conserved exactly";
    return true;
}

bool check_setpoint(std::string* detail) {
    // Stationary magnitude distribution: log-uniform over [1e-8, 1]. The
    // active count and starting threshold put the setpoint walk on a grid
    // that lands on N_p; entry must happen within 30 steps and the pruned
    // count must stay in the tolerance band >= 90% of the next 100 steps.
    const int64_t n_prune = 600;
    const double tolerance = 0.1;
    const double lo = (1.0 - tolerance) * double(n_prune);
    const double hi = (1.0 + tolerance) * double(n_prune);
    const double decades = 8.0;
    const int64_t active_total = 1993;  // ~75 pruned per threshold doubling
    const double h0 = std::pow(10.0, decades * 1350.0 / double(active_total) - decades);

    for (uint64_t seed = 1; seed <= 3; ++seed) {
        Rng rng(mix64(0x5E79017Bu * seed));
        std::vector<MaskedTensor> params;
        const int64_t dense_sizes[3] = {1600, 1600, 786};
        const int64_t active_sizes[3] = {800, 800, 393};
        for (int l = 0; l < 3; ++l) {
            MaskedTensor t("t" + std::to_string(l), {dense_sizes[l]}, true);
            t.mask = Bitmask(dense_sizes[l], false);
            for (int64_t i = 0; i < active_sizes[l]; ++i) t.mask.set(i);
            params.push_back(std::move(t));
        }

        ReallocConfig cfg;
        cfg.n_prune = n_prune;
        cfg.tolerance = tolerance;
        cfg.initial_threshold = h0;
        cfg.period_schedule = {{1, 1, 1}};
        ReallocState state = ReallocState::initial(cfg);

        auto resample = [&]() {
            for (auto& p : params)
                for (int64_t i = 0; i < p.numel(); ++i)
                    if (p.mask.test(i))
                        p.values[i] = rng.next_sign() *
                                      std::pow(10.0, -decades * rng.next_uniform());
        };

        int64_t entered_at = -1;
        for (int64_t s = 1; s <= 30; ++s) {
            resample();
            const StepReport rep = realloc_step(params, state, cfg, rng);
            if (double(rep.pruned_total) >= lo && double(rep.pruned_total) <= hi) {
                entered_at = s;
                break;
            }
        }
        if (entered_at < 0) {
            if (detail) *detail = "seed " + std::to_string(seed) + ": no band entry in 30 steps";
            return false;
        }
        int in_band = 0;
        for (int64_t s = 0; s < 100; ++s) {
            resample();
            const StepReport rep = realloc_step(params, state, cfg, rng);
            if (double(rep.pruned_total) >= lo && double(rep.pruned_total) <= hi) ++in_band;
        }
        if (in_band < 90) {
            if (detail)
                *detail = "seed " + std::to_string(seed) + ": only " + std::to_string(in_band) +
                          "/100 steps in band (entered at " + std::to_string(entered_at) + ")";
            return false;
        }
        if (detail)
            *detail = "entered band at step " + std::to_string(entered_at) + ", " +
                      std::to_string(in_band) + "/100 in band";
    }
    return true;
}

namespace {

double loss_of(Model& m, const Tensor& batch, const std::vector<int>& labels) {
    const Tensor logits = forward(m, batch, nullptr, true);
    return softmax_cross_entropy_loss(logits, labels, nullptr);
}

// Central finite differences over every parameter entry.
bool fd_check_model(Model& m, const Tensor& batch, const std::vector<int>& labels, double tol,
                    double* worst) {
    ForwardCache cache;
    const Tensor logits = forward(m, batch, &cache, true);
    Tensor dlogits;
    softmax_cross_entropy_loss(logits, labels, &dlogits);
    const std::vector<Tensor> grads = backward(m, cache, dlogits);

    const double h = 1e-5;
    for (size_t pi = 0; pi < m.params.size(); ++pi) {
        Tensor& vals = m.params[pi].values;
        for (int64_t i = 0; i < vals.numel(); ++i) {
            const double keep = vals[i];
            vals[i] = keep + h;
            const double lp = loss_of(m, batch, labels);
            vals[i] = keep - h;
            const double lm = loss_of(m, batch, labels);
            vals[i] = keep;
            const double numeric = (lp - lm) / (2.0 * h);
            const double analytic = grads[pi][i];
            const double err = std::fabs(numeric - analytic) /
                               std::max({1.0, std::fabs(numeric), std::fabs(analytic)});
            if (worst) *worst = std::max(*worst, err);
            if (err >= tol) return false;
        }
    }
    return true;
}

} // namespace

bool check_gradients(int instances_per_layer, std::string* detail) {
    const double tol = 1e-4;
    double worst = 0.0;

    struct Case {
        const char* name;
        NetworkSpec spec;
    };
    std::vector<Case> cases;
    {
        NetworkSpec s;
        s.name = "linear";
        s.input_shape = {5};
        s.layers = {LayerSpec::linear(5, 4, false), LayerSpec::softmax_cross_entropy()};
        cases.push_back({"linear", s});
    }
    {
        NetworkSpec s;
        s.name = "relu_mlp";
        s.input_shape = {6};
        s.layers = {LayerSpec::linear(6, 8, false), LayerSpec::relu(),
                    LayerSpec::linear(8, 4, false), LayerSpec::softmax_cross_entropy()};
        cases.push_back({"relu", s});
    }
    {
        NetworkSpec s;
        s.name = "bn_mlp";
        s.input_shape = {5};
        s.layers = {LayerSpec::linear(5, 6, false), LayerSpec::batchnorm(6), LayerSpec::relu(),
                    LayerSpec::linear(6, 3, false), LayerSpec::softmax_cross_entropy()};
        cases.push_back({"batchnorm2d", s});
    }
    {
        NetworkSpec s;
        s.name = "conv_s1";
        s.input_shape = {2, 5, 5};
        s.layers = {LayerSpec::conv3x3(2, 3, 1, false), LayerSpec::global_avg_pool(),
                    LayerSpec::softmax_cross_entropy()};
        cases.push_back({"conv3x3_s1+gap", s});
    }
    {
        NetworkSpec s;
        s.name = "conv_s2_bn";
        s.input_shape = {2, 6, 6};
        s.layers = {LayerSpec::conv3x3(2, 4, 2, false), LayerSpec::batchnorm(4), LayerSpec::relu(),
                    LayerSpec::conv3x3(4, 3, 1, false), LayerSpec::global_avg_pool(),
                    LayerSpec::softmax_cross_entropy()};
        cases.push_back({"conv3x3_s2+batchnorm4d", s});
    }

    for (const auto& c : cases) {
        for (int inst = 0; inst < instances_per_layer; ++inst) {
            Rng rng(mix64(0x6AD0000u + uint64_t(inst) * 131 + uint64_t(&c - cases.data())));
            Model m = Model::build(c.spec);
            m.init_params(rng);
            // Random batch and labels.
            std::vector<int64_t> bshape = {3};
            for (int64_t e : c.spec.input_shape) bshape.push_back(e);
            Tensor batch(bshape);
            for (auto& v : batch.data) v = rng.next_normal();
            const int64_t classes = c.spec.num_classes();
            std::vector<int> labels(3);
            for (auto& l : labels) l = int(rng.next_below(uint64_t(classes)));
            if (!fd_check_model(m, batch, labels, tol, &worst)) {
                if (detail)
                    *detail = std::string(c.name) + " instance " + std::to_string(inst) +
                              " exceeded tolerance (worst " + std::to_string(worst) + ")";
                return false;
            }
        }
    }

    // HashedNet shared-parameter layer: finite differences on the unique
    // parameters against the gathered dense gradient.
    for (int inst = 0; inst < instances_per_layer; ++inst) {
        Rng rng(mix64(0x4A54Eu + uint64_t(inst)));
        NetworkSpec s;
        s.name = "hashed_linear";
        s.input_shape = {6};
        s.layers = {LayerSpec::linear(6, 5, true), LayerSpec::softmax_cross_entropy()};
        Model m = Model::build(s);
        m.init_params(rng);
        HashedConfig hc{rng.next_u64()};
        std::vector<HashedTensor> hs = build_hashed_tensors(m, 0.6, hc);
        HashedTensor& ht = hs[0];

        Tensor batch({3, 6});
        for (auto& v : batch.data) v = rng.next_normal();
        std::vector<int> labels(3);
        for (auto& l : labels) l = int(rng.next_below(5));

        auto hashed_loss = [&]() {
            ht.expand_into(m.params[size_t(ht.param_index)].values);
            return loss_of(m, batch, labels);
        };
        ht.expand_into(m.params[size_t(ht.param_index)].values);
        ForwardCache cache;
        const Tensor logits = forward(m, batch, &cache, true);
        Tensor dlogits;
        softmax_cross_entropy_loss(logits, labels, &dlogits);
        const std::vector<Tensor> grads = backward(m, cache, dlogits);
        const Tensor du = ht.gather_gradient(grads[size_t(ht.param_index)]);

        const double h = 1e-5;
        for (int64_t i = 0; i < ht.unique_count; ++i) {
            const double keep = ht.unique[i];
            ht.unique[i] = keep + h;
            const double lp = hashed_loss();
            ht.unique[i] = keep - h;
            const double lm = hashed_loss();
            ht.unique[i] = keep;
            const double numeric = (lp - lm) / (2.0 * h);
            const double err = std::fabs(numeric - du[i]) /
                               std::max({1.0, std::fabs(numeric), std::fabs(du[i])});
            worst = std::max(worst, err);
            if (err >= tol) {
                if (detail)
                    *detail = "hashed instance " + std::to_string(inst) + " exceeded tolerance";
                return false;
            }
        }
        ht.expand_into(m.params[size_t(ht.param_index)].values);
    }

    if (detail) {
        std::ostringstream os;
        os << cases.size() + 1 << " layer cases x " << instances_per_layer
           << " instances, worst rel err " << worst;
        *detail = os.str();
    }
    return true;
}

bool check_zero_growth_noop(std::string* detail) {
    Rng rng(mix64(0x2E80u));
    NetworkSpec spec = build_network("mlp:8-16-4");
    Model m = Model::build(spec);
    m.init_params(rng);
    sample_sparse_masks(m.params, 0.5, rng);

    Tensor batch({4, 8});
    for (auto& v : batch.data) v = rng.next_normal();

    // Threshold below every active magnitude: nothing prunes, nothing grows.
    double min_mag = 1e300;
    for (const auto& p : m.params)
        if (p.sparse)
            for (int64_t i = 0; i < p.numel(); ++i)
                if (p.mask.test(i) && p.values[i] != 0.0)
                    min_mag = std::min(min_mag, std::fabs(p.values[i]));

    const Tensor before = forward(m, batch, nullptr, false);
    ReallocConfig cfg;
    cfg.n_prune = 10;
    cfg.tolerance = 0.1;
    cfg.initial_threshold = min_mag / 2.0;
    cfg.period_schedule = {{1, 1, 1}};
    ReallocState state = ReallocState::initial(cfg);
    const StepReport rep = realloc_step(m.params, state, cfg, rng);
    const Tensor after = forward(m, batch, nullptr, false);

    if (rep.pruned_total != 0 || rep.grown_total != 0) {
        if (detail) *detail = "sub-threshold step pruned something";
        return false;
    }
    if (std::memcmp(before.ptr(), after.ptr(), sizeof(double) * size_t(before.numel())) != 0) {
        if (detail) *detail = "forward outputs changed after a no-op step";
        return false;
    }

    // Growth contributes nothing: forward after prune+grow equals forward
    // after prune alone, bit for bit.
    ReallocConfig cfg2 = cfg;
    cfg2.initial_threshold = min_mag * 3.0;
    ReallocState s2 = ReallocState::initial(cfg2);
    std::vector<MaskedTensor> pruned_only;
    for (const auto& p : m.params) pruned_only.push_back(p);
    for (auto& p : pruned_only)
        if (p.sparse) prune_by_threshold(p, cfg2.initial_threshold);
    Model m2 = Model::build(spec);
    m2.params = pruned_only;
    const Tensor after_prune = forward(m2, batch, nullptr, false);

    realloc_step(m.params, s2, cfg2, rng);
    const Tensor after_step = forward(m, batch, nullptr, false);
    if (std::memcmp(after_prune.ptr(), after_step.ptr(),
                    sizeof(double) * size_t(after_prune.numel())) != 0) {
        if (detail) *detail = "zero-initialized growth changed the forward output";
        return false;
    }
    if (detail) *detail = "bit-identical forward outputs";
    return true;
}

bool check_compression_schedule(std::string* detail) {
    CompressionSchedule cs;
    cs.pruning_iterations = 20;
    cs.epochs_between = 2;
    cs.epochs_post = 10;
    cs.target_sparsity = 0.9;
    cs.validate();
    if (cs.sparsity_at(0) != 0.0) {
        if (detail) *detail = "schedule does not start dense";
        return false;
    }
    if (std::fabs(cs.sparsity_at(20) - 0.9) > 1e-12) {
        if (detail) *detail = "schedule does not end at the target";
        return false;
    }
    if (std::fabs(cs.sparsity_at(10) - 0.7875) > 1e-12) {
        if (detail) *detail = "cubic ramp value at t=10 is wrong";
        return false;
    }
    for (int64_t t = 1; t <= 20; ++t)
        if (cs.sparsity_at(t) < cs.sparsity_at(t - 1)) {
            if (detail) *detail = "schedule is not monotone";
            return false;
        }

    // Event exactness on a desk-scale run.
    RunConfig cfg;
    cfg.method = Method::compressed_sparse;
    cfg.net = "mlp:16-24-4";
    cfg.dataset = "synthetic";
    cfg.synthetic = {256, 16, 4, 3.0};
    cfg.sparsity = 0.8;
    cfg.epochs = 1;
    cfg.batch_size = 32;
    cfg.lr_schedule = {{1, 1, 0.05}};
    cfg.momentum = 0.9;
    cfg.seed = 7;
    CompressionSchedule mini;
    mini.pruning_iterations = 4;
    mini.epochs_between = 1;
    mini.epochs_post = 1;
    cfg.compression = mini;
    cfg.compression_lr = {{1, 5, 0.01}};
    cfg.out_dir = "/tmp/sparsetrain_verify";
    cfg.run_id = "verify_compress";
    cfg.eval_every = 0;
    const RunResult res = train(cfg);

    // Per-epoch sparsity rows must hit the schedule exactly at each event.
    const auto rows = read_csv(res.run_dir + "/metrics.csv");
    size_t scol = 0;
    for (size_t c = 0; c < rows[0].size(); ++c)
        if (rows[0][c] == "global_sparsity") scol = c;
    const int64_t n_sparse = 16 * 24 + 24 * 4;  // dense positions of sparse tensors
    mini.target_sparsity = cfg.sparsity;
    for (int64_t t = 1; t <= mini.pruning_iterations; ++t) {
        const int64_t epoch = cfg.epochs + 1 + (t - 1) * mini.epochs_between;
        const double want =
            1.0 - double(std::llround((1.0 - mini.sparsity_at(t)) * double(n_sparse))) /
                      double(n_sparse);
        const double got = std::stod(rows[size_t(epoch)][scol]);
        if (got != want) {
            if (detail)
                *detail = "event " + std::to_string(t) + ": sparsity " + std::to_string(got) +
                          " != scheduled " + std::to_string(want);
            return false;
        }
    }
    const double final_s = std::stod(rows.back()[scol]);
    if (std::fabs(final_s - cfg.sparsity) > 1.0 / double(n_sparse)) {
        if (detail) *detail = "final sparsity misses the target beyond 1/N";
        return false;
    }
    if (detail) *detail = "all events exact, final within 1/N";
    return true;
}

VerifyOutcome run_verify_suites(const VerifyReporter& report) {
    VerifyOutcome out;
    auto run = [&](const std::string& name, bool (*fn)(std::string*)) {
        std::string detail;
        const bool ok = fn(&detail);
        ++out.checks_run;
        if (!ok) ++out.failures;
        if (report) report(name, ok, detail);
    };
    {
        std::string detail;
        const bool ok = check_realloc_oracle(200, &detail);
        ++out.checks_run;
        if (!ok) ++out.failures;
        if (report) report("realloc-oracle-equivalence", ok, detail);
    }
    {
        std::string detail;
        const bool ok = check_conservation(1000, &detail);
        ++out.checks_run;
        if (!ok) ++out.failures;
        if (report) report("conservation", ok, detail);
    }
    run("setpoint-control", check_setpoint);
    {
        std::string detail;
        const bool ok = check_gradients(50, &detail);
        ++out.checks_run;
        if (!ok) ++out.failures;
        if (report) report("gradient-checks", ok, detail);
    }
    run("zero-growth-noop", check_zero_growth_noop);
    run("compression-schedule", check_compression_schedule);
    return out;
}

} // namespace sparsetrain
