// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "checkpoint.hpp"
#include "config.hpp"
#include "error.hpp"
#include "experiments.hpp"
#include "metrics.hpp"
#include "train.hpp"

using namespace sparsetrain;
namespace fs = std::filesystem;

namespace {

std::string sandbox(const std::string& leaf) {
    const auto p = fs::temp_directory_path() / "sparsetrain_harness" / leaf;
    fs::create_directories(p);
    return p.string();
}

RunConfig tiny_dynamic(const std::string& out_leaf) {
    RunConfig cfg;
    cfg.method = Method::dynamic_sparse;
    cfg.net = "mlp:16-32-16-4";
    cfg.dataset = "synthetic";
    cfg.synthetic = {512, 16, 4, 2.0};
    cfg.sparsity = 0.9;
    cfg.epochs = 5;
    cfg.batch_size = 64;
    cfg.lr_schedule = {{1, 5, 0.1}};
    cfg.momentum = 0.9;
    cfg.l1 = 1e-4;
    cfg.seed = 21;
    ReallocConfig rc;
    rc.n_prune = 20;
    rc.tolerance = 0.1;
    rc.initial_threshold = 1e-3;
    rc.period_schedule = {{1, 5, 4}};
    cfg.realloc = rc;
    cfg.out_dir = sandbox(out_leaf);
    cfg.eval_every = 1;
    return cfg;
}

} // namespace

TEST_CASE("config schema validation") {
    const std::string good = R"({
        "method": "dynamic_sparse", "net": "mlp:8-4", "dataset": "synthetic",
        "sparsity": 0.5, "epochs": 4, "batch_size": 16,
        "lr_schedule": [[1,2,0.1],[3,4,0.01]], "seed": 3,
        "realloc": {"n_prune": 5, "tolerance": 0.1, "initial_threshold": 0.001,
                     "period_schedule": [[1,4,10]]}
    })";
    CHECK_NOTHROW(RunConfig::from_json_text(good));

    SUBCASE("unknown keys are rejected") {
        std::string bad = good;
        bad.insert(bad.rfind('}'), R"(, "learning_rate": 0.1)");
        CHECK_THROWS_WITH_AS(RunConfig::from_json_text(bad), doctest::Contains("unknown key"),
                             Error);
    }
    SUBCASE("lr ranges must tile the epochs") {
        std::string bad = good;
        bad.replace(bad.find("[[1,2,0.1],[3,4,0.01]]"), 22, "[[1,2,0.1],[4,4,0.01]]");
        CHECK_THROWS_AS(RunConfig::from_json_text(bad), Error);
    }
    SUBCASE("method-specific section must match the method") {
        std::string missing = good;
        missing.replace(missing.find("dynamic_sparse"), 14, "static_sparse");
        CHECK_THROWS_WITH_AS(RunConfig::from_json_text(missing), doctest::Contains("realloc"),
                             Error);
    }
    SUBCASE("deepr section on a non-deepr method is rejected") {
        std::string extra = good;
        extra.insert(extra.rfind('}'),
                     R"(, "deepr": {"alpha": 1e-4, "temperature_schedule": [[1,4,1e-3]]})");
        CHECK_THROWS_AS(RunConfig::from_json_text(extra), Error);
    }
    SUBCASE("shipped presets parse") {
        for (const char* name :
             {"mnist_dynamic.json", "mnist_set.json", "mnist_static.json", "mnist_deepr.json",
              "mnist_compressed.json", "mnist_thin_dense.json", "mnist_hashed.json"}) {
            const std::string path = std::string(SPARSETRAIN_SOURCE_DIR) + "/configs/" + name;
            CHECK_NOTHROW(RunConfig::load_file(path));
        }
    }
}

TEST_CASE("zero learning rate freezes parameters end to end") {
    RunConfig cfg = tiny_dynamic("frozen");
    cfg.method = Method::static_sparse;
    cfg.realloc.reset();
    cfg.epochs = 2;
    cfg.lr_schedule = {{1, 2, 0.0}};
    const RunResult res = train(cfg);

    const Checkpoint ck = Checkpoint::load(res.checkpoint_path);
    // Parameters equal the masked initialization: rebuild it.
    Model m = Model::build(build_network(cfg.net));
    RngStreams streams = RngStreams::from_master(cfg.seed);
    m.init_params(streams.init);
    sample_sparse_masks(m.params, cfg.sparsity, streams.init);
    for (size_t i = 0; i < m.params.size(); ++i) {
        CHECK(ck.params[i].values.data == m.params[i].values.data);
        CHECK((ck.params[i].mask == m.params[i].mask));
    }
}

TEST_CASE("dynamic run conserves logged global sparsity") {
    RunConfig cfg = tiny_dynamic("conserve");
    const RunResult res = train(cfg);
    const auto rows = read_csv(res.run_dir + "/metrics.csv");
    size_t scol = 0;
    for (size_t c = 0; c < rows[0].size(); ++c)
        if (rows[0][c] == "global_sparsity") scol = c;
    REQUIRE(rows.size() == size_t(cfg.epochs) + 1);
    // N for this net: 16*32 + 32*16 + 16*4 = 1088.
    for (size_t r = 1; r < rows.size(); ++r)
        CHECK(std::fabs(std::stod(rows[r][scol]) - 0.9) <= 1.0 / 1088.0);
    // realloc.csv carries the step rows
    const auto steps = read_csv(res.run_dir + "/realloc.csv");
    CHECK(steps.size() > 1);
}

TEST_CASE("identical seed and config give identical trajectories") {
    RunConfig a = tiny_dynamic("det_a");
    RunConfig b = tiny_dynamic("det_b");
    const RunResult ra = train(a);
    const RunResult rb = train(b);
    const Checkpoint ca = Checkpoint::load(ra.checkpoint_path);
    const Checkpoint cb = Checkpoint::load(rb.checkpoint_path);
    for (size_t i = 0; i < ca.params.size(); ++i) {
        CHECK(ca.params[i].values.data == cb.params[i].values.data);
        CHECK((ca.params[i].mask == cb.params[i].mask));
    }
    CHECK(ra.final_test_accuracy == rb.final_test_accuracy);
}

TEST_CASE("checkpoint resume reproduces uninterrupted training bit-exactly") {
    // Full run in one go.
    RunConfig whole = tiny_dynamic("resume_whole");
    const RunResult rw = train(whole);

    // Same run, interrupted after 2 epochs then resumed.
    RunConfig part = tiny_dynamic("resume_part");
    part.epochs = 2;
    // Same nominal schedules as the 5-epoch run so the trajectories align.
    part.lr_schedule = {{1, 2, 0.1}};
    part.realloc->period_schedule = {{1, 2, 4}};
    const RunResult rp = train(part);

    // Rewrite the planned epochs in the stored config, then resume.
    {
        const Checkpoint ck = Checkpoint::load(rp.checkpoint_path);
        RunConfig cont = RunConfig::from_json_text(ck.config_json);
        cont.epochs = 5;
        cont.lr_schedule = {{1, 5, 0.1}};
        cont.realloc->period_schedule = {{1, 5, 4}};
        Checkpoint patched = ck;
        patched.config_json = cont.to_json_text();
        patched.save(rp.run_dir + "/checkpoint.bin");
    }
    const RunResult rr = resume(rp.run_dir);

    const Checkpoint cw = Checkpoint::load(rw.checkpoint_path);
    const Checkpoint cr = Checkpoint::load(rr.checkpoint_path);
    REQUIRE(cw.params.size() == cr.params.size());
    for (size_t i = 0; i < cw.params.size(); ++i) {
        CHECK(cw.params[i].values.data == cr.params[i].values.data);
        CHECK((cw.params[i].mask == cr.params[i].mask));
    }
    CHECK(cw.realloc_state.threshold == cr.realloc_state.threshold);
}

TEST_CASE("masked tensor checkpoint records round-trip") {
    Checkpoint ck;
    ck.config_json = "{}";
    MaskedTensor t("w", {3, 3}, true);
    Rng rng(2);
    for (int64_t i = 0; i < 9; ++i) t.values[i] = rng.next_normal();
    t.mask.clear(4);
    t.values[4] = 0.0;
    ck.params.push_back(t);
    const std::string path = sandbox("ckpt") + "/t.bin";
    ck.save(path);
    const Checkpoint back = Checkpoint::load(path);
    CHECK(back.params[0].values.data == t.values.data);
    CHECK((back.params[0].mask == t.mask));
    CHECK(back.params[0].sparse == t.sparse);
}

TEST_CASE("lottery tickets replay the source mask") {
    RunConfig cfg = tiny_dynamic("ticket_src");
    const RunResult src = train(cfg);
    const Checkpoint source = Checkpoint::load(src.checkpoint_path);

    SUBCASE("zero-epoch ticket scores the masked initialization") {
        TicketOptions opt;
        opt.source_run_dir = src.run_dir;
        opt.fresh_random_init = false;
        opt.epochs_override = 0;
        opt.seed = 77;
        const RunResult res = run_ticket(opt);
        // Manual reconstruction: original dense init under the final mask.
        Model m = Model::build(build_network(cfg.net));
        for (size_t i = 0; i < m.params.size(); ++i) {
            m.params[i].values = source.init_snapshot[i];
            m.params[i].mask = source.params[i].mask;
            m.params[i].apply_mask();
        }
        Dataset test = load_test_split(cfg);
        const double manual = evaluate(m, test, cfg.batch_size);
        CHECK(res.final_test_accuracy == doctest::Approx(manual));
    }

    SUBCASE("trained ticket keeps the mask frozen and matches source actives") {
        TicketOptions opt;
        opt.source_run_dir = src.run_dir;
        opt.fresh_random_init = true;
        opt.seed = 78;
        opt.out_dir = sandbox("ticket_out");
        const RunResult res = run_ticket(opt);
        CHECK(res.epochs_run == 2 * cfg.epochs);
        const Checkpoint fin = Checkpoint::load(res.checkpoint_path);
        for (size_t i = 0; i < fin.params.size(); ++i)
            CHECK((fin.params[i].mask == source.params[i].mask));
    }
}

TEST_CASE("early stopping sweep endpoints") {
    RunConfig base = tiny_dynamic("earlystop");
    base.run_id = "es_base";
    const RunResult full = train(base);

    RunConfig sweep_base = base;
    sweep_base.run_id.clear();
    const auto rows = run_earlystop_sweep(sweep_base, {0, 5});
    REQUIRE(rows.size() == 2);
    // stop at 0: never reallocates -> mask equals the initial mask
    {
        const Checkpoint ck = Checkpoint::load(rows[0].run_dir + "/checkpoint.bin");
        Model m = Model::build(build_network(base.net));
        RngStreams streams = RngStreams::from_master(base.seed);
        m.init_params(streams.init);
        sample_sparse_masks(m.params, base.sparsity, streams.init);
        for (size_t i = 0; i < m.params.size(); ++i)
            CHECK((ck.params[i].mask == m.params[i].mask));
    }
    // stop at the final epoch: identical to the plain dynamic run
    CHECK(rows[1].test_accuracy == doctest::Approx(full.final_test_accuracy));
    CHECK(fs::exists(fs::path(base.out_dir) / "earlystop.csv"));
}

TEST_CASE("report renders csv and svg artifacts") {
    RunConfig cfg = tiny_dynamic("report_src");
    cfg.run_id = "report_run";
    const RunResult res = train(cfg);

    const std::string out = sandbox("report_out");
    CHECK_THROWS_AS(write_report({}, out), Error);
    write_report({res.run_dir}, out);
    CHECK(fs::exists(fs::path(out) / "accuracy_vs_params.csv"));
    CHECK(fs::exists(fs::path(out) / "accuracy_vs_params.svg"));
    CHECK(fs::exists(fs::path(out) / "layer_sparsity.csv"));
    CHECK(fs::exists(fs::path(out) / "layer_sparsity.svg"));
    CHECK(fs::exists(fs::path(out) / "sizing.csv"));

    const auto rows = read_csv((fs::path(out) / "accuracy_vs_params.csv").string());
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][0] == "report_run");
    // param count includes dense tensors (biases): nonzeros + 52 here
    const int64_t count = std::stoll(rows[1][3]);
    CHECK(count > 0);
    CHECK(count == res.nonzero_param_count);
}

TEST_CASE("divergence aborts with a numeric diagnostic") {
    RunConfig cfg = tiny_dynamic("diverge");
    cfg.method = Method::static_sparse;
    cfg.realloc.reset();
    cfg.epochs = 3;
    cfg.lr_schedule = {{1, 3, 1e6}};  // blow up
    CHECK_THROWS_AS(train(cfg), Error);
}
