// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line harness. Talks to the engine exclusively through the C API
// in sparsetrain/sparsetrain.h.

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "sparsetrain/sparsetrain.h"

namespace {

int die(const char* what, st_status rc) {
    std::fprintf(stderr, "error (%s, status %d): %s\n", what, int(rc), st_last_error());
    return 1;
}

struct ConfigArgs {
    std::string config_path;
    std::string seed, method, sparsity, epochs, data_dir, out_dir, run_id, net, dataset;
    bool quiet = false;

    void attach(CLI::App* cmd, bool require_config = true) {
        auto* opt = cmd->add_option("--config", config_path, "run config JSON file");
        if (require_config) opt->required();
        cmd->add_option("--seed", seed, "master seed override");
        cmd->add_option("--method", method, "method override");
        cmd->add_option("--sparsity", sparsity, "global sparsity override");
        cmd->add_option("--epochs", epochs, "epoch count override");
        cmd->add_option("--data-dir", data_dir, "dataset directory (or SPARSETRAIN_DATA_DIR)");
        cmd->add_option("--out-dir", out_dir, "output directory for runs");
        cmd->add_option("--run-id", run_id, "run identifier override");
        cmd->add_option("--net", net, "network override");
        cmd->add_option("--dataset", dataset, "dataset override");
        cmd->add_flag("--quiet", quiet, "suppress per-epoch progress");
    }

    st_config* build() const {
        st_config* cfg = nullptr;
        if (st_status rc = st_config_load(config_path.c_str(), &cfg); rc != ST_OK) {
            die("loading config", rc);
            return nullptr;
        }
        auto apply = [&](const char* key, const std::string& v) {
            if (v.empty()) return true;
            if (st_status rc = st_config_override(cfg, key, v.c_str()); rc != ST_OK) {
                die("applying override", rc);
                st_config_free(cfg);
                return false;
            }
            return true;
        };
        if (!apply("seed", seed) || !apply("method", method) || !apply("sparsity", sparsity) ||
            !apply("epochs", epochs) || !apply("data_dir", data_dir) ||
            !apply("out_dir", out_dir) || !apply("run_id", run_id) || !apply("net", net) ||
            !apply("dataset", dataset))
            return nullptr;
        if (!quiet && !apply("verbose", "1")) return nullptr;
        return cfg;
    }
};

int print_run(st_run* run) {
    size_t need = 0;
    st_run_summary_json(run, nullptr, 0, &need);
    std::string buf(need, '\0');
    st_run_summary_json(run, buf.data(), buf.size(), nullptr);
    std::printf("%s", buf.c_str());
    st_run_free(run);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparsetrain: dynamic sparse reparameterization training engine"};
    app.require_subcommand(1);

    ConfigArgs train_args, compress_args, earlystop_args, overhead_args;
    std::string ticket_source, ticket_out_dir, ticket_init = "original";
    uint64_t ticket_seed = 1;
    std::vector<int64_t> stop_epochs;
    int64_t overhead_epochs = 12;
    std::vector<std::string> report_runs;
    std::string report_out = "report";
    std::string resume_dir;

    auto* cmd_train = app.add_subcommand("train", "train one configuration");
    train_args.attach(cmd_train);

    auto* cmd_resume = app.add_subcommand("resume", "continue an interrupted run");
    cmd_resume->add_option("run_dir", resume_dir, "run directory with checkpoint.bin")->required();

    auto* cmd_ticket = app.add_subcommand("ticket", "lottery-ticket replay of a finished run");
    cmd_ticket->add_option("--source", ticket_source, "source run directory")->required();
    cmd_ticket->add_option("--init", ticket_init, "original | fresh")
        ->check(CLI::IsMember({"original", "fresh"}));
    cmd_ticket->add_option("--seed", ticket_seed, "seed for the replay run");
    cmd_ticket->add_option("--out-dir", ticket_out_dir, "output directory");

    auto* cmd_earlystop = app.add_subcommand("earlystop", "sweep reallocation stop epochs");
    earlystop_args.attach(cmd_earlystop);
    cmd_earlystop->add_option("--stop-epochs", stop_epochs, "stop epochs to sweep")->required();

    auto* cmd_overhead = app.add_subcommand("overhead", "wall-clock overhead vs no reallocation");
    overhead_args.attach(cmd_overhead);
    cmd_overhead->add_option("--epochs", overhead_epochs, "timed epochs per method (>= 10)");

    auto* cmd_compress = app.add_subcommand("compress", "dense pretrain + iterative pruning");
    compress_args.attach(cmd_compress);

    auto* cmd_report = app.add_subcommand("report", "render CSV/SVG artifacts from runs");
    cmd_report->add_option("runs", report_runs, "run directories")->required();
    cmd_report->add_option("--out-dir", report_out, "report output directory");

    auto* cmd_verify = app.add_subcommand("verify", "run the invariant and oracle suites");

    CLI11_PARSE(app, argc, argv);

    if (cmd_train->parsed()) {
        st_config* cfg = train_args.build();
        if (!cfg) return 1;
        st_run* run = nullptr;
        const st_status rc = st_train(cfg, &run);
        st_config_free(cfg);
        if (rc != ST_OK) return die("train", rc);
        return print_run(run);
    }
    if (cmd_resume->parsed()) {
        st_run* run = nullptr;
        const st_status rc = st_resume(resume_dir.c_str(), &run);
        if (rc != ST_OK) return die("resume", rc);
        return print_run(run);
    }
    if (cmd_ticket->parsed()) {
        st_run* run = nullptr;
        const st_status rc =
            st_ticket(ticket_source.c_str(), ticket_init == "fresh" ? 1 : 0, ticket_seed,
                      ticket_out_dir.empty() ? nullptr : ticket_out_dir.c_str(), &run);
        if (rc != ST_OK) return die("ticket", rc);
        return print_run(run);
    }
    if (cmd_earlystop->parsed()) {
        st_config* cfg = earlystop_args.build();
        if (!cfg) return 1;
        const st_status rc = st_earlystop(cfg, stop_epochs.data(), stop_epochs.size());
        st_config_free(cfg);
        if (rc != ST_OK) return die("earlystop", rc);
        std::printf("earlystop sweep complete; see earlystop.csv in the out dir\n");
        return 0;
    }
    if (cmd_overhead->parsed()) {
        st_config* cfg = overhead_args.build();
        if (!cfg) return 1;
        size_t need = 0;
        st_status rc = st_overhead(cfg, overhead_epochs, nullptr, 0, &need);
        std::string buf(need, '\0');
        if (rc == ST_OK) rc = st_overhead(cfg, overhead_epochs, buf.data(), buf.size(), nullptr);
        st_config_free(cfg);
        if (rc != ST_OK) return die("overhead", rc);
        std::printf("%s\n", buf.c_str());
        return 0;
    }
    if (cmd_compress->parsed()) {
        st_config* cfg = compress_args.build();
        if (!cfg) return 1;
        if (st_status rc = st_config_override(cfg, "method", "compressed_sparse"); rc != ST_OK) {
            st_config_free(cfg);
            return die("compress", rc);
        }
        st_run* run = nullptr;
        const st_status rc = st_train(cfg, &run);
        st_config_free(cfg);
        if (rc != ST_OK) return die("compress", rc);
        return print_run(run);
    }
    if (cmd_report->parsed()) {
        std::vector<const char*> dirs;
        for (const auto& d : report_runs) dirs.push_back(d.c_str());
        const st_status rc = st_report(dirs.data(), dirs.size(), report_out.c_str());
        if (rc != ST_OK) return die("report", rc);
        std::printf("report written to %s\n", report_out.c_str());
        return 0;
    }
    if (cmd_verify->parsed()) {
        int failures = 0;
        const st_status rc = st_verify(1, &failures);
        if (rc != ST_OK) return die("verify", rc);
        std::printf("verify: %s (%d failing)\n", failures == 0 ? "all suites passed" : "FAILURES",
                    failures);
        return failures == 0 ? 0 : 1;
    }
    return 0;
}
