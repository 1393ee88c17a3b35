// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// extern "C" surface over the C++ engine. Exceptions are caught at the
// boundary and mapped onto status codes; messages land in a thread-local
// buffer readable via st_last_error().

#include "sparsetrain/sparsetrain.h"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "config.hpp"
#include "error.hpp"
#include "experiments.hpp"
#include "train.hpp"
#include "verify.hpp"

namespace {

thread_local std::string g_last_error;

st_status status_of(const sparsetrain::Error& e) {
    using Code = sparsetrain::Error::Code;
    switch (e.code) {
        case Code::invalid_argument: return ST_ERR_INVALID_ARGUMENT;
        case Code::config: return ST_ERR_CONFIG;
        case Code::io: return ST_ERR_IO;
        case Code::data: return ST_ERR_DATA;
        case Code::numeric: return ST_ERR_NUMERIC;
        case Code::internal: return ST_ERR_INTERNAL;
    }
    return ST_ERR_INTERNAL;
}

template <typename Fn>
st_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return ST_OK;
    } catch (const sparsetrain::Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return ST_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return ST_ERR_INTERNAL;
    }
}

st_status copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
    if (needed) *needed = s.size() + 1;
    if (!buf) return ST_OK;
    if (cap < s.size() + 1) {
        g_last_error = "buffer too small";
        return ST_ERR_INVALID_ARGUMENT;
    }
    std::memcpy(buf, s.c_str(), s.size() + 1);
    return ST_OK;
}

} // namespace

struct st_config {
    sparsetrain::RunConfig cfg;
};

struct st_run {
    sparsetrain::RunResult result;
    std::string summary_json;
};

extern "C" {

const char* st_version(void) { return "sparsetrain 1.0.0"; }

const char* st_last_error(void) { return g_last_error.c_str(); }

st_status st_config_load(const char* path, st_config** out) {
    if (!path || !out) {
        g_last_error = "null argument";
        return ST_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] { *out = new st_config{sparsetrain::RunConfig::load_file(path)}; });
}

st_status st_config_parse(const char* json_text, st_config** out) {
    if (!json_text || !out) {
        g_last_error = "null argument";
        return ST_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] { *out = new st_config{sparsetrain::RunConfig::from_json_text(json_text)}; });
}

st_status st_config_override(st_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) {
        g_last_error = "null argument";
        return ST_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        cfg->cfg.override_field(key, value);
        cfg->cfg.validate();
    });
}

st_status st_config_to_json(const st_config* cfg, char* buf, size_t cap, size_t* needed) {
    if (!cfg) {
        g_last_error = "null argument";
        return ST_ERR_INVALID_ARGUMENT;
    }
    st_status rc = ST_OK;
    const st_status g = guarded([&] { rc = copy_out(cfg->cfg.to_json_text(), buf, cap, needed); });
    return g != ST_OK ? g : rc;
}

void st_config_free(st_config* cfg) { delete cfg; }

st_status st_train(const st_config* cfg, st_run** out) {
    if (!cfg || !out) {
        g_last_error = "null argument";
        return ST_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        auto* r = new st_run{sparsetrain::train(cfg->cfg), {}};
        std::ifstream f(r->result.run_dir + "/summary.json");
        std::stringstream ss;
        ss << f.rdbuf();
        r->summary_json = ss.str();
        *out = r;
    });
}

st_status st_resume(const char* run_dir, st_run** out) {
    if (!run_dir || !out) {
        g_last_error = "null argument";
        return ST_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        auto* r = new st_run{sparsetrain::resume(run_dir), {}};
        std::ifstream f(r->result.run_dir + "/summary.json");
        std::stringstream ss;
        ss << f.rdbuf();
        r->summary_json = ss.str();
        *out = r;
    });
}

st_status st_run_dir(const st_run* run, char* buf, size_t cap, size_t* needed) {
    if (!run) {
        g_last_error = "null argument";
        return ST_ERR_INVALID_ARGUMENT;
    }
    return copy_out(run->result.run_dir, buf, cap, needed);
}

st_status st_run_summary_json(const st_run* run, char* buf, size_t cap, size_t* needed) {
    if (!run) {
        g_last_error = "null argument";
        return ST_ERR_INVALID_ARGUMENT;
    }
    return copy_out(run->summary_json, buf, cap, needed);
}

st_status st_run_final_accuracy(const st_run* run, double* out) {
    if (!run || !out) {
        g_last_error = "null argument";
        return ST_ERR_INVALID_ARGUMENT;
    }
    *out = run->result.final_test_accuracy;
    return ST_OK;
}

st_status st_run_final_sparsity(const st_run* run, double* out) {
    if (!run || !out) {
        g_last_error = "null argument";
        return ST_ERR_INVALID_ARGUMENT;
    }
    *out = run->result.final_global_sparsity;
    return ST_OK;
}

void st_run_free(st_run* run) { delete run; }

st_status st_ticket(const char* source_run_dir, int fresh_random_init, uint64_t seed,
                    const char* out_dir, st_run** out) {
    if (!source_run_dir || !out) {
        g_last_error = "null argument";
        return ST_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        sparsetrain::TicketOptions opt;
        opt.source_run_dir = source_run_dir;
        opt.fresh_random_init = fresh_random_init != 0;
        opt.seed = seed;
        if (out_dir) opt.out_dir = out_dir;
        auto* r = new st_run{sparsetrain::run_ticket(opt), {}};
        std::ifstream f(r->result.run_dir + "/summary.json");
        std::stringstream ss;
        ss << f.rdbuf();
        r->summary_json = ss.str();
        *out = r;
    });
}

st_status st_earlystop(const st_config* cfg, const int64_t* stop_epochs, size_t n_stop_epochs) {
    if (!cfg || (!stop_epochs && n_stop_epochs)) {
        g_last_error = "null argument";
        return ST_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        std::vector<int64_t> stops(stop_epochs, stop_epochs + n_stop_epochs);
        sparsetrain::run_earlystop_sweep(cfg->cfg, stops);
    });
}

st_status st_overhead(const st_config* cfg, int64_t epochs, char* json_buf, size_t cap,
                      size_t* needed) {
    if (!cfg) {
        g_last_error = "null argument";
        return ST_ERR_INVALID_ARGUMENT;
    }
    st_status rc = ST_OK;
    const st_status g = guarded([&] {
        const sparsetrain::OverheadResult res = sparsetrain::measure_overhead(cfg->cfg, epochs);
        std::ostringstream os;
        os << "{ \"baseline_median_seconds\": " << res.baseline_median_seconds << ", \"rows\": [";
        for (size_t i = 0; i < res.rows.size(); ++i) {
            const auto& r = res.rows[i];
            os << (i ? ", " : "") << "{ \"method\": \"" << r.method
               << "\", \"median_epoch_seconds\": " << r.median_epoch_seconds
               << ", \"stddev_epoch_seconds\": " << r.stddev_epoch_seconds
               << ", \"ratio\": " << r.ratio << " }";
        }
        os << "] }";
        rc = copy_out(os.str(), json_buf, cap, needed);
    });
    return g != ST_OK ? g : rc;
}

st_status st_report(const char* const* run_dirs, size_t n_runs, const char* out_dir) {
    if (!run_dirs || !out_dir) {
        g_last_error = "null argument";
        return ST_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        std::vector<std::string> dirs(run_dirs, run_dirs + n_runs);
        sparsetrain::write_report(dirs, out_dir);
    });
}

st_status st_verify(int verbose, int* failures) {
    return guarded([&] {
        const sparsetrain::VerifyOutcome out = sparsetrain::run_verify_suites(
            [&](const std::string& name, bool pass, const std::string& detail) {
                if (verbose)
                    std::fprintf(stderr, "[verify] %-28s %s  %s\n", name.c_str(),
                                 pass ? "PASS" : "FAIL", detail.c_str());
            });
        if (failures) *failures = out.failures;
    });
}

st_status st_descriptive_length(int64_t dense_param_count, double sparsity, double* bits,
                                double* thin_dense_equivalent) {
    if (dense_param_count < 0 || !(sparsity >= 0.0 && sparsity <= 1.0)) {
        g_last_error = "bad descriptive-length arguments";
        return ST_ERR_INVALID_ARGUMENT;
    }
    const sparsetrain::SizeAccount a =
        sparsetrain::descriptive_length(dense_param_count, sparsity);
    if (bits) *bits = a.descriptive_length_bits;
    if (thin_dense_equivalent) *thin_dense_equivalent = a.thin_dense_equivalent_count;
    return ST_OK;
}

} // extern "C"
