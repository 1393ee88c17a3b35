/*
 * Copyright (c) 2026 sparsetrain contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C API of the sparsetrain engine. All entry points are thread-compatible:
 * handles must not be shared across threads without external locking, but
 * independent handles may be used concurrently. Functions return ST_OK on
 * success; on failure they return a status code and st_last_error() gives a
 * human-readable message for the calling thread.
 */

#ifndef SPARSETRAIN_H
#define SPARSETRAIN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum st_status {
    ST_OK = 0,
    ST_ERR_INVALID_ARGUMENT = 1,
    ST_ERR_CONFIG = 2,
    ST_ERR_IO = 3,
    ST_ERR_DATA = 4,
    ST_ERR_NUMERIC = 5,
    ST_ERR_INTERNAL = 6,
} st_status;

const char* st_version(void);

/* Message for the most recent failing call on this thread ("" if none). */
const char* st_last_error(void);

/* ---- run configuration ------------------------------------------------ */

typedef struct st_config st_config;

st_status st_config_load(const char* path, st_config** out);
st_status st_config_parse(const char* json_text, st_config** out);

/* Keys: seed, method, sparsity, epochs, data_dir, out_dir, run_id, net,
 * dataset, verbose. Values are parsed from the string form. */
st_status st_config_override(st_config* cfg, const char* key, const char* value);

st_status st_config_to_json(const st_config* cfg, char* buf, size_t cap, size_t* needed);
void st_config_free(st_config* cfg);

/* ---- training runs ----------------------------------------------------- */

typedef struct st_run st_run;

/* Runs the configured experiment to completion (blocking). */
st_status st_train(const st_config* cfg, st_run** out);

/* Resume an interrupted run from its directory (checkpoint.bin inside). */
st_status st_resume(const char* run_dir, st_run** out);

st_status st_run_dir(const st_run* run, char* buf, size_t cap, size_t* needed);
st_status st_run_summary_json(const st_run* run, char* buf, size_t cap, size_t* needed);
st_status st_run_final_accuracy(const st_run* run, double* out);
st_status st_run_final_sparsity(const st_run* run, double* out);
void st_run_free(st_run* run);

/* ---- experiment protocols ---------------------------------------------- */

/* Lottery-ticket replay: final mask of the source run, original or fresh
 * initial values, mask frozen, trained for double the source epochs. */
st_status st_ticket(const char* source_run_dir, int fresh_random_init, uint64_t seed,
                    const char* out_dir, st_run** out);

/* One run per stop epoch; writes earlystop.csv under the config's out_dir. */
st_status st_earlystop(const st_config* cfg, const int64_t* stop_epochs, size_t n_stop_epochs);

/* Wall-clock ratios against the no-reallocation baseline; JSON out. */
st_status st_overhead(const st_config* cfg, int64_t epochs, char* json_buf, size_t cap,
                      size_t* needed);

/* Render CSV/SVG report artifacts from completed run directories. */
st_status st_report(const char* const* run_dirs, size_t n_runs, const char* out_dir);

/* Run the invariant/oracle suites; *failures receives the failing count.
 * Progress lines go to stderr when verbose != 0. */
st_status st_verify(int verbose, int* failures);

/* Descriptive-length accounting for N dense positions at sparsity s. */
st_status st_descriptive_length(int64_t dense_param_count, double sparsity, double* bits,
                                double* thin_dense_equivalent);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SPARSETRAIN_H */
