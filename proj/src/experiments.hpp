// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment protocols around the training loop: the early-stopping sweep
// over reallocation stop epochs, wall-clock overhead measurement against the
// no-reallocation baseline, and report rendering (CSV + SVG).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"
#include "train.hpp"

namespace sparsetrain {

struct EarlystopRow {
    int64_t stop_epoch = 0;
    double test_accuracy = 0.0;
    std::string run_dir;
};

// One dynamic_sparse run per stop epoch, total epochs fixed; writes
// earlystop.csv under the base config's out_dir and returns the rows.
std::vector<EarlystopRow> run_earlystop_sweep(const RunConfig& base,
                                              const std::vector<int64_t>& stop_epochs);

struct OverheadRow {
    std::string method;
    double median_epoch_seconds = 0.0;
    double stddev_epoch_seconds = 0.0;
    double ratio = 0.0;  // vs the no-reallocation sparse baseline
};

struct OverheadResult {
    double baseline_median_seconds = 0.0;
    std::vector<OverheadRow> rows;  // dynamic_sparse, set, deepr
};

// Per-epoch wall-time ratios of the dynamic methods against a sparse run
// with reallocation switched off, all with identical data/model/seed.
// Epoch timings come from the runs' metrics logs; the first epoch of each
// run is dropped as warmup.
OverheadResult measure_overhead(const RunConfig& base, int64_t epochs);

// Reads summary.json from each run directory and renders:
//   accuracy_vs_params.{csv,svg}   (counts include all dense tensors)
//   layer_sparsity.{csv,svg}
//   sizing.csv                     (descriptive-length accounting)
void write_report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

} // namespace sparsetrain
