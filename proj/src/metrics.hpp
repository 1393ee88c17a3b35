// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Append-only CSV logs for a run: one per-epoch metrics file and one
// per-reallocation step file. Rows are flushed as they are written so an
// interrupted run stays analyzable.

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "realloc.hpp"

namespace sparsetrain {

struct EpochRow {
    int64_t epoch = 0;
    double train_loss = 0.0;
    double test_accuracy = 0.0;  // NaN when evaluation was skipped
    double wall_seconds = 0.0;
    double global_sparsity = 0.0;
    std::vector<double> per_tensor_sparsity;
};

class MetricLog {
public:
    MetricLog() = default;

    // Creates <dir>/metrics.csv and <dir>/realloc.csv with header rows.
    void open(const std::string& dir, const std::vector<std::string>& sparse_tensor_names);

    void append_epoch(const EpochRow& row);
    void append_step(int64_t epoch, int64_t iteration, const StepReport& report);

    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
    std::ofstream metrics_;
    std::ofstream realloc_;
    size_t tensor_count_ = 0;
};

// Small CSV reading helper used by report/ticket tooling.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

} // namespace sparsetrain
