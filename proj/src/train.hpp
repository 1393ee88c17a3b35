// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// The training loop shared by every method. One run owns its model, data,
// optimizer and RNG streams; reparameterization hooks fire at the cadence
// the method prescribes.

#pragma once

#include <functional>
#include <optional>
#include <string>

#include "checkpoint.hpp"
#include "config.hpp"
#include "data.hpp"
#include "metrics.hpp"
#include "network.hpp"
#include "optimizer.hpp"

namespace sparsetrain {

struct RunResult {
    std::string run_dir;
    double final_test_accuracy = 0.0;
    double final_train_loss = 0.0;
    double final_global_sparsity = 0.0;
    int64_t nonzero_param_count = 0;   // stored parameters (incl. dense tensors)
    int64_t total_param_count = 0;     // dense-equivalent count of every tensor
    int64_t sparse_dense_count = 0;    // N: dense positions of the sparse tensors
    std::vector<double> per_tensor_sparsity;
    std::vector<std::string> sparse_tensor_names;
    double median_epoch_seconds = 0.0;
    int64_t epochs_run = 0;
    std::string checkpoint_path;
};

struct TicketOptions {
    std::string source_run_dir;
    bool fresh_random_init = false;  // false: original init snapshot
    std::optional<int64_t> epochs_override;  // default: 2x the source epochs
    uint64_t seed = 1;               // seed for the replay run (fresh init + data order)
    std::string out_dir;
};

// Trains per the config. Static baselines (static_sparse / thin_dense) run
// for double the configured epochs with the LR schedule stretched to match.
// Writes metrics.csv / realloc.csv / config.json / checkpoint.bin /
// summary.json under <out_dir>/<run_id>.
RunResult train(const RunConfig& cfg);

// Resume from a checkpoint directory and continue to the planned end.
RunResult resume(const std::string& run_dir);

// Frozen-mask lottery-ticket replay from a source run's final mask.
RunResult run_ticket(const TicketOptions& opt);

// Accuracy of the model stored in a checkpoint, evaluated on the config's
// test split (used by 0-epoch ticket checks and the report tool).
double evaluate_checkpoint(const std::string& run_dir);

// Internal helpers shared with experiments.cpp.
Dataset load_train_split(const RunConfig& cfg);
Dataset load_test_split(const RunConfig& cfg);
double evaluate(Model& m, const Dataset& test, int64_t batch_size);

} // namespace sparsetrain
