// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: JSON files with strict schema validation. Every
// hyperparameter of the shipped experiment presets has a named field;
// unknown keys are rejected.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "realloc.hpp"

namespace sparsetrain {

enum class Method {
    dynamic_sparse,
    static_sparse,
    thin_dense,
    compressed_sparse,
    set,
    deepr,
    hashed,
};

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct LrRange {
    int64_t first_epoch = 1;
    int64_t last_epoch = 1;
    double lr = 0.1;
};

struct SyntheticSpec {
    int64_t count = 2048;
    int64_t features = 64;
    int num_classes = 10;
    double margin = 3.0;
};

struct RunConfig {
    std::string run_id;  // derived from method/sparsity/seed when empty
    Method method = Method::dynamic_sparse;
    std::string net = "lenet300100";
    std::string dataset = "mnist";
    double sparsity = 0.9;
    int64_t epochs = 1;
    int64_t batch_size = 100;
    std::vector<LrRange> lr_schedule;
    double momentum = 0.0;
    bool nesterov = true;
    double l1 = 0.0;
    double l2 = 0.0;
    uint64_t seed = 1;

    std::optional<ReallocConfig> realloc;            // dynamic_sparse, set
    std::optional<DeepRConfig> deepr;                // deepr
    std::optional<CompressionSchedule> compression;  // compressed_sparse
    std::vector<LrRange> compression_lr;             // pruning-phase LR schedule
    HashedConfig hashed;                             // hashed (seed only)

    SyntheticSpec synthetic;
    std::string data_dir;  // empty: $SPARSETRAIN_DATA_DIR, then ./data
    std::string out_dir = "runs";
    bool augment = false;
    int64_t eval_every = 1;  // epochs between test evaluations (0: final only)
    bool verbose = false;

    void validate() const;
    double lr_for_epoch(int64_t epoch) const;
    std::string effective_run_id() const;
    std::string resolved_data_dir() const;

    static RunConfig from_json_text(const std::string& text);
    static RunConfig load_file(const std::string& path);
    std::string to_json_text() const;

    // String-keyed override used by the CLI and the C API
    // (seed/method/sparsity/epochs/data_dir/out_dir/run_id/net/dataset/verbose).
    void override_field(const std::string& key, const std::string& value);
};

// Ranges must tile [1, total] contiguously in order.
void validate_tiling(const std::vector<std::pair<int64_t, int64_t>>& ranges, int64_t total,
                     const std::string& what);

} // namespace sparsetrain
