// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Versioned binary checkpoints. Per-tensor records hold the dense shape,
// the bitmask as packed little-endian bytes and the active values as f64 in
// flat-index order; the file also carries the RNG stream states, optimizer
// velocity, reallocation state, the initial-parameter snapshot used by
// lottery-ticket replays, and the config the run was started from.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "network.hpp"
#include "optimizer.hpp"
#include "realloc.hpp"
#include "rng.hpp"

namespace sparsetrain {

struct Checkpoint {
    uint32_t version = 1;
    std::string config_json;

    int64_t epoch_done = 0;
    int64_t iteration_done = 0;
    int64_t iters_since_realloc = 0;
    int64_t compress_events_done = 0;

    uint64_t rng_init = 0, rng_shuffle = 0, rng_realloc = 0, rng_noise = 0;
    ReallocState realloc_state;

    // Aligned with model params.
    std::vector<MaskedTensor> params;
    std::vector<Tensor> velocity;
    std::vector<Tensor> init_snapshot;  // dense initial values (pre-mask)

    std::vector<Tensor> bn_running_mean;
    std::vector<Tensor> bn_running_var;

    // DeepR signs (one vector per sparse tensor) when present.
    std::vector<std::vector<int8_t>> deepr_signs;

    // HashedNet unique parameter vectors and their velocities when present.
    std::vector<Tensor> hashed_unique;
    std::vector<Tensor> hashed_velocity;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

} // namespace sparsetrain
