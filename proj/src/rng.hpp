// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random streams. One master seed expands into independent
// named streams (init / shuffle / realloc / noise) so that a method which
// skips one stream does not perturb the draws of the others.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sparsetrain {

// 64-bit finalizer used both as the stream generator step and as the
// stateless mixing hash (HashedNet position mapping).
uint64_t mix64(uint64_t x);

class Rng {
public:
    Rng() : state_(0) {}
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double next_uniform();

    // Standard normal via Box-Muller; draws two uniforms per call so the
    // stream state alone fully determines the sequence (no cached spare).
    double next_normal();

    // Unbiased integer in [0, n). n must be > 0.
    uint64_t next_below(uint64_t n);

    // +1.0 or -1.0 with equal probability.
    double next_sign();

    uint64_t state() const { return state_; }
    void set_state(uint64_t s) { state_ = s; }

private:
    uint64_t state_;
};

// The named streams of a training run.
struct RngStreams {
    Rng init;     // parameter values and initial mask positions
    Rng shuffle;  // data order and augmentation
    Rng realloc;  // prune/grow position sampling (dynamic, SET, DeepR rewiring)
    Rng noise;    // gradient noise (DeepR)

    static RngStreams from_master(uint64_t master_seed);
};

} // namespace sparsetrain
