// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Straight-line reference implementation of one reallocation step, executed
// index by index on plain vectors. Used only by the verification suites and
// tests to cross-check realloc.cpp; deliberately shares no code with it
// beyond the Rng type. Both sides implement the same observable contract
// (tensor order, ascending position scans, partial Fisher-Yates placement),
// so given equal inputs and RNG state the resulting masks must be equal.

#pragma once

#include <cstdint>
#include <vector>

#include "rng.hpp"

namespace sparsetrain::reference {

struct RefTensor {
    std::vector<double> values;
    std::vector<uint8_t> active;
};

struct RefResult {
    std::vector<RefTensor> tensors;
    std::vector<int64_t> pruned;
    std::vector<int64_t> survived;
    std::vector<int64_t> grown;
    double threshold_after = 0.0;
    int64_t pruned_total = 0;
};

// One step of: prune (|v| < H strictly), setpoint threshold update
// (2x / 0.5x / hold around n_prune with fractional tolerance), growth
// quotas round(R_l/sum(R) * K) fixed up by largest remainder and capacity
// overflow redistribution, then uniform zero-init placement.
RefResult realloc_step(const std::vector<RefTensor>& input, double threshold, int64_t n_prune,
                       double tolerance, Rng& rng);

} // namespace sparsetrain::reference
