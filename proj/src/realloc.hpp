// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Dynamic parameter reallocation: global threshold pruning, setpoint
// threshold adaptation, and proportional cross-layer random regrowth. The
// step conserves the total active count exactly. A structured variant works
// on whole 3x3 kernels compared by L1 norm.
//
// Deterministic contract (mirrored by the reference implementation used in
// tests): tensors are visited in list order and flat positions in ascending
// order; growth counts are fixed before any sampling; per-tensor placement
// draws G_l positions by partial Fisher-Yates over the ascending list of
// inactive positions, consuming the realloc stream tensor by tensor.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "masked_tensor.hpp"
#include "rng.hpp"

namespace sparsetrain {

enum class Granularity { weight, kernel3x3 };

struct PeriodRange {
    int64_t first_epoch = 1;  // inclusive, 1-based
    int64_t last_epoch = 1;   // inclusive
    int64_t period = 1;       // reallocate every `period` iterations
};

struct ReallocConfig {
    int64_t n_prune = 1;   // N_p: target pruned count per step (weights or kernels)
    double tolerance = 0.1;  // delta
    double initial_threshold = 1e-3;  // H^(0)
    std::vector<PeriodRange> period_schedule;
    Granularity granularity = Granularity::weight;
    std::optional<int64_t> stop_epoch;  // reallocation disabled after this epoch

    void validate() const;
    int64_t period_for_epoch(int64_t epoch) const;
};

struct ReallocState {
    double threshold = 0.0;  // H
    int64_t step_index = 0;  // t

    static ReallocState initial(const ReallocConfig& cfg) {
        return ReallocState{cfg.initial_threshold, 0};
    }
};

struct StepReport {
    struct Row {
        std::string name;
        int64_t pruned = 0;     // K_l
        int64_t survived = 0;   // R_l
        int64_t grown = 0;      // G_l
        int64_t active_after = 0;
    };
    std::vector<Row> per_tensor;
    int64_t pruned_total = 0;     // K
    int64_t survived_total = 0;   // R
    int64_t grown_total = 0;      // G == K
    double threshold_before = 0.0;
    double threshold_after = 0.0;
    int64_t overflow_redistributed = 0;
    int64_t dead_tensors = 0;  // tensors left with zero active entries
};

// Deactivate every active position with |value| < threshold (strict) and
// zero it. Returns the number pruned.
int64_t prune_by_threshold(MaskedTensor& t, double threshold);

// Kernel-granularity prune: whole 3x3 kernels (9 consecutive positions) are
// removed when their L1 norm is below the threshold. Returns kernels pruned.
int64_t prune_kernels_by_threshold(MaskedTensor& t, double threshold);

// Setpoint feedback: K below (1-delta)*N_p doubles H, K above (1+delta)*N_p
// halves it, otherwise H is unchanged.
double adjust_threshold(double threshold, int64_t pruned_total, const ReallocConfig& cfg);

// Growth quota per tensor: round(R_l / sum(R) * K), made exact by
// largest-remainder correction, then clamped to free capacity with the
// excess redistributed proportionally to the remaining free capacity.
// If every survivor count is zero the quota is proportional to free
// capacity instead. free[l] must be the post-prune inactive counts
// (in units: weights, or kernels for the structured variant).
struct GrowthPlan {
    std::vector<int64_t> grown;
    int64_t overflow_redistributed = 0;
};
GrowthPlan plan_growth(const std::vector<int64_t>& survived, const std::vector<int64_t>& free,
                       int64_t total_pruned);

// One full reallocation step over the sparse tensors of `params`:
// prune -> adjust threshold -> grow (zero-initialized, uniformly sampled).
StepReport realloc_step(std::vector<MaskedTensor>& params, ReallocState& state,
                        const ReallocConfig& cfg, Rng& rng);

} // namespace sparsetrain
