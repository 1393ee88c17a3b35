// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Comparison regimes run under the same harness: SET (per-tensor prune and
// same-tensor regrow), DeepR (per-iteration stochastic rewiring), iterative
// magnitude compression with the cubic sparsity ramp, the thin-dense sizing
// rule, and HashedNet weight sharing.

#pragma once

#include <cstdint>
#include <vector>

#include "masked_tensor.hpp"
#include "network.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace sparsetrain {

// ---- SET -------------------------------------------------------------

// One SET reallocation step: the global budget is apportioned across sparse
// tensors proportionally to their current active counts; each tensor prunes
// its smallest-magnitude active weights and regrows the same number of
// uniformly sampled zero-initialized positions in the same tensor, keeping
// per-tensor counts fixed.
struct SetReport {
    std::vector<int64_t> pruned_per_tensor;
    int64_t pruned_total = 0;
};
SetReport set_step(std::vector<MaskedTensor>& params, int64_t n_prune, Rng& rng);

// ---- DeepR -----------------------------------------------------------

struct TemperatureRange {
    int64_t first_epoch = 1;
    int64_t last_epoch = 1;
    double temperature = 0.0;
};

struct DeepRConfig {
    double alpha = 0.0;  // L1 multiplier
    std::vector<TemperatureRange> temperature_schedule;

    void validate() const;
    double temperature_for_epoch(int64_t epoch) const;
};

// Per-tensor fixed signs of active connections (drawn at activation).
struct DeepRState {
    std::vector<std::vector<int8_t>> signs;  // aligned with sparse tensors of the model

    static DeepRState init(const std::vector<MaskedTensor>& params, Rng& rng);
};

// One DeepR update over the sparse tensors: the magnitude of each active
// connection moves by -lr*(sign*grad) - lr*alpha + sqrt(2*lr*T)*noise; a
// magnitude at or below zero deactivates the connection, and every tensor
// immediately re-activates as many dormant connections (zero value, fresh
// random sign) as it lost. Returns the number of rewired connections.
int64_t deepr_step(std::vector<MaskedTensor>& params, DeepRState& state,
                   const std::vector<Tensor>& grads, const std::vector<int>& sparse_indices,
                   double lr, double alpha, double temperature, Rng& noise_rng, Rng& rewire_rng);

// ---- Iterative compression (Zhu-style cubic ramp) ---------------------

struct CompressionSchedule {
    int64_t pruning_iterations = 1;  // T
    int64_t epochs_between = 1;
    int64_t epochs_post = 0;
    double target_sparsity = 0.0;  // s

    void validate() const;

    // Cubic ramp: sparsity(t) = s * (1 - (1 - t/T)^3); 0 at t=0, s at t=T.
    double sparsity_at(int64_t t) const;
};

// Raise the global sparsity of the sparse tensors to `sparsity` by pruning
// the smallest-magnitude active weights globally (ties broken by tensor
// order then flat index). Returns the number pruned.
int64_t prune_global_to_sparsity(std::vector<MaskedTensor>& params, double sparsity);

// ---- Thin dense --------------------------------------------------------

// Uniformly scales hidden widths of `net` so that the total trainable count
// approximates descriptive-length parity with a sparse model at sparsity s:
// ((1-s) + 1/32) * N_sparse + N_always_dense. All sparse flags are cleared.
NetworkSpec build_thin_dense(const NetworkSpec& net, double sparsity);

// ---- HashedNet ---------------------------------------------------------

struct HashedConfig {
    uint64_t seed = 0;
};

// Weight sharing for one tensor: virtual dense entry i reads
// unique[position_map(i)]. The map is identity when unique_count == numel
// (degenerate dense case), otherwise mix64(seed ^ i) mod unique_count.
struct HashedTensor {
    int param_index = -1;     // which model weight tensor this backs
    int64_t dense_numel = 0;  // N_l
    int64_t unique_count = 0; // M_l
    uint64_t seed = 0;
    Tensor unique;            // [M_l]

    int64_t map_position(int64_t flat_index) const;
    void expand_into(Tensor& dense) const;
    // Accumulate dense-gradient entries into the shared slots (summation).
    Tensor gather_gradient(const Tensor& dense_grad) const;
};

// One HashedTensor per sparse-flagged weight tensor of the model, with
// M_l = round((1-s) * N_l) unique parameters initialized by gathering the
// current dense values (first hit wins per slot keeps init scale sane).
std::vector<HashedTensor> build_hashed_tensors(const Model& m, double sparsity,
                                               const HashedConfig& cfg);

} // namespace sparsetrain
