// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Masked parameter tensors: dense-shaped value storage plus a bitmask of
// active positions. Values at inactive positions are exactly 0.0, and stay
// 0.0 until a growth event re-activates the position.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace sparsetrain {

class Bitmask {
public:
    Bitmask() = default;
    Bitmask(int64_t size, bool filled);

    int64_t size() const { return size_; }
    int64_t active() const { return active_; }

    bool test(int64_t i) const {
        return (words_[static_cast<size_t>(i >> 6)] >> (i & 63)) & 1u;
    }
    void set(int64_t i);
    void clear(int64_t i);

    // Recount active bits from scratch (invariant check).
    int64_t popcount() const;

    // Packed little-endian bytes: bit k of byte j covers flat position 8j+k.
    std::vector<uint8_t> to_bytes() const;
    static Bitmask from_bytes(int64_t size, const std::vector<uint8_t>& bytes);

    bool operator==(const Bitmask& o) const {
        return size_ == o.size_ && words_ == o.words_;
    }

private:
    std::vector<uint64_t> words_;
    int64_t size_ = 0;
    int64_t active_ = 0;
};

struct MaskedTensor {
    std::string name;
    Tensor values;  // dense shape and storage
    Bitmask mask;
    bool sparse = false;  // participates in sparse reparameterization

    MaskedTensor() = default;
    MaskedTensor(std::string nm, std::vector<int64_t> shape, bool sparse_flag);

    int64_t numel() const { return values.numel(); }
    int64_t active_count() const { return mask.active(); }

    // Zero every inactive position. Idempotent.
    void apply_mask();

    // mask/value consistency: popcount matches and inactive positions are 0.
    bool consistent() const;
};

// Per-tensor and global sparsity accounting over the sparse tensors of a
// parameter list. Dense (non-reparameterized) tensors are excluded, matching
// the convention that global sparsity covers sparse tensors only.
struct SparsityReport {
    struct Row {
        std::string name;
        int64_t dense_count = 0;   // N_l
        int64_t active = 0;        // M_l
        double sparsity = 0.0;     // s_l = 1 - M_l/N_l
    };
    std::vector<Row> per_tensor;
    int64_t total_dense = 0;   // N
    int64_t total_active = 0;  // M
    double global_sparsity = 0.0;

    static SparsityReport compute(const std::vector<MaskedTensor>& params);
};

// Sample active positions for every sparse tensor at global sparsity s:
// M_l = round((1-s) * N_l) positions uniformly without replacement, then all
// inactive values are zeroed. Values must already hold the dense init.
// group_size > 1 samples aligned groups of that many consecutive positions
// (kernel granularity) using M_l in groups.
void sample_sparse_masks(std::vector<MaskedTensor>& params, double sparsity, Rng& rng,
                         int64_t group_size = 1);

struct SizeAccount {
    int64_t dense_param_count = 0;          // N
    double sparsity = 0.0;                  // s (fraction of zeros)
    double descriptive_length_bits = 0.0;   // (32*(1-s) + 1) * N
    double thin_dense_equivalent_count = 0; // ((1-s) + 1/32) * N
};

// Storage accounting for a sparse tensor set: one mask bit per dense
// position plus 32 bits per kept value. Note: s is the fraction of zeros,
// so the kept fraction (1-s) carries the value bits.
SizeAccount descriptive_length(int64_t dense_param_count, double sparsity);

} // namespace sparsetrain
