// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "masked_tensor.hpp"

#include <bit>
#include <cmath>

#include "error.hpp"

namespace sparsetrain {

Bitmask::Bitmask(int64_t size, bool filled) : size_(size) {
    if (size < 0) fail(Error::Code::invalid_argument, "negative bitmask size");
    words_.assign(static_cast<size_t>((size + 63) / 64), filled ? ~0ull : 0ull);
    if (filled && (size & 63))
        words_.back() = (1ull << (size & 63)) - 1;
    active_ = filled ? size : 0;
}

void Bitmask::set(int64_t i) {
    uint64_t& w = words_[static_cast<size_t>(i >> 6)];
    const uint64_t bit = 1ull << (i & 63);
    if (!(w & bit)) {
        w |= bit;
        ++active_;
    }
}

void Bitmask::clear(int64_t i) {
    uint64_t& w = words_[static_cast<size_t>(i >> 6)];
    const uint64_t bit = 1ull << (i & 63);
    if (w & bit) {
        w &= ~bit;
        --active_;
    }
}

int64_t Bitmask::popcount() const {
    int64_t n = 0;
    for (uint64_t w : words_) n += std::popcount(w);
    return n;
}

std::vector<uint8_t> Bitmask::to_bytes() const {
    std::vector<uint8_t> out(static_cast<size_t>((size_ + 7) / 8), 0);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<uint8_t>(words_[i / 8] >> ((i % 8) * 8));
    return out;
}

Bitmask Bitmask::from_bytes(int64_t size, const std::vector<uint8_t>& bytes) {
    if (static_cast<int64_t>(bytes.size()) != (size + 7) / 8)
        fail(Error::Code::io, "bitmask byte count does not match tensor size");
    Bitmask m(size, false);
    for (size_t i = 0; i < bytes.size(); ++i)
        m.words_[i / 8] |= static_cast<uint64_t>(bytes[i]) << ((i % 8) * 8);
    m.active_ = m.popcount();
    if (size & 7) {
        // Reject stray bits beyond the tensor size.
        const uint8_t tail = bytes.back() >> (size & 7);
        if (tail) fail(Error::Code::io, "bitmask has bits past the end of the tensor");
    }
    return m;
}

MaskedTensor::MaskedTensor(std::string nm, std::vector<int64_t> shape, bool sparse_flag)
    : name(std::move(nm)), values(std::move(shape)), mask(values.numel(), true), sparse(sparse_flag) {}

void MaskedTensor::apply_mask() {
    const int64_t n = numel();
    for (int64_t i = 0; i < n; ++i)
        if (!mask.test(i)) values[i] = 0.0;
}

bool MaskedTensor::consistent() const {
    if (mask.size() != numel()) return false;
    if (mask.popcount() != mask.active()) return false;
    for (int64_t i = 0; i < numel(); ++i)
        if (!mask.test(i) && values[i] != 0.0) return false;
    return true;
}

SparsityReport SparsityReport::compute(const std::vector<MaskedTensor>& params) {
    SparsityReport r;
    for (const auto& p : params) {
        if (!p.sparse) continue;
        Row row;
        row.name = p.name;
        row.dense_count = p.numel();
        row.active = p.active_count();
        row.sparsity = 1.0 - static_cast<double>(row.active) / static_cast<double>(row.dense_count);
        r.total_dense += row.dense_count;
        r.total_active += row.active;
        r.per_tensor.push_back(std::move(row));
    }
    r.global_sparsity = r.total_dense == 0
                            ? 0.0
                            : 1.0 - static_cast<double>(r.total_active) / static_cast<double>(r.total_dense);
    return r;
}

void sample_sparse_masks(std::vector<MaskedTensor>& params, double sparsity, Rng& rng,
                         int64_t group_size) {
    if (!(sparsity > 0.0 && sparsity < 1.0))
        fail(Error::Code::invalid_argument, "global sparsity must lie in (0,1)");
    if (group_size < 1) fail(Error::Code::invalid_argument, "group size must be >= 1");

    for (auto& p : params) {
        if (!p.sparse) continue;
        if (p.numel() % group_size != 0)
            fail(Error::Code::invalid_argument,
                 "tensor " + p.name + " size is not a multiple of the group size");
        const int64_t units = p.numel() / group_size;
        const int64_t keep = std::llround((1.0 - sparsity) * static_cast<double>(units));
        if (keep <= 0)
            fail(Error::Code::invalid_argument,
                 "sparsity " + std::to_string(sparsity) + " leaves tensor " + p.name +
                     " with no active parameters");

        // Partial Fisher-Yates over unit indices; first `keep` become active.
        std::vector<int64_t> idx(static_cast<size_t>(units));
        for (int64_t i = 0; i < units; ++i) idx[static_cast<size_t>(i)] = i;
        p.mask = Bitmask(p.numel(), false);
        for (int64_t k = 0; k < keep; ++k) {
            const int64_t j = k + static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(units - k)));
            std::swap(idx[static_cast<size_t>(k)], idx[static_cast<size_t>(j)]);
            const int64_t base = idx[static_cast<size_t>(k)] * group_size;
            for (int64_t g = 0; g < group_size; ++g) p.mask.set(base + g);
        }
        p.apply_mask();
    }
}

SizeAccount descriptive_length(int64_t dense_param_count, double sparsity) {
    SizeAccount a;
    a.dense_param_count = dense_param_count;
    a.sparsity = sparsity;
    const double kept = 1.0 - sparsity;
    const double n = static_cast<double>(dense_param_count);
    a.descriptive_length_bits = (32.0 * kept + 1.0) * n;
    a.thin_dense_equivalent_count = (kept + 1.0 / 32.0) * n;
    return a;
}

} // namespace sparsetrain
