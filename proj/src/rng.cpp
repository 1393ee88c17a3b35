// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "rng.hpp"

#include <cmath>

namespace sparsetrain {

namespace {
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;
} // namespace

uint64_t mix64(uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

uint64_t Rng::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double Rng::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_normal() {
    // u1 in (0, 1] so log() is finite.
    double u1 = 1.0 - next_uniform();
    double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

uint64_t Rng::next_below(uint64_t n) {
    // Lemire's multiply-shift with rejection.
    __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
    auto lo = static_cast<uint64_t>(m);
    if (lo < n) {
        const uint64_t t = (0 - n) % n;
        while (lo < t) {
            m = static_cast<__uint128_t>(next_u64()) * n;
            lo = static_cast<uint64_t>(m);
        }
    }
    return static_cast<uint64_t>(m >> 64);
}

double Rng::next_sign() {
    return (next_u64() & 1u) ? 1.0 : -1.0;
}

RngStreams RngStreams::from_master(uint64_t master_seed) {
    RngStreams s;
    s.init = Rng(mix64(master_seed + 1 * kGolden));
    s.shuffle = Rng(mix64(master_seed + 2 * kGolden));
    s.realloc = Rng(mix64(master_seed + 3 * kGolden));
    s.noise = Rng(mix64(master_seed + 4 * kGolden));
    return s;
}

} // namespace sparsetrain
