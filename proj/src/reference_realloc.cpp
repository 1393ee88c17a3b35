// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "reference_realloc.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

namespace sparsetrain::reference {

RefResult realloc_step(const std::vector<RefTensor>& input, double threshold, int64_t n_prune,
                       double tolerance, Rng& rng) {
    const size_t L = input.size();
    RefResult out;
    out.tensors = input;
    out.pruned.assign(L, 0);
    out.survived.assign(L, 0);
    out.grown.assign(L, 0);

    // Prune: every active component with |value| strictly below H.
    for (size_t l = 0; l < L; ++l) {
        RefTensor& t = out.tensors[l];
        int64_t active_before = 0;
        for (size_t i = 0; i < t.values.size(); ++i) {
            if (!t.active[i]) continue;
            ++active_before;
            if (std::fabs(t.values[i]) < threshold) {
                t.active[i] = 0;
                t.values[i] = 0.0;
                ++out.pruned[l];
            }
        }
        out.survived[l] = active_before - out.pruned[l];
        out.pruned_total += out.pruned[l];
    }

    // Threshold feedback.
    const double k = double(out.pruned_total);
    if (k < (1.0 - tolerance) * double(n_prune))
        out.threshold_after = 2.0 * threshold;
    else if (k > (1.0 + tolerance) * double(n_prune))
        out.threshold_after = 0.5 * threshold;
    else
        out.threshold_after = threshold;

    if (out.pruned_total == 0) return out;

    // Growth quotas.
    std::vector<int64_t> free_slots(L);
    for (size_t l = 0; l < L; ++l)
        free_slots[l] = int64_t(out.tensors[l].values.size()) - out.survived[l];

    const int64_t survived_total = std::accumulate(out.survived.begin(), out.survived.end(), int64_t{0});
    std::vector<int64_t> weight = survived_total > 0 ? out.survived : free_slots;
    const int64_t weight_total = std::accumulate(weight.begin(), weight.end(), int64_t{0});

    std::vector<double> raw(L);
    int64_t assigned = 0;
    for (size_t l = 0; l < L; ++l) {
        raw[l] = double(weight[l]) / double(weight_total) * double(out.pruned_total);
        out.grown[l] = std::llround(raw[l]);
        assigned += out.grown[l];
    }
    int64_t diff = out.pruned_total - assigned;
    while (diff != 0) {
        // Pick the tensor with the extreme remainder (ties: lowest index).
        size_t best = L;
        double best_rem = 0.0;
        for (size_t l = 0; l < L; ++l) {
            const double rem = raw[l] - double(out.grown[l]);
            if (diff > 0) {
                if (best == L || rem > best_rem) {
                    best = l;
                    best_rem = rem;
                }
            } else {
                if (out.grown[l] > 0 && (best == L || rem < best_rem)) {
                    best = l;
                    best_rem = rem;
                }
            }
        }
        if (best == L) throw std::logic_error("reference: remainder fixup failed");
        out.grown[best] += diff > 0 ? 1 : -1;
        diff += diff > 0 ? -1 : 1;
    }

    // Capacity overflow: clamp and redistribute proportionally to spare room.
    for (;;) {
        int64_t excess = 0;
        for (size_t l = 0; l < L; ++l) {
            if (out.grown[l] > free_slots[l]) {
                excess += out.grown[l] - free_slots[l];
                out.grown[l] = free_slots[l];
            }
        }
        if (excess == 0) break;

        std::vector<int64_t> spare(L);
        int64_t spare_sum = 0;
        for (size_t l = 0; l < L; ++l) {
            spare[l] = free_slots[l] - out.grown[l];
            spare_sum += spare[l];
        }
        if (spare_sum < excess) throw std::logic_error("reference: no room for redistribution");

        std::vector<double> share(L);
        std::vector<int64_t> add(L, 0);
        int64_t given = 0;
        for (size_t l = 0; l < L; ++l) {
            share[l] = double(spare[l]) / double(spare_sum) * double(excess);
            add[l] = std::llround(share[l]);
            given += add[l];
        }
        int64_t d = excess - given;
        while (d != 0) {
            size_t best = L;
            double best_rem = 0.0;
            for (size_t l = 0; l < L; ++l) {
                const double rem = share[l] - double(add[l]);
                if (d > 0) {
                    if (add[l] < spare[l] && (best == L || rem > best_rem)) {
                        best = l;
                        best_rem = rem;
                    }
                } else {
                    if (add[l] > 0 && (best == L || rem < best_rem)) {
                        best = l;
                        best_rem = rem;
                    }
                }
            }
            if (best == L) throw std::logic_error("reference: redistribution fixup failed");
            add[best] += d > 0 ? 1 : -1;
            d += d > 0 ? -1 : 1;
        }
        for (size_t l = 0; l < L; ++l) out.grown[l] += add[l];
    }

    // Placement: ascending inactive positions, partial Fisher-Yates.
    for (size_t l = 0; l < L; ++l) {
        RefTensor& t = out.tensors[l];
        std::vector<int64_t> inactive;
        for (size_t i = 0; i < t.values.size(); ++i)
            if (!t.active[i]) inactive.push_back(int64_t(i));
        for (int64_t j = 0; j < out.grown[l]; ++j) {
            const int64_t pick =
                j + int64_t(rng.next_below(uint64_t(int64_t(inactive.size()) - j)));
            std::swap(inactive[size_t(j)], inactive[size_t(pick)]);
            t.active[size_t(inactive[size_t(j)])] = 1;
            t.values[size_t(inactive[size_t(j)])] = 0.0;
        }
    }
    return out;
}

} // namespace sparsetrain::reference
