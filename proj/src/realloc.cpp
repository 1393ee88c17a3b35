// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "realloc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"

namespace sparsetrain {

void ReallocConfig::validate() const {
    if (n_prune < 1) fail(Error::Code::config, "n_prune must be >= 1");
    if (!(tolerance > 0.0 && tolerance < 1.0))
        fail(Error::Code::config, "tolerance must lie in (0,1)");
    if (!(initial_threshold > 0.0))
        fail(Error::Code::config, "initial threshold must be positive");
    if (period_schedule.empty()) fail(Error::Code::config, "empty period schedule");
    for (const auto& r : period_schedule)
        if (r.period < 1) fail(Error::Code::config, "reallocation period must be >= 1");
}

int64_t ReallocConfig::period_for_epoch(int64_t epoch) const {
    for (const auto& r : period_schedule)
        if (epoch >= r.first_epoch && epoch <= r.last_epoch) return r.period;
    // Past the schedule, keep the last period.
    return period_schedule.back().period;
}

int64_t prune_by_threshold(MaskedTensor& t, double threshold) {
    int64_t pruned = 0;
    const int64_t n = t.numel();
    for (int64_t i = 0; i < n; ++i) {
        if (!t.mask.test(i)) continue;
        if (std::fabs(t.values[i]) < threshold) {
            t.mask.clear(i);
            t.values[i] = 0.0;
            ++pruned;
        }
    }
    return pruned;
}

int64_t prune_kernels_by_threshold(MaskedTensor& t, double threshold) {
    if (t.values.ndim() != 4 || t.values.dim(2) != 3 || t.values.dim(3) != 3)
        fail(Error::Code::invalid_argument,
             "kernel granularity needs 4-D 3x3 conv weights, got " + t.values.shape_str() +
                 " for " + t.name);
    const int64_t groups = t.numel() / 9;
    int64_t pruned = 0;
    for (int64_t g = 0; g < groups; ++g) {
        const int64_t base = g * 9;
        if (!t.mask.test(base)) continue;  // group-aligned masks: first bit decides
        double l1 = 0.0;
        for (int64_t j = 0; j < 9; ++j) l1 += std::fabs(t.values[base + j]);
        if (l1 < threshold) {
            for (int64_t j = 0; j < 9; ++j) {
                t.mask.clear(base + j);
                t.values[base + j] = 0.0;
            }
            ++pruned;
        }
    }
    return pruned;
}

double adjust_threshold(double threshold, int64_t pruned_total, const ReallocConfig& cfg) {
    const double k = static_cast<double>(pruned_total);
    const double target = static_cast<double>(cfg.n_prune);
    if (k < (1.0 - cfg.tolerance) * target) return 2.0 * threshold;
    if (k > (1.0 + cfg.tolerance) * target) return 0.5 * threshold;
    return threshold;
}

GrowthPlan plan_growth(const std::vector<int64_t>& survived, const std::vector<int64_t>& free,
                       int64_t total_pruned) {
    const size_t n = survived.size();
    if (free.size() != n) fail(Error::Code::internal, "growth plan input size mismatch");
    GrowthPlan plan;
    plan.grown.assign(n, 0);
    if (total_pruned == 0) return plan;

    const int64_t total_free = std::accumulate(free.begin(), free.end(), int64_t{0});
    if (total_free < total_pruned)
        fail(Error::Code::internal,
             "free capacity cannot absorb the pruned parameters (requires global sparsity > 0)");

    const int64_t total_survived = std::accumulate(survived.begin(), survived.end(), int64_t{0});
    // Weight by survivors; if everything was pruned, fall back to free capacity.
    const std::vector<int64_t>& weight = total_survived > 0 ? survived : free;
    const double weight_sum = static_cast<double>(total_survived > 0 ? total_survived : total_free);

    std::vector<double> raw(n);
    int64_t assigned = 0;
    for (size_t l = 0; l < n; ++l) {
        raw[l] = static_cast<double>(weight[l]) / weight_sum * static_cast<double>(total_pruned);
        plan.grown[l] = std::llround(raw[l]);
        assigned += plan.grown[l];
    }

    // Largest-remainder correction so the counts sum exactly to K.
    int64_t diff = total_pruned - assigned;
    if (diff != 0) {
        std::vector<size_t> order(n);
        std::iota(order.begin(), order.end(), size_t{0});
        if (diff > 0) {
            // Prefer tensors rounded down the hardest.
            std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                return raw[a] - double(plan.grown[a]) > raw[b] - double(plan.grown[b]);
            });
            for (size_t oi = 0; diff > 0 && oi < n; ++oi) {
                ++plan.grown[order[oi]];
                --diff;
            }
        } else {
            // Prefer tensors rounded up the hardest; never drop below zero.
            std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                return raw[a] - double(plan.grown[a]) < raw[b] - double(plan.grown[b]);
            });
            for (size_t oi = 0; diff < 0 && oi < n; ++oi) {
                if (plan.grown[order[oi]] > 0) {
                    --plan.grown[order[oi]];
                    ++diff;
                }
            }
        }
        if (diff != 0) fail(Error::Code::internal, "largest-remainder correction failed");
    }

    // Overflow guard: clamp quotas that exceed a tensor's free slots and
    // hand the excess to tensors with spare capacity, proportionally.
    for (;;) {
        int64_t excess = 0;
        for (size_t l = 0; l < n; ++l) {
            if (plan.grown[l] > free[l]) {
                excess += plan.grown[l] - free[l];
                plan.grown[l] = free[l];
            }
        }
        if (excess == 0) break;
        plan.overflow_redistributed += excess;

        std::vector<int64_t> spare(n);
        int64_t spare_sum = 0;
        for (size_t l = 0; l < n; ++l) {
            spare[l] = free[l] - plan.grown[l];
            spare_sum += spare[l];
        }
        if (spare_sum < excess) fail(Error::Code::internal, "overflow redistribution ran out of room");

        std::vector<double> share(n);
        int64_t given = 0;
        std::vector<int64_t> add(n, 0);
        for (size_t l = 0; l < n; ++l) {
            share[l] = static_cast<double>(spare[l]) / static_cast<double>(spare_sum) *
                       static_cast<double>(excess);
            add[l] = std::llround(share[l]);
            given += add[l];
        }
        int64_t d = excess - given;
        if (d != 0) {
            std::vector<size_t> order(n);
            std::iota(order.begin(), order.end(), size_t{0});
            if (d > 0) {
                std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                    return share[a] - double(add[a]) > share[b] - double(add[b]);
                });
            } else {
                std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                    return share[a] - double(add[a]) < share[b] - double(add[b]);
                });
            }
            while (d != 0) {
                bool progressed = false;
                for (size_t oi = 0; oi < n && d != 0; ++oi) {
                    const size_t l = order[oi];
                    if (d > 0 && add[l] < spare[l]) {
                        ++add[l];
                        --d;
                        progressed = true;
                    } else if (d < 0 && add[l] > 0) {
                        --add[l];
                        ++d;
                        progressed = true;
                    }
                }
                if (!progressed)
                    fail(Error::Code::internal, "overflow redistribution failed to converge");
            }
        }
        for (size_t l = 0; l < n; ++l) plan.grown[l] += add[l];
        // Re-check: the redistribution may itself overflow smaller tensors.
    }
    return plan;
}

namespace {

// Sample `count` units uniformly without replacement from the ascending list
// of inactive units and activate them (values stay exactly zero).
void grow_into(MaskedTensor& t, int64_t count, int64_t group_size, Rng& rng) {
    if (count == 0) return;
    const int64_t units = t.numel() / group_size;
    std::vector<int64_t> inactive;
    inactive.reserve(static_cast<size_t>(units));
    for (int64_t u = 0; u < units; ++u)
        if (!t.mask.test(u * group_size)) inactive.push_back(u);
    if (count > static_cast<int64_t>(inactive.size()))
        fail(Error::Code::internal, "growth exceeds free capacity in " + t.name);
    int64_t remaining = static_cast<int64_t>(inactive.size());
    for (int64_t k = 0; k < count; ++k) {
        const int64_t j = k + static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(remaining - k)));
        std::swap(inactive[static_cast<size_t>(k)], inactive[static_cast<size_t>(j)]);
        const int64_t base = inactive[static_cast<size_t>(k)] * group_size;
        for (int64_t g = 0; g < group_size; ++g) {
            t.mask.set(base + g);
            t.values[base + g] = 0.0;
        }
    }
}

} // namespace

StepReport realloc_step(std::vector<MaskedTensor>& params, ReallocState& state,
                        const ReallocConfig& cfg, Rng& rng) {
    if (!(state.threshold > 0.0)) fail(Error::Code::internal, "non-positive pruning threshold");
    const int64_t group = cfg.granularity == Granularity::kernel3x3 ? 9 : 1;

    std::vector<MaskedTensor*> sparse;
    for (auto& p : params)
        if (p.sparse) sparse.push_back(&p);
    if (sparse.empty()) fail(Error::Code::invalid_argument, "no sparse tensors to reallocate");

    StepReport report;
    report.threshold_before = state.threshold;

    // Phase 1: prune against the global threshold.
    std::vector<int64_t> pruned(sparse.size()), survived(sparse.size()), free_units(sparse.size());
    for (size_t l = 0; l < sparse.size(); ++l) {
        MaskedTensor& t = *sparse[l];
        const int64_t active_before = t.active_count() / group;
        pruned[l] = group == 1 ? prune_by_threshold(t, state.threshold)
                               : prune_kernels_by_threshold(t, state.threshold);
        survived[l] = active_before - pruned[l];
        free_units[l] = t.numel() / group - survived[l];
        report.pruned_total += pruned[l];
        report.survived_total += survived[l];
    }

    // Phase 2: setpoint update of the threshold (affects the next step).
    state.threshold = adjust_threshold(state.threshold, report.pruned_total, cfg);
    state.step_index += 1;
    report.threshold_after = state.threshold;

    // Phase 3: proportional growth, exact by construction.
    GrowthPlan plan = plan_growth(survived, free_units, report.pruned_total);
    report.overflow_redistributed = plan.overflow_redistributed;
    for (size_t l = 0; l < sparse.size(); ++l) {
        grow_into(*sparse[l], plan.grown[l], group, rng);
        report.grown_total += plan.grown[l];

        StepReport::Row row;
        row.name = sparse[l]->name;
        row.pruned = pruned[l];
        row.survived = survived[l];
        row.grown = plan.grown[l];
        row.active_after = sparse[l]->active_count() / group;
        if (row.active_after == 0) ++report.dead_tensors;
        report.per_tensor.push_back(std::move(row));
    }

    if (report.grown_total != report.pruned_total)
        fail(Error::Code::internal, "reallocation failed to conserve the active count");
    return report;
}

} // namespace sparsetrain
