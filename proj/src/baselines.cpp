// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "error.hpp"

namespace sparsetrain {

namespace {

// Apportion `total` across entries proportionally to `weight`, exactly,
// respecting per-entry caps. Largest-remainder with index-order ties.
std::vector<int64_t> apportion(const std::vector<int64_t>& weight,
                               const std::vector<int64_t>& cap, int64_t total) {
    const size_t n = weight.size();
    const int64_t wsum = std::accumulate(weight.begin(), weight.end(), int64_t{0});
    std::vector<int64_t> out(n, 0);
    if (total == 0) return out;
    if (wsum == 0) fail(Error::Code::invalid_argument, "apportionment with zero total weight");

    std::vector<double> raw(n);
    int64_t assigned = 0;
    for (size_t l = 0; l < n; ++l) {
        raw[l] = double(weight[l]) / double(wsum) * double(total);
        out[l] = std::min<int64_t>(std::llround(raw[l]), cap[l]);
        assigned += out[l];
    }
    int64_t d = total - assigned;
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    if (d > 0) {
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return raw[a] - double(out[a]) > raw[b] - double(out[b]);
        });
    } else if (d < 0) {
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return raw[a] - double(out[a]) < raw[b] - double(out[b]);
        });
    }
    while (d != 0) {
        bool progressed = false;
        for (size_t oi = 0; oi < n && d != 0; ++oi) {
            const size_t l = order[oi];
            if (d > 0 && out[l] < cap[l]) {
                ++out[l];
                --d;
                progressed = true;
            } else if (d < 0 && out[l] > 0) {
                --out[l];
                ++d;
                progressed = true;
            }
        }
        if (!progressed) fail(Error::Code::invalid_argument, "apportionment infeasible under caps");
    }
    return out;
}

} // namespace

SetReport set_step(std::vector<MaskedTensor>& params, int64_t n_prune, Rng& rng) {
    std::vector<MaskedTensor*> sparse;
    for (auto& p : params)
        if (p.sparse) sparse.push_back(&p);
    if (sparse.empty()) fail(Error::Code::invalid_argument, "no sparse tensors for SET step");

    std::vector<int64_t> active(sparse.size()), cap(sparse.size());
    for (size_t l = 0; l < sparse.size(); ++l) cap[l] = active[l] = sparse[l]->active_count();
    const int64_t total_active = std::accumulate(active.begin(), active.end(), int64_t{0});
    if (n_prune > total_active)
        fail(Error::Code::invalid_argument, "SET prune count exceeds active parameters");

    SetReport report;
    report.pruned_per_tensor = apportion(active, cap, n_prune);

    for (size_t l = 0; l < sparse.size(); ++l) {
        MaskedTensor& t = *sparse[l];
        const int64_t k = report.pruned_per_tensor[l];
        if (k > t.active_count())
            fail(Error::Code::invalid_argument, "per-tensor SET prune count exceeds active count");
        if (k == 0) continue;

        // Smallest-magnitude actives first; ties resolved by flat index.
        std::vector<std::pair<double, int64_t>> order;
        order.reserve(static_cast<size_t>(t.active_count()));
        for (int64_t i = 0; i < t.numel(); ++i)
            if (t.mask.test(i)) order.emplace_back(std::fabs(t.values[i]), i);
        std::sort(order.begin(), order.end());
        for (int64_t j = 0; j < k; ++j) {
            const int64_t i = order[static_cast<size_t>(j)].second;
            t.mask.clear(i);
            t.values[i] = 0.0;
        }

        // Regrow exactly k zero-initialized positions in the same tensor.
        std::vector<int64_t> inactive;
        for (int64_t i = 0; i < t.numel(); ++i)
            if (!t.mask.test(i)) inactive.push_back(i);
        for (int64_t j = 0; j < k; ++j) {
            const int64_t pick =
                j + static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(inactive.size() - j)));
            std::swap(inactive[static_cast<size_t>(j)], inactive[static_cast<size_t>(pick)]);
            const int64_t i = inactive[static_cast<size_t>(j)];
            t.mask.set(i);
            t.values[i] = 0.0;
        }
        report.pruned_total += k;
    }
    return report;
}

void DeepRConfig::validate() const {
    if (alpha < 0.0) fail(Error::Code::config, "DeepR alpha must be >= 0");
    if (temperature_schedule.empty()) fail(Error::Code::config, "empty DeepR temperature schedule");
    for (const auto& r : temperature_schedule)
        if (r.temperature < 0.0) fail(Error::Code::config, "DeepR temperature must be >= 0");
}

double DeepRConfig::temperature_for_epoch(int64_t epoch) const {
    for (const auto& r : temperature_schedule)
        if (epoch >= r.first_epoch && epoch <= r.last_epoch) return r.temperature;
    return temperature_schedule.back().temperature;
}

DeepRState DeepRState::init(const std::vector<MaskedTensor>& params, Rng& rng) {
    DeepRState st;
    for (const auto& p : params) {
        if (!p.sparse) continue;
        std::vector<int8_t> s(static_cast<size_t>(p.numel()), 0);
        for (int64_t i = 0; i < p.numel(); ++i) {
            if (!p.mask.test(i)) continue;
            // Initial signs follow the initial values; zero draws a fresh sign.
            if (p.values[i] > 0.0)
                s[static_cast<size_t>(i)] = 1;
            else if (p.values[i] < 0.0)
                s[static_cast<size_t>(i)] = -1;
            else
                s[static_cast<size_t>(i)] = rng.next_sign() > 0 ? 1 : -1;
        }
        st.signs.push_back(std::move(s));
    }
    return st;
}

int64_t deepr_step(std::vector<MaskedTensor>& params, DeepRState& state,
                   const std::vector<Tensor>& grads, const std::vector<int>& sparse_indices,
                   double lr, double alpha, double temperature, Rng& noise_rng, Rng& rewire_rng) {
    if (state.signs.size() != sparse_indices.size())
        fail(Error::Code::internal, "DeepR state does not match the model");
    const double noise_scale = temperature > 0.0 ? std::sqrt(2.0 * lr * temperature) : 0.0;

    int64_t rewired = 0;
    for (size_t sl = 0; sl < sparse_indices.size(); ++sl) {
        MaskedTensor& t = params[static_cast<size_t>(sparse_indices[sl])];
        const Tensor& g = grads[static_cast<size_t>(sparse_indices[sl])];
        std::vector<int8_t>& signs = state.signs[sl];

        int64_t lost = 0;
        for (int64_t i = 0; i < t.numel(); ++i) {
            if (!t.mask.test(i)) continue;
            const double sign = signs[static_cast<size_t>(i)] >= 0 ? 1.0 : -1.0;
            double theta = sign * t.values[i];
            theta -= lr * (sign * g[i]) + lr * alpha;
            if (noise_scale > 0.0) theta += noise_scale * noise_rng.next_normal();
            if (theta <= 0.0) {
                t.mask.clear(i);
                t.values[i] = 0.0;
                ++lost;
            } else {
                t.values[i] = sign * theta;
            }
        }

        if (lost > 0) {
            // Refill the tensor's budget with dormant connections at random.
            std::vector<int64_t> inactive;
            for (int64_t i = 0; i < t.numel(); ++i)
                if (!t.mask.test(i)) inactive.push_back(i);
            for (int64_t j = 0; j < lost; ++j) {
                const int64_t pick = j + static_cast<int64_t>(rewire_rng.next_below(
                                             static_cast<uint64_t>(inactive.size() - j)));
                std::swap(inactive[static_cast<size_t>(j)], inactive[static_cast<size_t>(pick)]);
                const int64_t i = inactive[static_cast<size_t>(j)];
                t.mask.set(i);
                t.values[i] = 0.0;
                signs[static_cast<size_t>(i)] = rewire_rng.next_sign() > 0 ? 1 : -1;
            }
            rewired += lost;
        }
    }
    return rewired;
}

void CompressionSchedule::validate() const {
    if (pruning_iterations < 1) fail(Error::Code::config, "compression needs >= 1 pruning iteration");
    if (epochs_between < 1) fail(Error::Code::config, "epochs between prunings must be >= 1");
    if (epochs_post < 0) fail(Error::Code::config, "negative post-pruning epochs");
    if (!(target_sparsity > 0.0 && target_sparsity < 1.0))
        fail(Error::Code::config, "compression target sparsity must lie in (0,1)");
}

double CompressionSchedule::sparsity_at(int64_t t) const {
    if (t < 0 || t > pruning_iterations)
        fail(Error::Code::invalid_argument, "pruning step outside [0, T]");
    const double frac = 1.0 - double(t) / double(pruning_iterations);
    return target_sparsity * (1.0 - frac * frac * frac);
}

int64_t prune_global_to_sparsity(std::vector<MaskedTensor>& params, double sparsity) {
    if (!(sparsity >= 0.0 && sparsity < 1.0))
        fail(Error::Code::invalid_argument, "sparsity must lie in [0,1)");
    int64_t total = 0, active = 0;
    for (const auto& p : params) {
        if (!p.sparse) continue;
        total += p.numel();
        active += p.active_count();
    }
    const int64_t target = std::llround((1.0 - sparsity) * double(total));
    const int64_t to_prune = active - target;
    if (to_prune <= 0) return 0;

    std::vector<std::tuple<double, size_t, int64_t>> order;
    order.reserve(static_cast<size_t>(active));
    for (size_t pi = 0; pi < params.size(); ++pi) {
        const MaskedTensor& p = params[pi];
        if (!p.sparse) continue;
        for (int64_t i = 0; i < p.numel(); ++i)
            if (p.mask.test(i)) order.emplace_back(std::fabs(p.values[i]), pi, i);
    }
    std::sort(order.begin(), order.end());
    for (int64_t j = 0; j < to_prune; ++j) {
        auto [mag, pi, i] = order[static_cast<size_t>(j)];
        params[pi].mask.clear(i);
        params[pi].values[i] = 0.0;
    }
    return to_prune;
}

namespace {

int64_t spec_param_count(const NetworkSpec& spec) {
    int64_t n = 0;
    for (const auto& l : spec.layers) {
        switch (l.kind) {
            case LayerKind::linear: n += l.in * l.out + l.out; break;
            case LayerKind::conv3x3: n += l.in * l.out * 9 + l.out; break;
            case LayerKind::batchnorm: n += 2 * l.channels; break;
            default: break;
        }
    }
    return n;
}

// Rebuild the spec with hidden interface sizes scaled by alpha. The final
// parameterized layer keeps its output (class count); batchnorm channels
// follow their input.
NetworkSpec scale_widths(const NetworkSpec& net, double alpha) {
    NetworkSpec out = net;
    int last_param = -1;
    for (size_t i = 0; i < net.layers.size(); ++i) {
        const LayerKind k = net.layers[i].kind;
        if (k == LayerKind::linear || k == LayerKind::conv3x3) last_param = static_cast<int>(i);
    }
    int64_t cur = net.input_shape[0];
    for (size_t i = 0; i < out.layers.size(); ++i) {
        LayerSpec& l = out.layers[i];
        switch (l.kind) {
            case LayerKind::linear:
            case LayerKind::conv3x3:
                l.in = cur;
                if (static_cast<int>(i) != last_param)
                    l.out = std::max<int64_t>(1, std::llround(alpha * double(l.out)));
                l.sparse = false;
                cur = l.out;
                break;
            case LayerKind::batchnorm:
                l.channels = cur;
                break;
            default:
                break;
        }
    }
    return out;
}

} // namespace

NetworkSpec build_thin_dense(const NetworkSpec& net, double sparsity) {
    if (!(sparsity > 0.0 && sparsity < 1.0))
        fail(Error::Code::invalid_argument, "thin-dense sparsity must lie in (0,1)");
    net.validate();

    int64_t sparse_weights = 0;
    for (const auto& l : net.layers) {
        if (l.kind == LayerKind::linear && l.sparse) sparse_weights += l.in * l.out;
        if (l.kind == LayerKind::conv3x3 && l.sparse) sparse_weights += l.in * l.out * 9;
    }
    if (sparse_weights == 0)
        fail(Error::Code::invalid_argument, "network has no sparse tensors to size against");
    const int64_t always_dense = spec_param_count(net) - sparse_weights;
    const double target =
        ((1.0 - sparsity) + 1.0 / 32.0) * double(sparse_weights) + double(always_dense);

    double best_alpha = 1.0;
    int64_t best_err = std::numeric_limits<int64_t>::max();
    for (double alpha = 0.0005; alpha <= 2.0; alpha += 0.0005) {
        const NetworkSpec cand = scale_widths(net, alpha);
        const int64_t err = std::llabs(spec_param_count(cand) - std::llround(target));
        if (err < best_err) {
            best_err = err;
            best_alpha = alpha;
        }
    }
    NetworkSpec thin = scale_widths(net, best_alpha);
    thin.name = net.name + "-thin";
    thin.validate();
    return thin;
}

int64_t HashedTensor::map_position(int64_t flat_index) const {
    if (unique_count == dense_numel) return flat_index;  // degenerate dense case
    return static_cast<int64_t>(mix64(seed ^ static_cast<uint64_t>(flat_index)) %
                                static_cast<uint64_t>(unique_count));
}

void HashedTensor::expand_into(Tensor& dense) const {
    for (int64_t i = 0; i < dense.numel(); ++i) dense[i] = unique[map_position(i)];
}

Tensor HashedTensor::gather_gradient(const Tensor& dense_grad) const {
    Tensor g({unique_count});
    for (int64_t i = 0; i < dense_grad.numel(); ++i) g[map_position(i)] += dense_grad[i];
    return g;
}

std::vector<HashedTensor> build_hashed_tensors(const Model& m, double sparsity,
                                               const HashedConfig& cfg) {
    if (!(sparsity > 0.0 && sparsity < 1.0))
        fail(Error::Code::invalid_argument, "hashed sparsity must lie in (0,1)");
    std::vector<HashedTensor> out;
    for (size_t pi = 0; pi < m.params.size(); ++pi) {
        const MaskedTensor& p = m.params[pi];
        if (!p.sparse) continue;
        HashedTensor h;
        h.param_index = static_cast<int>(pi);
        h.dense_numel = p.numel();
        h.unique_count = std::max<int64_t>(1, std::llround((1.0 - sparsity) * double(p.numel())));
        h.seed = mix64(cfg.seed ^ (0xABCD0000ull + pi));
        h.unique = Tensor({h.unique_count});
        // Seed unique slots from the dense init: the first position mapping
        // to each slot wins; unhit slots stay zero (they never feed forward).
        std::vector<uint8_t> seen(static_cast<size_t>(h.unique_count), 0);
        for (int64_t i = 0; i < p.numel(); ++i) {
            const int64_t j = h.map_position(i);
            if (!seen[static_cast<size_t>(j)]) {
                h.unique[j] = p.values[i];
                seen[static_cast<size_t>(j)] = 1;
            }
        }
        out.push_back(std::move(h));
    }
    if (out.empty()) fail(Error::Code::invalid_argument, "no sparse tensors to hash");
    return out;
}

} // namespace sparsetrain
