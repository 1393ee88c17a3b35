// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "optimizer.hpp"

#include <algorithm>

#include "error.hpp"

namespace sparsetrain {

SgdOptimizer::SgdOptimizer(double momentum, bool nesterov, double l1, double l2)
    : momentum_(momentum), nesterov_(nesterov), l1_(l1), l2_(l2) {}

void SgdOptimizer::attach(const Model& m) {
    velocity_.clear();
    velocity_.reserve(m.params.size());
    for (const auto& p : m.params) velocity_.emplace_back(p.values.shape);
}

void SgdOptimizer::step(Model& m, const std::vector<Tensor>& grads, double lr,
                        const std::vector<int>& skip_indices) {
    if (lr <= 0.0) fail(Error::Code::invalid_argument, "learning rate must be positive");
    if (grads.size() != m.params.size() || velocity_.size() != m.params.size())
        fail(Error::Code::internal, "optimizer state does not match the model");

    for (size_t pi = 0; pi < m.params.size(); ++pi) {
        if (std::find(skip_indices.begin(), skip_indices.end(), static_cast<int>(pi)) !=
            skip_indices.end())
            continue;
        MaskedTensor& p = m.params[pi];
        Tensor& v = velocity_[pi];
        const Tensor& g = grads[pi];
        const int64_t n = p.numel();
        for (int64_t i = 0; i < n; ++i) {
            if (p.sparse && !p.mask.test(i)) continue;  // masked positions are absorbing
            double w = p.values[i];
            double ge = g[i];
            if (l2_ != 0.0) ge += l2_ * w;
            if (l1_ != 0.0 && w != 0.0) ge += l1_ * (w > 0.0 ? 1.0 : -1.0);
            if (momentum_ != 0.0) {
                double vel = momentum_ * v[i] + ge;
                v[i] = vel;
                w -= lr * (nesterov_ ? ge + momentum_ * vel : vel);
            } else {
                w -= lr * ge;
            }
            p.values[i] = w;
        }
    }
}

void SgdOptimizer::sync_mask(Model& m) {
    for (size_t pi = 0; pi < m.params.size(); ++pi) {
        MaskedTensor& p = m.params[pi];
        if (!p.sparse) continue;
        Tensor& v = velocity_[pi];
        for (int64_t i = 0; i < p.numel(); ++i) {
            if (!p.mask.test(i)) {
                p.values[i] = 0.0;
                v[i] = 0.0;
            }
        }
    }
}

} // namespace sparsetrain
