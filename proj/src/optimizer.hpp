// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// SGD with Nesterov momentum and L1/L2 regularization. Updates touch only
// mask-active positions of sparse tensors; inactive positions (value and
// velocity) stay exactly zero.

#pragma once

#include <vector>

#include "network.hpp"
#include "tensor.hpp"

namespace sparsetrain {

class SgdOptimizer {
public:
    SgdOptimizer() = default;
    SgdOptimizer(double momentum, bool nesterov, double l1, double l2);

    void attach(const Model& m);  // allocate velocity buffers

    // One update with the effective gradient g + l2*w + l1*sign(w).
    // skip_indices lists param indices handled elsewhere (e.g. DeepR tensors).
    void step(Model& m, const std::vector<Tensor>& grads, double lr,
              const std::vector<int>& skip_indices = {});

    // Zero velocity and value at inactive positions; call after any mask
    // change so pruned positions carry no stale momentum.
    void sync_mask(Model& m);

    std::vector<Tensor>& velocity() { return velocity_; }
    const std::vector<Tensor>& velocity() const { return velocity_; }

    double momentum() const { return momentum_; }
    bool nesterov() const { return nesterov_; }

private:
    double momentum_ = 0.0;
    bool nesterov_ = false;
    double l1_ = 0.0;
    double l2_ = 0.0;
    std::vector<Tensor> velocity_;
};

} // namespace sparsetrain
