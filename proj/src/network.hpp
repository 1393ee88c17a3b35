// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Network specification and the hand-coded layer-wise forward/backward pass.
// The layer set is small and fixed; no general autodiff.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "masked_tensor.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace sparsetrain {

enum class LayerKind {
    linear,
    conv3x3,
    relu,
    batchnorm,
    global_avg_pool,
    softmax_cross_entropy,
};

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
    LayerKind kind;
    int64_t in = 0;        // linear: input features; conv3x3: input channels
    int64_t out = 0;       // linear: output features; conv3x3: output channels
    int64_t stride = 1;    // conv3x3 only (padding is fixed at 1)
    int64_t channels = 0;  // batchnorm only
    bool sparse = false;   // weight tensor participates in sparse reparameterization

    static LayerSpec linear(int64_t in, int64_t out, bool sparse);
    static LayerSpec conv3x3(int64_t c_in, int64_t c_out, int64_t stride, bool sparse);
    static LayerSpec relu();
    static LayerSpec batchnorm(int64_t channels);
    static LayerSpec global_avg_pool();
    static LayerSpec softmax_cross_entropy();
};

struct NetworkSpec {
    std::string name;
    std::vector<int64_t> input_shape;  // per-sample: {features} or {C,H,W}
    std::vector<LayerSpec> layers;

    // Shape-chains the layers; throws Error(config) on any inconsistency.
    // Returns the number of classes (columns of the logits).
    int64_t validate() const;
    int64_t num_classes() const { return validate(); }
};

// Named architectures. "lenet300100" is the 784-300-100-10 MLP with every
// linear layer sparse. "mlp:IN-H1-...-OUT" builds a custom all-sparse MLP.
// "cnn8" is a small 3x3-conv net for 32x32x3 inputs with pre-activation
// batch normalization; its first conv, downsampling convs and classifier
// stay dense.
NetworkSpec build_network(const std::string& name);

struct Model {
    NetworkSpec net;
    std::vector<MaskedTensor> params;

    struct LayerRefs {
        int weight = -1;
        int bias = -1;
        int gamma = -1;
        int beta = -1;
        int bn_slot = -1;
    };
    std::vector<LayerRefs> refs;

    // BatchNorm running statistics (buffers, not trained).
    std::vector<Tensor> bn_running_mean;
    std::vector<Tensor> bn_running_var;

    static Model build(const NetworkSpec& spec);

    // Dense-shape Glorot-uniform init for weights (the full dense tensor is
    // drawn even when masked later), zeros for biases, (1, 0) for batchnorm.
    void init_params(Rng& rng);

    std::vector<int> sparse_param_indices() const;

    // Number of stored parameters: active entries of sparse tensors plus all
    // entries of dense tensors.
    int64_t nonzero_param_count() const;
    int64_t dense_param_count() const;  // sum of numel over every tensor
};

struct ForwardCache {
    bool training = true;
    std::vector<Tensor> inputs;  // input seen by each layer
    struct BnCache {
        Tensor xhat;
        std::vector<double> inv_std;
    };
    std::vector<BnCache> bn;  // by bn_slot
};

// Runs all layers up to (not including) the terminal softmax_cross_entropy.
// `training` selects batch statistics and updates running stats for
// batchnorm layers. Logits and cache are checked finite.
Tensor forward(Model& m, const Tensor& batch, ForwardCache* cache, bool training);

// Mean cross-entropy of softmax(logits) against labels; optionally emits
// d(loss)/d(logits).
double softmax_cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels,
                                  Tensor* grad_logits);

// Gradients for every parameter tensor, aligned with m.params. Gradients at
// masked-out positions are reported as computed; the optimizer never applies
// them.
std::vector<Tensor> backward(const Model& m, const ForwardCache& cache, const Tensor& grad_logits);

} // namespace sparsetrain
