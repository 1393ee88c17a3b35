// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset loading: MNIST IDX files, deterministic synthetic classification
// blobs, and optional CIFAR-10 binary batches with mild augmentation.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace sparsetrain {

struct Dataset {
    Tensor images;  // count x features (flat) or count x C x H x W
    std::vector<int> labels;
    int num_classes = 0;
    std::string split;

    int64_t count() const { return images.dim(0); }
};

// IDX format: big-endian magic 0x00000803 (images) / 0x00000801 (labels).
// Pixels are scaled to [0,1] and standardized with the conventional MNIST
// statistics (mean 0.1307, std 0.3081); images come out flat (count x 784
// for the official files). Throws Error(data) on bad magic, truncation, or
// image/label count mismatch.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// Resolves train/test MNIST file pairs under `dir` (the conventional
// train-images-idx3-ubyte etc. names).
Dataset load_mnist_split(const std::string& dir, bool train);

// Gaussian class blobs around random unit directions, linearly separable at
// the configured margin. Deterministic in the seed; class priors uniform
// within one count.
Dataset synthetic_classification(int64_t count, int64_t features, int num_classes, double margin,
                                 uint64_t seed);

// CIFAR-10 binary batches (3073-byte records: label byte + 3072 pixels).
Dataset load_cifar10_batches(const std::vector<std::string>& paths);

// Mild train-time augmentation for CIFAR-shaped batches: horizontal flip
// with probability 1/2 and random translation by up to `max_shift` pixels
// (zero padding). Consumes only the shuffle stream. Identity when
// max_shift == 0 and flips are disabled.
void augment_batch(Tensor& batch, Rng& shuffle_rng, bool flip, int max_shift);

// Mirror every image in a 4-D batch horizontally (an involution).
void flip_horizontal(Tensor& batch);

} // namespace sparsetrain
