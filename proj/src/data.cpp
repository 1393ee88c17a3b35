// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "error.hpp"

namespace sparsetrain {

namespace {

constexpr double kMnistMean = 0.1307;
constexpr double kMnistStd = 0.3081;

uint32_t read_be32(std::ifstream& f, const std::string& path) {
    uint8_t b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4))
        fail(Error::Code::data, "truncated IDX file: " + path);
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

} // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgf(images_path, std::ios::binary);
    if (!imgf) fail(Error::Code::io, "cannot open " + images_path);
    std::ifstream lblf(labels_path, std::ios::binary);
    if (!lblf) fail(Error::Code::io, "cannot open " + labels_path);

    const uint32_t img_magic = read_be32(imgf, images_path);
    if (img_magic != 0x00000803u)
        fail(Error::Code::data, "wrong magic in " + images_path + " (expected 0x00000803)");
    const uint32_t count = read_be32(imgf, images_path);
    const uint32_t rows = read_be32(imgf, images_path);
    const uint32_t cols = read_be32(imgf, images_path);

    const uint32_t lbl_magic = read_be32(lblf, labels_path);
    if (lbl_magic != 0x00000801u)
        fail(Error::Code::data, "wrong magic in " + labels_path + " (expected 0x00000801)");
    const uint32_t lbl_count = read_be32(lblf, labels_path);
    if (lbl_count != count)
        fail(Error::Code::data, "image/label count mismatch: " + std::to_string(count) + " vs " +
                                    std::to_string(lbl_count));

    const int64_t features = int64_t(rows) * int64_t(cols);
    Dataset ds;
    ds.images = Tensor({int64_t(count), features});
    ds.labels.resize(count);
    ds.num_classes = 10;

    std::vector<uint8_t> buf(static_cast<size_t>(features));
    for (uint32_t i = 0; i < count; ++i) {
        if (!imgf.read(reinterpret_cast<char*>(buf.data()), features))
            fail(Error::Code::data, "truncated IDX file: " + images_path);
        double* row = ds.images.ptr() + int64_t(i) * features;
        for (int64_t j = 0; j < features; ++j)
            row[j] = (double(buf[static_cast<size_t>(j)]) / 255.0 - kMnistMean) / kMnistStd;
    }
    std::vector<uint8_t> lbls(count);
    if (!lblf.read(reinterpret_cast<char*>(lbls.data()), count))
        fail(Error::Code::data, "truncated IDX file: " + labels_path);
    for (uint32_t i = 0; i < count; ++i) {
        if (lbls[i] > 9) fail(Error::Code::data, "label out of range in " + labels_path);
        ds.labels[i] = lbls[i];
    }
    return ds;
}

Dataset load_mnist_split(const std::string& dir, bool train) {
    namespace fs = std::filesystem;
    const std::string img = train ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte";
    const std::string lbl = train ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte";
    const fs::path base(dir);
    if (!fs::exists(base / img))
        fail(Error::Code::io, "MNIST file not found: " + (base / img).string() +
                                  " (set --data-dir or SPARSETRAIN_DATA_DIR)");
    Dataset ds = load_mnist_idx((base / img).string(), (base / lbl).string());
    ds.split = train ? "train" : "test";
    return ds;
}

Dataset synthetic_classification(int64_t count, int64_t features, int num_classes, double margin,
                                 uint64_t seed) {
    if (count < 1 || features < 1 || num_classes < 2)
        fail(Error::Code::invalid_argument, "bad synthetic dataset parameters");
    Rng rng(mix64(seed ^ 0x5D4Au));

    // Class centers: random directions scaled to pairwise distance >= margin.
    std::vector<std::vector<double>> centers(static_cast<size_t>(num_classes));
    for (auto& c : centers) {
        c.resize(static_cast<size_t>(features));
        double norm = 0.0;
        for (double& v : c) {
            v = rng.next_normal();
            norm += v * v;
        }
        norm = std::sqrt(std::max(norm, 1e-12));
        for (double& v : c) v /= norm;
    }
    // Random unit vectors in high dimension are nearly orthogonal; distance
    // between any two scaled centers is about scale*sqrt(2).
    const double scale = margin;

    Dataset ds;
    ds.images = Tensor({count, features});
    ds.labels.resize(static_cast<size_t>(count));
    ds.num_classes = num_classes;
    ds.split = "synthetic";
    for (int64_t i = 0; i < count; ++i) {
        const int cls = static_cast<int>(i % num_classes);  // uniform priors within one count
        ds.labels[static_cast<size_t>(i)] = cls;
        double* row = ds.images.ptr() + i * features;
        const auto& c = centers[static_cast<size_t>(cls)];
        for (int64_t j = 0; j < features; ++j)
            row[j] = scale * c[static_cast<size_t>(j)] + 0.3 * rng.next_normal();
    }
    return ds;
}

Dataset load_cifar10_batches(const std::vector<std::string>& paths) {
    if (paths.empty()) fail(Error::Code::invalid_argument, "no CIFAR-10 batch files given");
    constexpr int64_t kRecord = 3073;
    constexpr int64_t kPixels = 3072;

    int64_t total = 0;
    for (const auto& p : paths) {
        std::error_code ec;
        const auto sz = std::filesystem::file_size(p, ec);
        if (ec) fail(Error::Code::io, "cannot stat " + p);
        if (sz % kRecord != 0)
            fail(Error::Code::data, "CIFAR-10 batch size is not a multiple of 3073: " + p);
        total += static_cast<int64_t>(sz) / kRecord;
    }

    Dataset ds;
    ds.images = Tensor({total, 3, 32, 32});
    ds.labels.resize(static_cast<size_t>(total));
    ds.num_classes = 10;

    int64_t idx = 0;
    std::vector<uint8_t> rec(kRecord);
    for (const auto& p : paths) {
        std::ifstream f(p, std::ios::binary);
        if (!f) fail(Error::Code::io, "cannot open " + p);
        while (f.read(reinterpret_cast<char*>(rec.data()), kRecord)) {
            if (rec[0] > 9) fail(Error::Code::data, "label out of range in " + p);
            ds.labels[static_cast<size_t>(idx)] = rec[0];
            double* out = ds.images.ptr() + idx * kPixels;
            for (int64_t j = 0; j < kPixels; ++j)
                out[j] = double(rec[static_cast<size_t>(1 + j)]) / 255.0 - 0.5;
            ++idx;
        }
    }
    return ds;
}

void flip_horizontal(Tensor& batch) {
    if (batch.ndim() != 4) fail(Error::Code::invalid_argument, "flip expects 4-D batches");
    const int64_t planes = batch.dim(0) * batch.dim(1);
    const int64_t h = batch.dim(2), w = batch.dim(3);
    for (int64_t p = 0; p < planes; ++p) {
        double* plane = batch.ptr() + p * h * w;
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w / 2; ++x)
                std::swap(plane[y * w + x], plane[y * w + (w - 1 - x)]);
    }
}

void augment_batch(Tensor& batch, Rng& shuffle_rng, bool flip, int max_shift) {
    if (batch.ndim() != 4) fail(Error::Code::invalid_argument, "augmentation expects 4-D batches");
    const int64_t b = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
    std::vector<double> tmp(static_cast<size_t>(h * w));
    for (int64_t i = 0; i < b; ++i) {
        const bool do_flip = flip && (shuffle_rng.next_u64() & 1u);
        int dy = 0, dx = 0;
        if (max_shift > 0) {
            dy = int(shuffle_rng.next_below(uint64_t(2 * max_shift + 1))) - max_shift;
            dx = int(shuffle_rng.next_below(uint64_t(2 * max_shift + 1))) - max_shift;
        }
        if (!do_flip && dy == 0 && dx == 0) continue;
        for (int64_t ch = 0; ch < c; ++ch) {
            double* plane = batch.ptr() + (i * c + ch) * h * w;
            for (int64_t y = 0; y < h; ++y)
                for (int64_t x = 0; x < w; ++x) {
                    const int64_t sy = y + dy;
                    int64_t sx = x + dx;
                    if (do_flip) sx = w - 1 - sx;
                    tmp[static_cast<size_t>(y * w + x)] =
                        (sy >= 0 && sy < h && sx >= 0 && sx < w) ? plane[sy * w + sx] : 0.0;
                }
            std::copy(tmp.begin(), tmp.end(), plane);
        }
    }
}

} // namespace sparsetrain
