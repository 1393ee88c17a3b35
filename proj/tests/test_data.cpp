// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "error.hpp"
#include "train.hpp"

using namespace sparsetrain;
namespace fs = std::filesystem;

namespace {

void write_be32(std::ofstream& f, uint32_t v) {
    const uint8_t b[4] = {uint8_t(v >> 24), uint8_t(v >> 16), uint8_t(v >> 8), uint8_t(v)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

struct TempIdx {
    fs::path dir;
    TempIdx() {
        dir = fs::temp_directory_path() / ("sparsetrain_idx_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~TempIdx() { fs::remove_all(dir); }

    std::string images(uint32_t magic, uint32_t count, const std::vector<uint8_t>& pixels) {
        const auto p = dir / "img";
        std::ofstream f(p, std::ios::binary);
        write_be32(f, magic);
        write_be32(f, count);
        write_be32(f, 2);
        write_be32(f, 2);
        f.write(reinterpret_cast<const char*>(pixels.data()), std::streamsize(pixels.size()));
        return p.string();
    }
    std::string labels(uint32_t magic, uint32_t count, const std::vector<uint8_t>& lbl) {
        const auto p = dir / "lbl";
        std::ofstream f(p, std::ios::binary);
        write_be32(f, magic);
        write_be32(f, count);
        f.write(reinterpret_cast<const char*>(lbl.data()), std::streamsize(lbl.size()));
        return p.string();
    }
};

} // namespace

TEST_CASE("idx loader parses, scales and standardizes") {
    TempIdx t;
    const std::vector<uint8_t> px = {0, 255, 128, 0, 255, 0, 0, 64};
    const auto img = t.images(0x00000803u, 2, px);
    const auto lbl = t.labels(0x00000801u, 2, {3, 9});
    const Dataset ds = load_mnist_idx(img, lbl);
    CHECK(ds.count() == 2);
    CHECK(ds.images.shape == std::vector<int64_t>{2, 4});
    CHECK(ds.labels[0] == 3);
    CHECK(ds.labels[1] == 9);
    // (0/255 - 0.1307) / 0.3081 and (255/255 - 0.1307) / 0.3081
    CHECK(ds.images[0] == doctest::Approx((0.0 - 0.1307) / 0.3081));
    CHECK(ds.images[1] == doctest::Approx((1.0 - 0.1307) / 0.3081));
}

TEST_CASE("idx loader rejects bad inputs") {
    TempIdx t;
    SUBCASE("wrong magic") {
        const auto img = t.images(0x00000801u, 1, std::vector<uint8_t>(4, 0));
        const auto lbl = t.labels(0x00000801u, 1, {1});
        CHECK_THROWS_WITH_AS(load_mnist_idx(img, lbl),
                             doctest::Contains("wrong magic"), Error);
    }
    SUBCASE("count mismatch") {
        const auto img = t.images(0x00000803u, 2, std::vector<uint8_t>(8, 0));
        const auto lbl = t.labels(0x00000801u, 3, {1, 2, 3});
        CHECK_THROWS_WITH_AS(load_mnist_idx(img, lbl), doctest::Contains("mismatch"), Error);
    }
    SUBCASE("truncated pixel data") {
        const auto img = t.images(0x00000803u, 3, std::vector<uint8_t>(6, 0));
        const auto lbl = t.labels(0x00000801u, 3, {1, 2, 3});
        CHECK_THROWS_WITH_AS(load_mnist_idx(img, lbl), doctest::Contains("truncated"), Error);
    }
    SUBCASE("empty file") {
        const auto p = (t.dir / "empty").string();
        std::ofstream(p).close();
        CHECK_THROWS_AS(load_mnist_idx(p, p), Error);
    }
}

TEST_CASE("official mnist files load with the documented counts" *
          doctest::skip(std::getenv("SPARSETRAIN_DATA_DIR") == nullptr)) {
    const std::string dir = std::getenv("SPARSETRAIN_DATA_DIR");
    const Dataset train = load_mnist_split(dir, true);
    const Dataset test = load_mnist_split(dir, false);
    CHECK(train.count() == 60000);
    CHECK(test.count() == 10000);
    CHECK(train.images.shape == std::vector<int64_t>{60000, 784});
}

TEST_CASE("synthetic blobs: determinism, priors, separability") {
    const Dataset a = synthetic_classification(300, 16, 3, 4.0, 42);
    const Dataset b = synthetic_classification(300, 16, 3, 4.0, 42);
    CHECK(a.images.data == b.images.data);
    CHECK(a.labels == b.labels);

    std::vector<int> counts(3, 0);
    for (int l : a.labels) ++counts[size_t(l)];
    for (int c = 0; c < 3; ++c) CHECK(std::abs(counts[size_t(c)] - 100) <= 1);

    // Large margin: a small static-sparse MLP separates the training set.
    RunConfig cfg;
    cfg.method = Method::static_sparse;
    cfg.net = "mlp:16-24-3";
    cfg.dataset = "synthetic";
    cfg.synthetic = {300, 16, 3, 6.0};
    cfg.sparsity = 0.5;
    cfg.epochs = 15;  // doubled by the harness for static runs
    cfg.batch_size = 50;
    cfg.lr_schedule = {{1, 15, 0.1}};
    cfg.momentum = 0.9;
    cfg.seed = 9;
    cfg.out_dir = (fs::temp_directory_path() / "sparsetrain_synth").string();
    cfg.eval_every = 0;
    const RunResult res = train(cfg);
    // the held-out split is drawn from the same blobs; near-perfect accuracy
    CHECK(res.final_test_accuracy >= 0.99);
}

TEST_CASE("augmentation: flips are involutions, passthrough preserves") {
    Tensor batch({2, 3, 8, 8});
    Rng rng(5);
    for (auto& v : batch.data) v = rng.next_normal();
    const auto orig = batch.data;

    flip_horizontal(batch);
    CHECK(batch.data != orig);
    flip_horizontal(batch);
    CHECK(batch.data == orig);

    Rng sh(6);
    augment_batch(batch, sh, false, 0);  // no-augment flag: passthrough
    CHECK(batch.data == orig);

    augment_batch(batch, sh, true, 2);
    CHECK(batch.shape == std::vector<int64_t>{2, 3, 8, 8});  // shape preserved
}

TEST_CASE("cifar batch parsing") {
    const fs::path dir = fs::temp_directory_path() / "sparsetrain_cifar";
    fs::create_directories(dir);
    const auto p = (dir / "data_batch_1.bin").string();
    {
        std::ofstream f(p, std::ios::binary);
        std::vector<uint8_t> rec(3073, 7);
        rec[0] = 4;
        f.write(reinterpret_cast<const char*>(rec.data()), 3073);
        rec[0] = 9;
        f.write(reinterpret_cast<const char*>(rec.data()), 3073);
    }
    const Dataset ds = load_cifar10_batches({p});
    CHECK(ds.count() == 2);
    CHECK(ds.labels[0] == 4);
    CHECK(ds.labels[1] == 9);
    CHECK(ds.images.shape == std::vector<int64_t>{2, 3, 32, 32});

    {
        std::ofstream f(p, std::ios::binary);
        f.write("short", 5);
    }
    CHECK_THROWS_AS(load_cifar10_batches({p}), Error);
    fs::remove_all(dir);
}
