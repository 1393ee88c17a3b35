// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "error.hpp"

namespace sparsetrain {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'C', 'K', 'P', 'T', '0', '1'};

// Little-endian scalar IO (the build targets little-endian hosts; assert it).
static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

template <typename T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
    T v{};
    if (!f.read(reinterpret_cast<char*>(&v), sizeof(T)))
        fail(Error::Code::io, "truncated checkpoint");
    return v;
}

void put_string(std::ofstream& f, const std::string& s) {
    put<uint64_t>(f, s.size());
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::ifstream& f) {
    const auto n = get<uint64_t>(f);
    std::string s(n, '\0');
    if (!f.read(s.data(), static_cast<std::streamsize>(n)))
        fail(Error::Code::io, "truncated checkpoint");
    return s;
}

void put_tensor(std::ofstream& f, const Tensor& t) {
    put<uint32_t>(f, static_cast<uint32_t>(t.shape.size()));
    for (int64_t e : t.shape) put<int64_t>(f, e);
    f.write(reinterpret_cast<const char*>(t.ptr()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
}

Tensor get_tensor(std::ifstream& f) {
    const auto nd = get<uint32_t>(f);
    std::vector<int64_t> shape(nd);
    for (auto& e : shape) e = get<int64_t>(f);
    Tensor t(shape);
    if (!f.read(reinterpret_cast<char*>(t.ptr()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double))))
        fail(Error::Code::io, "truncated checkpoint tensor");
    return t;
}

// Masked tensor: shape, sparse flag, packed mask bytes, active values only.
void put_masked(std::ofstream& f, const MaskedTensor& t) {
    put_string(f, t.name);
    put<uint8_t>(f, t.sparse ? 1 : 0);
    put<uint32_t>(f, static_cast<uint32_t>(t.values.shape.size()));
    for (int64_t e : t.values.shape) put<int64_t>(f, e);
    const auto bytes = t.mask.to_bytes();
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    for (int64_t i = 0; i < t.numel(); ++i)
        if (t.mask.test(i)) put<double>(f, t.values[i]);
}

MaskedTensor get_masked(std::ifstream& f) {
    MaskedTensor t;
    t.name = get_string(f);
    const bool sparse = get<uint8_t>(f) != 0;
    const auto nd = get<uint32_t>(f);
    std::vector<int64_t> shape(nd);
    for (auto& e : shape) e = get<int64_t>(f);
    t.values = Tensor(shape);
    t.sparse = sparse;
    std::vector<uint8_t> bytes(static_cast<size_t>((t.numel() + 7) / 8));
    if (!f.read(reinterpret_cast<char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size())))
        fail(Error::Code::io, "truncated checkpoint mask");
    t.mask = Bitmask::from_bytes(t.numel(), bytes);
    for (int64_t i = 0; i < t.numel(); ++i)
        if (t.mask.test(i)) t.values[i] = get<double>(f);
    return t;
}

template <typename T>
void put_vec(std::ofstream& f, const std::vector<T>& v, void (*elem)(std::ofstream&, const T&)) {
    put<uint64_t>(f, v.size());
    for (const auto& e : v) elem(f, e);
}

} // namespace

void Checkpoint::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(Error::Code::io, "cannot create checkpoint: " + path);
    f.write(kMagic, sizeof(kMagic));
    put<uint32_t>(f, version);
    put_string(f, config_json);
    put<int64_t>(f, epoch_done);
    put<int64_t>(f, iteration_done);
    put<int64_t>(f, iters_since_realloc);
    put<int64_t>(f, compress_events_done);
    put<uint64_t>(f, rng_init);
    put<uint64_t>(f, rng_shuffle);
    put<uint64_t>(f, rng_realloc);
    put<uint64_t>(f, rng_noise);
    put<double>(f, realloc_state.threshold);
    put<int64_t>(f, realloc_state.step_index);

    put<uint64_t>(f, params.size());
    for (const auto& p : params) put_masked(f, p);
    put_vec<Tensor>(f, velocity, [](std::ofstream& o, const Tensor& t) { put_tensor(o, t); });
    put_vec<Tensor>(f, init_snapshot, [](std::ofstream& o, const Tensor& t) { put_tensor(o, t); });
    put_vec<Tensor>(f, bn_running_mean, [](std::ofstream& o, const Tensor& t) { put_tensor(o, t); });
    put_vec<Tensor>(f, bn_running_var, [](std::ofstream& o, const Tensor& t) { put_tensor(o, t); });

    put<uint64_t>(f, deepr_signs.size());
    for (const auto& s : deepr_signs) {
        put<uint64_t>(f, s.size());
        f.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(s.size()));
    }
    put_vec<Tensor>(f, hashed_unique, [](std::ofstream& o, const Tensor& t) { put_tensor(o, t); });
    put_vec<Tensor>(f, hashed_velocity,
                    [](std::ofstream& o, const Tensor& t) { put_tensor(o, t); });
    if (!f) fail(Error::Code::io, "failed writing checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(Error::Code::io, "cannot open checkpoint: " + path);
    char magic[8];
    if (!f.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        fail(Error::Code::io, "not a sparsetrain checkpoint: " + path);
    Checkpoint c;
    c.version = get<uint32_t>(f);
    if (c.version != 1) fail(Error::Code::io, "unsupported checkpoint version");
    c.config_json = get_string(f);
    c.epoch_done = get<int64_t>(f);
    c.iteration_done = get<int64_t>(f);
    c.iters_since_realloc = get<int64_t>(f);
    c.compress_events_done = get<int64_t>(f);
    c.rng_init = get<uint64_t>(f);
    c.rng_shuffle = get<uint64_t>(f);
    c.rng_realloc = get<uint64_t>(f);
    c.rng_noise = get<uint64_t>(f);
    c.realloc_state.threshold = get<double>(f);
    c.realloc_state.step_index = get<int64_t>(f);

    const auto np = get<uint64_t>(f);
    for (uint64_t i = 0; i < np; ++i) c.params.push_back(get_masked(f));
    auto get_tensors = [&f]() {
        std::vector<Tensor> v(get<uint64_t>(f));
        for (auto& t : v) t = get_tensor(f);
        return v;
    };
    c.velocity = get_tensors();
    c.init_snapshot = get_tensors();
    c.bn_running_mean = get_tensors();
    c.bn_running_var = get_tensors();

    const auto ns = get<uint64_t>(f);
    for (uint64_t i = 0; i < ns; ++i) {
        std::vector<int8_t> s(get<uint64_t>(f));
        if (!f.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(s.size())))
            fail(Error::Code::io, "truncated checkpoint");
        c.deepr_signs.push_back(std::move(s));
    }
    c.hashed_unique = get_tensors();
    c.hashed_velocity = get_tensors();
    return c;
}

} // namespace sparsetrain
