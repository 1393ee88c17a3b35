// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <set>

#include "rng.hpp"

using namespace sparsetrain;

TEST_CASE("rng is deterministic and serializable") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    const uint64_t snap = a.state();
    const double x1 = a.next_uniform();
    const double x2 = a.next_normal();
    a.set_state(snap);
    CHECK(a.next_uniform() == x1);
    CHECK(a.next_normal() == x2);
}

TEST_CASE("streams derived from one master seed are distinct") {
    RngStreams s = RngStreams::from_master(7);
    std::set<uint64_t> firsts = {s.init.next_u64(), s.shuffle.next_u64(), s.realloc.next_u64(),
                                 s.noise.next_u64()};
    CHECK(firsts.size() == 4);

    // Consuming one stream leaves the others untouched.
    RngStreams t = RngStreams::from_master(7);
    RngStreams u = RngStreams::from_master(7);
    for (int i = 0; i < 10; ++i) t.noise.next_normal();
    CHECK(t.shuffle.next_u64() == u.shuffle.next_u64());
}

TEST_CASE("bounded draws stay in range and cover values") {
    Rng r(3);
    std::set<uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const uint64_t v = r.next_below(7);
        CHECK(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("uniform and normal moments are sane") {
    Rng r(11);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = r.next_uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sq += u * u;
    }
    CHECK(std::fabs(sum / n - 0.5) < 0.01);

    sum = sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = r.next_normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::fabs(sum / n) < 0.03);
    CHECK(std::fabs(sq / n - 1.0) < 0.05);
}
