// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <limits>

#include "error.hpp"
#include "tensor.hpp"

using namespace sparsetrain;

TEST_CASE("tensor shape/data invariant") {
    Tensor t({2, 3});
    CHECK(t.numel() == 6);
    CHECK(t.shape_str() == "(2,3)");
    for (int64_t i = 0; i < 6; ++i) CHECK(t[i] == 0.0);

    CHECK_THROWS_AS(Tensor({-1, 2}), Error);
}

TEST_CASE("finiteness checks") {
    Tensor t({2});
    t[0] = 1.0;
    CHECK(t.all_finite());
    t[1] = std::numeric_limits<double>::infinity();
    CHECK(!t.all_finite());
    CHECK_THROWS_AS(check_finite(t, "probe"), Error);
}
