// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major f64 tensor. Deliberately minimal: shape + contiguous
// storage, no views, no broadcasting.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sparsetrain {

struct Tensor {
    std::vector<int64_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> shp);

    static Tensor zeros(std::vector<int64_t> shp) { return Tensor(std::move(shp)); }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int64_t ndim() const { return static_cast<int64_t>(shape.size()); }
    int64_t dim(int i) const { return shape.at(static_cast<size_t>(i)); }

    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }

    double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    bool all_finite() const;
    void fill(double v);

    std::string shape_str() const;
};

int64_t numel_of(const std::vector<int64_t>& shape);

// Throws Error(numeric) naming `what` if any entry is NaN/Inf.
void check_finite(const Tensor& t, const std::string& what);

} // namespace sparsetrain
