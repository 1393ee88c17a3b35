// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "tensor.hpp"

#include <cmath>
#include <sstream>

#include "error.hpp"

namespace sparsetrain {

int64_t numel_of(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t e : shape) {
        if (e < 0) fail(Error::Code::invalid_argument, "negative tensor extent");
        n *= e;
    }
    return n;
}

Tensor::Tensor(std::vector<int64_t> shp) : shape(std::move(shp)) {
    data.assign(static_cast<size_t>(numel_of(shape)), 0.0);
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::fill(double v) {
    for (double& x : data) x = v;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ")";
    return os.str();
}

void check_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite())
        fail(Error::Code::numeric, "non-finite values in " + what);
}

} // namespace sparsetrain
