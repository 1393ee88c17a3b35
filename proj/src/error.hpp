// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sparsetrain {

// Single exception type for the library; `code` maps onto the C API status.
class Error : public std::runtime_error {
public:
    enum class Code {
        invalid_argument,
        config,
        io,
        data,
        numeric,
        internal,
    };

    Error(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}

    Code code;
};

[[noreturn]] inline void fail(Error::Code c, const std::string& msg) {
    throw Error(c, msg);
}

} // namespace sparsetrain
