// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Self-check suites: reallocation oracle equivalence, conservation, setpoint
// control, finite-difference gradient checks, zero-growth no-op and the
// compression schedule. Each check prints one pass/fail line.

#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace sparsetrain {

struct VerifyOutcome {
    int checks_run = 0;
    int failures = 0;
};

using VerifyReporter = std::function<void(const std::string& name, bool pass,
                                          const std::string& detail)>;

// Runs the fast suites (no dataset files needed). Seeds are fixed so the
// suites are reproducible.
VerifyOutcome run_verify_suites(const VerifyReporter& report);

// Individual checks, used by run_verify_suites and by the acceptance tests.
bool check_realloc_oracle(int instances, std::string* detail);
bool check_conservation(int64_t steps, std::string* detail);
bool check_setpoint(std::string* detail);
bool check_gradients(int instances_per_layer, std::string* detail);
bool check_zero_growth_noop(std::string* detail);
bool check_compression_schedule(std::string* detail);

} // namespace sparsetrain
