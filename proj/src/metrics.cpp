// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "metrics.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "error.hpp"

namespace sparsetrain {

void MetricLog::open(const std::string& dir, const std::vector<std::string>& sparse_tensor_names) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    dir_ = dir;
    tensor_count_ = sparse_tensor_names.size();

    metrics_.open(fs::path(dir) / "metrics.csv", std::ios::trunc);
    if (!metrics_) fail(Error::Code::io, "cannot create metrics.csv in " + dir);
    metrics_ << "epoch,train_loss,test_accuracy,wall_seconds,global_sparsity";
    for (const auto& n : sparse_tensor_names) metrics_ << ",sparsity_" << n;
    metrics_ << "\n" << std::flush;

    realloc_.open(fs::path(dir) / "realloc.csv", std::ios::trunc);
    if (!realloc_) fail(Error::Code::io, "cannot create realloc.csv in " + dir);
    realloc_ << "epoch,iteration,threshold_before,threshold_after,pruned,survived,grown,"
                "overflow_redistributed,dead_tensors";
    for (const auto& n : sparse_tensor_names)
        realloc_ << ",pruned_" << n << ",grown_" << n << ",active_" << n;
    realloc_ << "\n" << std::flush;
}

void MetricLog::append_epoch(const EpochRow& row) {
    if (!metrics_.is_open()) fail(Error::Code::internal, "metric log not open");
    std::ostringstream os;
    os.precision(10);
    os << row.epoch << "," << row.train_loss << ",";
    if (std::isnan(row.test_accuracy))
        os << "";
    else
        os << row.test_accuracy;
    os << "," << row.wall_seconds << "," << row.global_sparsity;
    for (double s : row.per_tensor_sparsity) os << "," << s;
    metrics_ << os.str() << "\n" << std::flush;
}

void MetricLog::append_step(int64_t epoch, int64_t iteration, const StepReport& r) {
    if (!realloc_.is_open()) fail(Error::Code::internal, "metric log not open");
    std::ostringstream os;
    os.precision(10);
    os << epoch << "," << iteration << "," << r.threshold_before << "," << r.threshold_after << ","
       << r.pruned_total << "," << r.survived_total << "," << r.grown_total << ","
       << r.overflow_redistributed << "," << r.dead_tensors;
    for (const auto& row : r.per_tensor)
        os << "," << row.pruned << "," << row.grown << "," << row.active_after;
    realloc_ << os.str() << "\n" << std::flush;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(Error::Code::io, "cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(std::move(cells));
    }
    return rows;
}

} // namespace sparsetrain
