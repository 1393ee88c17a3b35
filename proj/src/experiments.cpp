// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "metrics.hpp"
#include "svg.hpp"

namespace sparsetrain {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<EarlystopRow> run_earlystop_sweep(const RunConfig& base,
                                              const std::vector<int64_t>& stop_epochs) {
    if (base.method != Method::dynamic_sparse)
        fail(Error::Code::invalid_argument, "early-stop sweep needs a dynamic_sparse base config");
    if (stop_epochs.empty()) fail(Error::Code::invalid_argument, "no stop epochs given");

    std::vector<EarlystopRow> rows;
    for (int64_t stop : stop_epochs) {
        RunConfig cfg = base;
        cfg.realloc->stop_epoch = stop;
        cfg.run_id = base.effective_run_id() + "_stop" + std::to_string(stop);
        const RunResult res = train(cfg);
        rows.push_back({stop, res.final_test_accuracy, res.run_dir});
    }

    fs::create_directories(base.out_dir);
    std::ofstream csv(fs::path(base.out_dir) / "earlystop.csv");
    csv << "stop_epoch,test_accuracy,run_dir\n";
    for (const auto& r : rows)
        csv << r.stop_epoch << "," << r.test_accuracy << "," << r.run_dir << "\n";
    return rows;
}

namespace {

std::vector<double> epoch_seconds_from_log(const std::string& run_dir) {
    const auto rows = read_csv((fs::path(run_dir) / "metrics.csv").string());
    if (rows.size() < 2) fail(Error::Code::data, "metrics log has no epochs: " + run_dir);
    size_t col = 0;
    for (size_t c = 0; c < rows[0].size(); ++c)
        if (rows[0][c] == "wall_seconds") col = c;
    std::vector<double> secs;
    for (size_t i = 1; i < rows.size(); ++i) secs.push_back(std::stod(rows[i][col]));
    return secs;
}

std::pair<double, double> median_stddev(std::vector<double> v) {
    if (v.empty()) return {0.0, 0.0};
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    const double med = s.size() % 2 ? s[s.size() / 2]
                                    : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= double(std::max<size_t>(v.size() - 1, 1));
    return {med, std::sqrt(var)};
}

} // namespace

OverheadResult measure_overhead(const RunConfig& base, int64_t epochs) {
    if (epochs < 10)
        fail(Error::Code::invalid_argument, "overhead measurement needs >= 10 epochs");
    if (base.method != Method::dynamic_sparse || !base.realloc)
        fail(Error::Code::invalid_argument, "overhead measurement needs a dynamic_sparse base config");

    auto strip_to_epochs = [&](RunConfig& c) {
        c.epochs = epochs;
        c.lr_schedule = {{1, epochs, base.lr_schedule.front().lr}};
        if (c.realloc) {
            c.realloc->period_schedule = {{1, epochs, base.realloc->period_schedule.front().period}};
        }
        c.eval_every = 0;  // time pure training epochs
        c.verbose = false;
    };

    // Baseline: the same sparse model with reallocation switched off.
    RunConfig base_cfg = base;
    strip_to_epochs(base_cfg);
    base_cfg.realloc->stop_epoch = 0;
    base_cfg.run_id = "overhead_baseline";
    const RunResult base_res = train(base_cfg);
    auto base_secs = epoch_seconds_from_log(base_res.run_dir);
    base_secs.erase(base_secs.begin());  // warmup epoch
    const auto [base_med, base_sd] = median_stddev(base_secs);

    OverheadResult out;
    out.baseline_median_seconds = base_med;

    auto run_method = [&](Method m, const std::string& id) {
        RunConfig cfg = base;
        strip_to_epochs(cfg);
        cfg.method = m;
        cfg.run_id = "overhead_" + id;
        if (m == Method::deepr) {
            cfg.realloc.reset();
            DeepRConfig d;
            d.alpha = 1e-4;
            d.temperature_schedule = {{1, epochs, 1e-4}};
            cfg.deepr = d;
        } else {
            cfg.realloc->stop_epoch.reset();
        }
        const RunResult res = train(cfg);
        auto secs = epoch_seconds_from_log(res.run_dir);
        secs.erase(secs.begin());
        const auto [med, sd] = median_stddev(secs);
        out.rows.push_back({id, med, sd, med / base_med});
    };
    run_method(Method::dynamic_sparse, "dynamic_sparse");
    run_method(Method::set, "set");
    run_method(Method::deepr, "deepr");

    fs::create_directories(base.out_dir);
    std::ofstream csv(fs::path(base.out_dir) / "overhead.csv");
    csv << "method,median_epoch_seconds,stddev_epoch_seconds,ratio_vs_no_realloc\n";
    csv << "no_realloc_baseline," << base_med << "," << base_sd << ",1\n";
    for (const auto& r : out.rows)
        csv << r.method << "," << r.median_epoch_seconds << "," << r.stddev_epoch_seconds << ","
            << r.ratio << "\n";
    return out;
}

void write_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    if (run_dirs.empty()) fail(Error::Code::invalid_argument, "report needs at least one run");
    fs::create_directories(out_dir);

    struct RunInfo {
        std::string run_id, method;
        double sparsity = 0.0, accuracy = 0.0, global_sparsity = 0.0;
        int64_t nonzero = 0, total = 0, sparse_dense = 0;
        std::map<std::string, double> per_tensor;
    };
    std::vector<RunInfo> runs;
    for (const auto& dir : run_dirs) {
        std::ifstream f(fs::path(dir) / "summary.json");
        if (!f) fail(Error::Code::io, "no summary.json in " + dir);
        json j;
        f >> j;
        RunInfo r;
        r.run_id = j.at("run_id").get<std::string>();
        r.method = j.at("method").get<std::string>();
        r.sparsity = j.at("sparsity").get<double>();
        r.accuracy = j.at("final_test_accuracy").get<double>();
        r.global_sparsity = j.at("final_global_sparsity").get<double>();
        r.nonzero = j.at("nonzero_param_count").get<int64_t>();
        r.total = j.at("total_param_count").get<int64_t>();
        r.sparse_dense = j.at("sparse_dense_count").get<int64_t>();
        for (auto it = j.at("per_tensor_sparsity").begin(); it != j.at("per_tensor_sparsity").end();
             ++it)
            r.per_tensor[it.key()] = it.value().get<double>();
        runs.push_back(std::move(r));
    }

    // Accuracy vs stored parameter count (nonzeros plus all dense tensors).
    {
        std::ofstream csv(fs::path(out_dir) / "accuracy_vs_params.csv");
        csv << "run_id,method,sparsity,param_count,test_accuracy\n";
        std::map<std::string, SvgSeries> by_method;
        for (const auto& r : runs) {
            csv << r.run_id << "," << r.method << "," << r.sparsity << "," << r.nonzero << ","
                << r.accuracy << "\n";
            auto& s = by_method[r.method];
            s.label = r.method;
            s.x.push_back(double(r.nonzero));
            s.y.push_back(r.accuracy);
        }
        std::vector<SvgSeries> series;
        for (auto& [k, v] : by_method) series.push_back(v);
        write_svg_xy((fs::path(out_dir) / "accuracy_vs_params.svg").string(),
                     "Test accuracy vs stored parameters", "stored parameters (log10)",
                     "test accuracy", series, true);
    }

    // Per-layer final sparsity.
    {
        std::ofstream csv(fs::path(out_dir) / "layer_sparsity.csv");
        csv << "run_id,tensor,sparsity\n";
        std::vector<std::string> tensors;
        for (const auto& r : runs)
            for (const auto& [t, v] : r.per_tensor)
                if (std::find(tensors.begin(), tensors.end(), t) == tensors.end())
                    tensors.push_back(t);
        std::sort(tensors.begin(), tensors.end());
        std::vector<SvgSeries> series;
        for (const auto& r : runs) {
            SvgSeries s;
            s.label = r.run_id;
            for (const auto& t : tensors) {
                auto it = r.per_tensor.find(t);
                s.y.push_back(it == r.per_tensor.end() ? 0.0 : it->second);
                csv << r.run_id << "," << t << ","
                    << (it == r.per_tensor.end() ? 0.0 : it->second) << "\n";
            }
            series.push_back(std::move(s));
        }
        write_svg_bars((fs::path(out_dir) / "layer_sparsity.svg").string(),
                       "Final per-tensor sparsity", tensors, series);
    }

    // Descriptive-length accounting: (32*(1-s)+1)*N bits over the N dense
    // positions of the run's sparse tensors. The stored-parameter column
    // reconciles against nonzeros plus dense tensors, which is also what the
    // accuracy plot uses on its x axis.
    {
        std::ofstream csv(fs::path(out_dir) / "sizing.csv");
        csv << "run_id,method,sparsity,sparse_dense_positions,descriptive_length_bits,"
               "thin_dense_equivalent_count,stored_param_count\n";
        for (const auto& r : runs) {
            const SizeAccount acct = descriptive_length(r.sparse_dense, r.global_sparsity);
            csv << r.run_id << "," << r.method << "," << r.sparsity << "," << acct.dense_param_count
                << "," << acct.descriptive_length_bits << "," << acct.thin_dense_equivalent_count
                << "," << r.nonzero << "\n";
        }
    }
}

} // namespace sparsetrain
