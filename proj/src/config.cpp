// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "config.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "error.hpp"

namespace sparsetrain {

using nlohmann::json;

const char* method_name(Method m) {
    switch (m) {
        case Method::dynamic_sparse: return "dynamic_sparse";
        case Method::static_sparse: return "static_sparse";
        case Method::thin_dense: return "thin_dense";
        case Method::compressed_sparse: return "compressed_sparse";
        case Method::set: return "set";
        case Method::deepr: return "deepr";
        case Method::hashed: return "hashed";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    for (Method m : {Method::dynamic_sparse, Method::static_sparse, Method::thin_dense,
                     Method::compressed_sparse, Method::set, Method::deepr, Method::hashed})
        if (name == method_name(m)) return m;
    fail(Error::Code::config, "unknown method: " + name);
}

void validate_tiling(const std::vector<std::pair<int64_t, int64_t>>& ranges, int64_t total,
                     const std::string& what) {
    if (ranges.empty()) fail(Error::Code::config, what + ": empty schedule");
    int64_t expect = 1;
    for (const auto& [a, b] : ranges) {
        if (a != expect || b < a)
            fail(Error::Code::config, what + ": ranges must tile [1," + std::to_string(total) +
                                          "] contiguously");
        expect = b + 1;
    }
    if (expect != total + 1)
        fail(Error::Code::config,
             what + ": ranges must end at epoch " + std::to_string(total));
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& ctx) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            fail(Error::Code::config, "unknown key '" + it.key() + "' in " + ctx);
}

template <typename T>
T get_num(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) fail(Error::Code::config, "missing '" + key + "' in " + ctx);
    if (!j[key].is_number()) fail(Error::Code::config, "'" + key + "' must be a number in " + ctx);
    return j[key].get<T>();
}

// [[first,last,value], ...]
template <typename Range, typename Setter>
std::vector<Range> parse_ranges(const json& j, const std::string& key, const std::string& ctx,
                                Setter set_value) {
    if (!j.contains(key)) fail(Error::Code::config, "missing '" + key + "' in " + ctx);
    const json& arr = j[key];
    if (!arr.is_array() || arr.empty())
        fail(Error::Code::config, "'" + key + "' must be a non-empty array in " + ctx);
    std::vector<Range> out;
    for (const json& e : arr) {
        if (!e.is_array() || e.size() != 3)
            fail(Error::Code::config, "'" + key + "' entries must be [first,last,value] in " + ctx);
        Range r;
        r.first_epoch = e[0].get<int64_t>();
        r.last_epoch = e[1].get<int64_t>();
        set_value(r, e[2].get<double>());
        out.push_back(r);
    }
    return out;
}

} // namespace

void RunConfig::validate() const {
    if (epochs < 1) fail(Error::Code::config, "epochs must be >= 1");
    if (batch_size < 1) fail(Error::Code::config, "batch_size must be >= 1");
    if (momentum < 0.0 || momentum >= 1.0) fail(Error::Code::config, "momentum must lie in [0,1)");
    if (l1 < 0.0 || l2 < 0.0) fail(Error::Code::config, "regularization multipliers must be >= 0");
    if (dataset != "mnist" && dataset != "synthetic" && dataset != "cifar10")
        fail(Error::Code::config, "unknown dataset: " + dataset);
    if (eval_every < 0) fail(Error::Code::config, "eval_every must be >= 0");

    const bool sparse_method = method != Method::thin_dense && method != Method::hashed;
    if (sparse_method || method == Method::hashed) {
        if (!(sparsity > 0.0 && sparsity < 1.0))
            fail(Error::Code::config, "sparsity must lie in (0,1)");
    }

    std::vector<std::pair<int64_t, int64_t>> lr_ranges;
    for (const auto& r : lr_schedule) {
        lr_ranges.emplace_back(r.first_epoch, r.last_epoch);
        if (r.lr < 0.0) fail(Error::Code::config, "learning rates must be >= 0");
    }
    validate_tiling(lr_ranges, epochs, "lr_schedule");

    // Method-specific config must be present exactly when the method uses it.
    const bool needs_realloc = method == Method::dynamic_sparse || method == Method::set;
    if (needs_realloc != realloc.has_value())
        fail(Error::Code::config, needs_realloc
                                      ? "method requires a 'realloc' section"
                                      : "'realloc' section is only valid for dynamic_sparse/set");
    if ((method == Method::deepr) != deepr.has_value())
        fail(Error::Code::config, method == Method::deepr
                                      ? "method requires a 'deepr' section"
                                      : "'deepr' section is only valid for the deepr method");
    if ((method == Method::compressed_sparse) != compression.has_value())
        fail(Error::Code::config, method == Method::compressed_sparse
                                      ? "method requires a 'compression' section"
                                      : "'compression' section is only valid for compressed_sparse");

    if (realloc) {
        realloc->validate();
        std::vector<std::pair<int64_t, int64_t>> pr;
        for (const auto& r : realloc->period_schedule) pr.emplace_back(r.first_epoch, r.last_epoch);
        validate_tiling(pr, epochs, "realloc.period_schedule");
        if (realloc->granularity == Granularity::kernel3x3 && net.rfind("mlp", 0) == 0)
            fail(Error::Code::config, "kernel granularity requires convolutional sparse tensors");
    }
    if (deepr) {
        deepr->validate();
        std::vector<std::pair<int64_t, int64_t>> tr;
        for (const auto& r : deepr->temperature_schedule) tr.emplace_back(r.first_epoch, r.last_epoch);
        validate_tiling(tr, epochs, "deepr.temperature_schedule");
    }
    if (compression) {
        CompressionSchedule cs = *compression;
        cs.target_sparsity = sparsity;
        cs.validate();
        if (compression_lr.empty())
            fail(Error::Code::config, "compression requires its pruning-phase lr_schedule");
        const int64_t prune_epochs =
            cs.pruning_iterations * cs.epochs_between + cs.epochs_post;
        std::vector<std::pair<int64_t, int64_t>> pr;
        for (const auto& r : compression_lr) {
            pr.emplace_back(r.first_epoch, r.last_epoch);
            if (r.lr < 0.0) fail(Error::Code::config, "learning rates must be >= 0");
        }
        validate_tiling(pr, prune_epochs, "compression.lr_schedule");
    }
    if (dataset == "synthetic") {
        if (synthetic.count < 1 || synthetic.features < 1 || synthetic.num_classes < 2)
            fail(Error::Code::config, "bad synthetic dataset spec");
    }
}

double RunConfig::lr_for_epoch(int64_t epoch) const {
    for (const auto& r : lr_schedule)
        if (epoch >= r.first_epoch && epoch <= r.last_epoch) return r.lr;
    return lr_schedule.back().lr;
}

std::string RunConfig::effective_run_id() const {
    if (!run_id.empty()) return run_id;
    std::ostringstream os;
    os << method_name(method) << "_s";
    os << static_cast<int>(sparsity * 1000 + 0.5);
    os << "_seed" << seed;
    return os.str();
}

std::string RunConfig::resolved_data_dir() const {
    if (!data_dir.empty()) return data_dir;
    if (const char* env = std::getenv("SPARSETRAIN_DATA_DIR"); env && *env) return env;
    return "data";
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(Error::Code::config, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) fail(Error::Code::config, "config must be a JSON object");

    reject_unknown(j, {"run_id", "method", "net", "dataset", "sparsity", "epochs", "batch_size",
                       "lr_schedule", "momentum", "nesterov", "l1", "l2", "seed", "realloc",
                       "deepr", "compression", "hashed", "synthetic", "data_dir", "out_dir",
                       "augment", "eval_every", "verbose"},
                   "config");

    RunConfig c;
    if (j.contains("run_id")) c.run_id = j["run_id"].get<std::string>();
    if (!j.contains("method")) fail(Error::Code::config, "missing 'method'");
    c.method = method_from_name(j["method"].get<std::string>());
    if (j.contains("net")) c.net = j["net"].get<std::string>();
    if (j.contains("dataset")) c.dataset = j["dataset"].get<std::string>();
    if (j.contains("sparsity")) c.sparsity = get_num<double>(j, "sparsity", "config");
    c.epochs = get_num<int64_t>(j, "epochs", "config");
    c.batch_size = get_num<int64_t>(j, "batch_size", "config");
    c.lr_schedule = parse_ranges<LrRange>(j, "lr_schedule", "config",
                                          [](LrRange& r, double v) { r.lr = v; });
    if (j.contains("momentum")) c.momentum = get_num<double>(j, "momentum", "config");
    if (j.contains("nesterov")) c.nesterov = j["nesterov"].get<bool>();
    if (j.contains("l1")) c.l1 = get_num<double>(j, "l1", "config");
    if (j.contains("l2")) c.l2 = get_num<double>(j, "l2", "config");
    if (j.contains("seed")) c.seed = get_num<uint64_t>(j, "seed", "config");
    if (j.contains("data_dir")) c.data_dir = j["data_dir"].get<std::string>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("augment")) c.augment = j["augment"].get<bool>();
    if (j.contains("eval_every")) c.eval_every = get_num<int64_t>(j, "eval_every", "config");
    if (j.contains("verbose")) c.verbose = j["verbose"].get<bool>();

    if (j.contains("realloc")) {
        const json& r = j["realloc"];
        reject_unknown(r, {"n_prune", "tolerance", "initial_threshold", "period_schedule",
                           "granularity", "stop_epoch"},
                       "realloc");
        ReallocConfig rc;
        rc.n_prune = get_num<int64_t>(r, "n_prune", "realloc");
        rc.tolerance = get_num<double>(r, "tolerance", "realloc");
        rc.initial_threshold = get_num<double>(r, "initial_threshold", "realloc");
        rc.period_schedule = parse_ranges<PeriodRange>(
            r, "period_schedule", "realloc",
            [](PeriodRange& p, double v) { p.period = static_cast<int64_t>(v); });
        if (r.contains("granularity")) {
            const std::string g = r["granularity"].get<std::string>();
            if (g == "weight")
                rc.granularity = Granularity::weight;
            else if (g == "kernel3x3")
                rc.granularity = Granularity::kernel3x3;
            else
                fail(Error::Code::config, "granularity must be 'weight' or 'kernel3x3'");
        }
        if (r.contains("stop_epoch") && !r["stop_epoch"].is_null())
            rc.stop_epoch = get_num<int64_t>(r, "stop_epoch", "realloc");
        c.realloc = rc;
    }
    if (j.contains("deepr")) {
        const json& d = j["deepr"];
        reject_unknown(d, {"alpha", "temperature_schedule"}, "deepr");
        DeepRConfig dc;
        dc.alpha = get_num<double>(d, "alpha", "deepr");
        dc.temperature_schedule = parse_ranges<TemperatureRange>(
            d, "temperature_schedule", "deepr",
            [](TemperatureRange& t, double v) { t.temperature = v; });
        c.deepr = dc;
    }
    if (j.contains("compression")) {
        const json& p = j["compression"];
        reject_unknown(p, {"pruning_iterations", "epochs_between", "epochs_post", "lr_schedule"},
                       "compression");
        CompressionSchedule cs;
        cs.pruning_iterations = get_num<int64_t>(p, "pruning_iterations", "compression");
        cs.epochs_between = get_num<int64_t>(p, "epochs_between", "compression");
        cs.epochs_post = get_num<int64_t>(p, "epochs_post", "compression");
        c.compression = cs;
        if (p.contains("lr_schedule")) {
            c.compression_lr = parse_ranges<LrRange>(p, "lr_schedule", "compression",
                                                     [](LrRange& r, double v) { r.lr = v; });
        }
    }
    if (j.contains("hashed")) {
        const json& h = j["hashed"];
        reject_unknown(h, {"seed"}, "hashed");
        if (h.contains("seed")) c.hashed.seed = get_num<uint64_t>(h, "seed", "hashed");
    }
    if (j.contains("synthetic")) {
        const json& s = j["synthetic"];
        reject_unknown(s, {"count", "features", "classes", "margin"}, "synthetic");
        if (s.contains("count")) c.synthetic.count = get_num<int64_t>(s, "count", "synthetic");
        if (s.contains("features"))
            c.synthetic.features = get_num<int64_t>(s, "features", "synthetic");
        if (s.contains("classes")) c.synthetic.num_classes = get_num<int>(s, "classes", "synthetic");
        if (s.contains("margin")) c.synthetic.margin = get_num<double>(s, "margin", "synthetic");
    }

    c.validate();
    return c;
}

RunConfig RunConfig::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(Error::Code::io, "cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json_text(ss.str());
}

std::string RunConfig::to_json_text() const {
    json j;
    if (!run_id.empty()) j["run_id"] = run_id;
    j["method"] = method_name(method);
    j["net"] = net;
    j["dataset"] = dataset;
    j["sparsity"] = sparsity;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    json lrs = json::array();
    for (const auto& r : lr_schedule) lrs.push_back({r.first_epoch, r.last_epoch, r.lr});
    j["lr_schedule"] = lrs;
    j["momentum"] = momentum;
    j["nesterov"] = nesterov;
    j["l1"] = l1;
    j["l2"] = l2;
    j["seed"] = seed;
    if (realloc) {
        json r;
        r["n_prune"] = realloc->n_prune;
        r["tolerance"] = realloc->tolerance;
        r["initial_threshold"] = realloc->initial_threshold;
        json ps = json::array();
        for (const auto& p : realloc->period_schedule)
            ps.push_back({p.first_epoch, p.last_epoch, p.period});
        r["period_schedule"] = ps;
        r["granularity"] = realloc->granularity == Granularity::weight ? "weight" : "kernel3x3";
        if (realloc->stop_epoch) r["stop_epoch"] = *realloc->stop_epoch;
        j["realloc"] = r;
    }
    if (deepr) {
        json d;
        d["alpha"] = deepr->alpha;
        json ts = json::array();
        for (const auto& t : deepr->temperature_schedule)
            ts.push_back({t.first_epoch, t.last_epoch, t.temperature});
        d["temperature_schedule"] = ts;
        j["deepr"] = d;
    }
    if (compression) {
        json p;
        p["pruning_iterations"] = compression->pruning_iterations;
        p["epochs_between"] = compression->epochs_between;
        p["epochs_post"] = compression->epochs_post;
        json lrs2 = json::array();
        for (const auto& r : compression_lr) lrs2.push_back({r.first_epoch, r.last_epoch, r.lr});
        p["lr_schedule"] = lrs2;
        j["compression"] = p;
    }
    if (method == Method::hashed) j["hashed"] = json{{"seed", hashed.seed}};
    if (dataset == "synthetic")
        j["synthetic"] = json{{"count", synthetic.count},
                              {"features", synthetic.features},
                              {"classes", synthetic.num_classes},
                              {"margin", synthetic.margin}};
    if (!data_dir.empty()) j["data_dir"] = data_dir;
    j["out_dir"] = out_dir;
    j["augment"] = augment;
    j["eval_every"] = eval_every;
    j["verbose"] = verbose;
    return j.dump(2);
}

void RunConfig::override_field(const std::string& key, const std::string& value) {
    try {
        if (key == "seed")
            seed = std::stoull(value);
        else if (key == "method")
            method = method_from_name(value);
        else if (key == "sparsity")
            sparsity = std::stod(value);
        else if (key == "epochs")
            epochs = std::stoll(value);
        else if (key == "data_dir")
            data_dir = value;
        else if (key == "out_dir")
            out_dir = value;
        else if (key == "run_id")
            run_id = value;
        else if (key == "net")
            net = value;
        else if (key == "dataset")
            dataset = value;
        else if (key == "verbose")
            verbose = value == "1" || value == "true";
        else
            fail(Error::Code::invalid_argument, "unknown override key: " + key);
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        fail(Error::Code::invalid_argument, "bad value for override " + key + ": " + value);
    }
}

} // namespace sparsetrain
