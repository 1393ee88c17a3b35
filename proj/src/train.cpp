// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "error.hpp"

namespace sparsetrain {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Static baselines (and lottery tickets) train for double the configured
// epochs; nominal schedule epochs map onto actual epochs stretched twofold.
bool is_stretched(Method m) { return m == Method::static_sparse || m == Method::thin_dense; }

} // namespace

namespace {

// Train and test share one generated pool (same class centers); the first
// `count` samples train, the tail is held out. The pool depends on the
// dataset spec, not on the run seed, so methods compared across seeds see
// the same data.
Dataset synthetic_split(const RunConfig& cfg, bool train) {
    const int64_t test_count = std::max<int64_t>(cfg.synthetic.count / 5, 64);
    const Dataset full = synthetic_classification(
        cfg.synthetic.count + test_count, cfg.synthetic.features, cfg.synthetic.num_classes,
        cfg.synthetic.margin, 0xDA7Aull);
    const int64_t begin = train ? 0 : cfg.synthetic.count;
    const int64_t count = train ? cfg.synthetic.count : test_count;
    Dataset out;
    out.num_classes = full.num_classes;
    out.split = train ? "train" : "test";
    const int64_t stride = full.images.numel() / full.count();
    out.images = Tensor({count, cfg.synthetic.features});
    out.labels.resize(size_t(count));
    for (int64_t i = 0; i < count; ++i) {
        std::copy_n(full.images.ptr() + (begin + i) * stride, stride, out.images.ptr() + i * stride);
        out.labels[size_t(i)] = full.labels[size_t(begin + i)];
    }
    return out;
}

} // namespace

Dataset load_train_split(const RunConfig& cfg) {
    if (cfg.dataset == "mnist") return load_mnist_split(cfg.resolved_data_dir(), true);
    if (cfg.dataset == "synthetic") return synthetic_split(cfg, true);
    if (cfg.dataset == "cifar10") {
        std::vector<std::string> paths;
        for (int i = 1; i <= 5; ++i)
            paths.push_back((fs::path(cfg.resolved_data_dir()) /
                             ("data_batch_" + std::to_string(i) + ".bin"))
                                .string());
        return load_cifar10_batches(paths);
    }
    fail(Error::Code::config, "unknown dataset: " + cfg.dataset);
}

Dataset load_test_split(const RunConfig& cfg) {
    if (cfg.dataset == "mnist") return load_mnist_split(cfg.resolved_data_dir(), false);
    if (cfg.dataset == "synthetic") return synthetic_split(cfg, false);
    if (cfg.dataset == "cifar10") {
        return load_cifar10_batches(
            {(fs::path(cfg.resolved_data_dir()) / "test_batch.bin").string()});
    }
    fail(Error::Code::config, "unknown dataset: " + cfg.dataset);
}

namespace {

void gather_batch(const Dataset& ds, const std::vector<int64_t>& order, int64_t start,
                  int64_t count, Tensor& batch, std::vector<int>& labels) {
    std::vector<int64_t> shape = ds.images.shape;
    shape[0] = count;
    if (batch.shape != shape) batch = Tensor(shape);
    const int64_t stride = ds.images.numel() / ds.images.dim(0);
    labels.resize(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) {
        const int64_t src = order.empty() ? start + i : order[static_cast<size_t>(start + i)];
        std::copy_n(ds.images.ptr() + src * stride, stride, batch.ptr() + i * stride);
        labels[static_cast<size_t>(i)] = ds.labels[static_cast<size_t>(src)];
    }
}

class Trainer {
public:
    explicit Trainer(const RunConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        total_epochs_ = is_stretched(cfg_.method) ? 2 * cfg_.epochs : cfg_.epochs;
        if (cfg_.method == Method::compressed_sparse)
            total_epochs_ = cfg_.epochs + compression().pruning_iterations * compression().epochs_between +
                            compression().epochs_post;

        NetworkSpec spec = build_network(cfg_.net);
        if (cfg_.method == Method::thin_dense) spec = build_thin_dense(spec, cfg_.sparsity);
        if (cfg_.method == Method::hashed)
            for (auto& l : spec.layers) l.sparse = false;  // sharing, not masking
        model_ = Model::build(spec);

        streams_ = RngStreams::from_master(cfg_.seed);
        model_.init_params(streams_.init);

        init_snapshot_.clear();
        for (const auto& p : model_.params) init_snapshot_.push_back(p.values);

        const bool masked_method =
            cfg_.method == Method::dynamic_sparse || cfg_.method == Method::static_sparse ||
            cfg_.method == Method::set || cfg_.method == Method::deepr;
        if (masked_method) {
            const int64_t group = (cfg_.realloc && cfg_.realloc->granularity == Granularity::kernel3x3)
                                      ? 9
                                      : 1;
            sample_sparse_masks(model_.params, cfg_.sparsity, streams_.init, group);
        }
        opt_ = SgdOptimizer(cfg_.momentum, cfg_.nesterov, cfg_.l1, cfg_.l2);
        opt_.attach(model_);

        if (cfg_.realloc) rstate_ = ReallocState::initial(*cfg_.realloc);
        if (cfg_.method == Method::deepr) deepr_state_ = DeepRState::init(model_.params, streams_.init);
        if (cfg_.method == Method::hashed) {
            hashed_ = build_hashed_tensors(model_, cfg_.sparsity, cfg_.hashed);
            for (auto& h : hashed_) {
                hashed_velocity_.emplace_back(std::vector<int64_t>{h.unique_count});
                h.expand_into(model_.params[static_cast<size_t>(h.param_index)].values);
            }
        }
        sparse_indices_ = model_.sparse_param_indices();
    }

    // Restore every piece of state from a checkpoint (resume path).
    void restore(const Checkpoint& ck) {
        if (ck.params.size() != model_.params.size())
            fail(Error::Code::io, "checkpoint does not match the configured model");
        for (size_t i = 0; i < ck.params.size(); ++i) {
            if (ck.params[i].values.shape != model_.params[i].values.shape)
                fail(Error::Code::io, "checkpoint tensor shape mismatch at " + model_.params[i].name);
            model_.params[i] = ck.params[i];
        }
        opt_.velocity() = ck.velocity;
        init_snapshot_ = ck.init_snapshot;
        model_.bn_running_mean = ck.bn_running_mean;
        model_.bn_running_var = ck.bn_running_var;
        streams_.init.set_state(ck.rng_init);
        streams_.shuffle.set_state(ck.rng_shuffle);
        streams_.realloc.set_state(ck.rng_realloc);
        streams_.noise.set_state(ck.rng_noise);
        rstate_ = ck.realloc_state;
        epoch_done_ = ck.epoch_done;
        iteration_ = ck.iteration_done;
        iters_since_realloc_ = ck.iters_since_realloc;
        compress_events_done_ = ck.compress_events_done;
        if (cfg_.method == Method::deepr) deepr_state_.signs = ck.deepr_signs;
        if (cfg_.method == Method::hashed) {
            for (size_t i = 0; i < hashed_.size(); ++i) hashed_[i].unique = ck.hashed_unique[i];
            hashed_velocity_ = ck.hashed_velocity;
        }
    }

    // Lottery-ticket setup: final mask from the source checkpoint, values
    // from the original dense init snapshot or from this trainer's fresh
    // init, mask frozen (method must be static_sparse).
    void apply_ticket(const Checkpoint& source, bool fresh_random_init) {
        if (source.params.size() != model_.params.size())
            fail(Error::Code::io, "ticket source does not match the configured model");
        for (size_t i = 0; i < model_.params.size(); ++i) {
            MaskedTensor& p = model_.params[i];
            p.mask = source.params[i].mask;
            // Dense (pre-mask) init values: the source snapshot reproduces
            // the original initialization, this run's own snapshot gives a
            // fresh random one.
            p.values = fresh_random_init ? init_snapshot_[i] : source.init_snapshot[i];
            p.apply_mask();
        }
        opt_.sync_mask(model_);
    }

    RunResult run() {
        const std::string run_dir =
            (fs::path(cfg_.out_dir) / cfg_.effective_run_id()).string();
        fs::create_directories(run_dir);
        {
            std::ofstream cf(fs::path(run_dir) / "config.json");
            cf << cfg_.to_json_text() << "\n";
        }
        std::vector<std::string> names;
        for (int i : sparse_indices_) names.push_back(model_.params[static_cast<size_t>(i)].name);
        log_.open(run_dir, names);

        train_data_ = load_train_split(cfg_);
        test_data_ = load_test_split(cfg_);
        if (train_data_.num_classes != static_cast<int>(model_.net.num_classes()))
            fail(Error::Code::config, "dataset classes do not match the network");

        std::vector<double> epoch_seconds;
        double last_loss = 0.0, last_acc = std::nan("");
        for (int64_t e = epoch_done_ + 1; e <= total_epochs_; ++e) {
            const auto t0 = Clock::now();
            last_loss = run_epoch(e);
            const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
            epoch_seconds.push_back(secs);

            const bool eval_now =
                cfg_.eval_every > 0 ? (e % cfg_.eval_every == 0 || e == total_epochs_)
                                    : e == total_epochs_;
            if (eval_now) last_acc = evaluate(model_, test_data_, cfg_.batch_size);

            EpochRow row;
            row.epoch = e;
            row.train_loss = last_loss;
            row.test_accuracy = eval_now ? last_acc : std::nan("");
            row.wall_seconds = secs;
            const SparsityReport rep = SparsityReport::compute(model_.params);
            row.global_sparsity = rep.global_sparsity;
            for (const auto& r : rep.per_tensor) row.per_tensor_sparsity.push_back(r.sparsity);
            log_.append_epoch(row);

            if (cfg_.verbose)
                std::fprintf(stderr, "[%s] epoch %lld/%lld loss %.4f acc %s (%.2fs)\n",
                             cfg_.effective_run_id().c_str(), static_cast<long long>(e),
                             static_cast<long long>(total_epochs_), last_loss,
                             eval_now ? std::to_string(last_acc).c_str() : "-", secs);

            epoch_done_ = e;
            save_checkpoint(run_dir);
        }
        if (total_epochs_ == 0 || std::isnan(last_acc))
            last_acc = evaluate(model_, test_data_, cfg_.batch_size);

        RunResult res;
        res.run_dir = run_dir;
        res.final_test_accuracy = last_acc;
        res.final_train_loss = last_loss;
        const SparsityReport rep = SparsityReport::compute(model_.params);
        res.final_global_sparsity = rep.global_sparsity;
        for (const auto& r : rep.per_tensor) {
            res.per_tensor_sparsity.push_back(r.sparsity);
            res.sparse_tensor_names.push_back(r.name);
        }
        res.nonzero_param_count = stored_param_count();
        res.total_param_count = model_.dense_param_count();
        res.sparse_dense_count = rep.total_dense;
        res.median_epoch_seconds = median_of(epoch_seconds);
        res.epochs_run = total_epochs_;
        res.checkpoint_path = (fs::path(run_dir) / "checkpoint.bin").string();
        save_checkpoint(run_dir);
        write_summary(run_dir, res);
        return res;
    }

    Model& model() { return model_; }
    int64_t total_epochs() const { return total_epochs_; }

private:
    CompressionSchedule compression() const {
        CompressionSchedule cs = *cfg_.compression;
        cs.target_sparsity = cfg_.sparsity;
        return cs;
    }

    int64_t nominal_epoch(int64_t actual) const {
        return is_stretched(cfg_.method) ? (actual + 1) / 2 : actual;
    }

    double lr_for_actual_epoch(int64_t e) const {
        if (cfg_.method == Method::compressed_sparse && e > cfg_.epochs) {
            const int64_t pe = e - cfg_.epochs;
            for (const auto& r : cfg_.compression_lr)
                if (pe >= r.first_epoch && pe <= r.last_epoch) return r.lr;
            return cfg_.compression_lr.back().lr;
        }
        return cfg_.lr_for_epoch(nominal_epoch(e));
    }

    bool realloc_active(int64_t e) const {
        if (cfg_.method != Method::dynamic_sparse && cfg_.method != Method::set) return false;
        if (cfg_.realloc->stop_epoch && nominal_epoch(e) > *cfg_.realloc->stop_epoch) return false;
        return true;
    }

    double run_epoch(int64_t e) {
        // Compression: pruning events fire at the start of pruning-phase
        // epochs 1, 1+between, ..., 1+(T-1)*between.
        if (cfg_.method == Method::compressed_sparse && e > cfg_.epochs) {
            const CompressionSchedule cs = compression();
            const int64_t pe = e - cfg_.epochs;
            if (compress_events_done_ < cs.pruning_iterations &&
                pe == 1 + compress_events_done_ * cs.epochs_between) {
                const double target = cs.sparsity_at(compress_events_done_ + 1);
                prune_global_to_sparsity(model_.params, target);
                opt_.sync_mask(model_);
                ++compress_events_done_;
            }
        }

        const double lr = lr_for_actual_epoch(e);
        const int64_t n = train_data_.count();
        std::vector<int64_t> order(static_cast<size_t>(n));
        std::iota(order.begin(), order.end(), int64_t{0});
        for (int64_t i = n - 1; i > 0; --i) {
            const int64_t j = static_cast<int64_t>(streams_.shuffle.next_below(static_cast<uint64_t>(i + 1)));
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
        }

        const int64_t period =
            cfg_.realloc ? cfg_.realloc->period_for_epoch(nominal_epoch(e)) : 0;

        Tensor batch;
        std::vector<int> labels;
        ForwardCache cache;
        double loss_sum = 0.0;
        int64_t batches = 0;
        for (int64_t start = 0; start < n; start += cfg_.batch_size) {
            const int64_t count = std::min<int64_t>(cfg_.batch_size, n - start);
            gather_batch(train_data_, order, start, count, batch, labels);
            if (cfg_.augment && cfg_.dataset == "cifar10")
                augment_batch(batch, streams_.shuffle, true, 4);

            if (cfg_.method == Method::hashed)
                for (auto& h : hashed_)
                    h.expand_into(model_.params[static_cast<size_t>(h.param_index)].values);

            const Tensor logits = forward(model_, batch, &cache, true);
            Tensor dlogits;
            const double loss = softmax_cross_entropy_loss(logits, labels, &dlogits);
            if (!std::isfinite(loss))
                fail(Error::Code::numeric, "training diverged (non-finite loss)");
            loss_sum += loss;
            ++batches;
            const std::vector<Tensor> grads = backward(model_, cache, dlogits);

            if (lr > 0.0) {  // lr == 0 freezes parameters (degenerate schedules)
                if (cfg_.method == Method::deepr) {
                    opt_.step(model_, grads, lr, sparse_indices_);
                    deepr_step(model_.params, deepr_state_, grads, sparse_indices_, lr,
                               cfg_.deepr->alpha,
                               cfg_.deepr->temperature_for_epoch(nominal_epoch(e)), streams_.noise,
                               streams_.realloc);
                } else if (cfg_.method == Method::hashed) {
                    std::vector<int> skip;
                    for (const auto& h : hashed_) skip.push_back(h.param_index);
                    opt_.step(model_, grads, lr, skip);
                    hashed_update(grads, lr);
                } else {
                    opt_.step(model_, grads, lr);
                }
            }
            ++iteration_;

            if (realloc_active(e)) {
                ++iters_since_realloc_;
                if (iters_since_realloc_ >= period) {
                    iters_since_realloc_ = 0;
                    if (cfg_.method == Method::dynamic_sparse) {
                        const StepReport rep =
                            realloc_step(model_.params, rstate_, *cfg_.realloc, streams_.realloc);
                        opt_.sync_mask(model_);
                        log_.append_step(e, iteration_, rep);
                    } else {
                        set_step(model_.params, cfg_.realloc->n_prune, streams_.realloc);
                        opt_.sync_mask(model_);
                    }
                }
            }
        }
        return loss_sum / double(std::max<int64_t>(batches, 1));
    }

    void hashed_update(const std::vector<Tensor>& grads, double lr) {
        for (size_t hi = 0; hi < hashed_.size(); ++hi) {
            HashedTensor& h = hashed_[hi];
            Tensor du = h.gather_gradient(grads[static_cast<size_t>(h.param_index)]);
            Tensor& vel = hashed_velocity_[hi];
            for (int64_t i = 0; i < h.unique_count; ++i) {
                double w = h.unique[i];
                double ge = du[i];
                if (cfg_.l2 != 0.0) ge += cfg_.l2 * w;
                if (cfg_.l1 != 0.0 && w != 0.0) ge += cfg_.l1 * (w > 0.0 ? 1.0 : -1.0);
                if (cfg_.momentum != 0.0) {
                    const double v = cfg_.momentum * vel[i] + ge;
                    vel[i] = v;
                    w -= lr * (cfg_.nesterov ? ge + cfg_.momentum * v : v);
                } else {
                    w -= lr * ge;
                }
                h.unique[i] = w;
            }
            h.expand_into(model_.params[static_cast<size_t>(h.param_index)].values);
        }
    }

    int64_t stored_param_count() const {
        if (cfg_.method == Method::hashed) {
            int64_t n = 0;
            std::vector<bool> is_hashed(model_.params.size(), false);
            for (const auto& h : hashed_) {
                n += h.unique_count;
                is_hashed[static_cast<size_t>(h.param_index)] = true;
            }
            for (size_t i = 0; i < model_.params.size(); ++i)
                if (!is_hashed[i]) n += model_.params[i].numel();
            return n;
        }
        return model_.nonzero_param_count();
    }

    void save_checkpoint(const std::string& run_dir) {
        Checkpoint ck;
        ck.config_json = cfg_.to_json_text();
        ck.epoch_done = epoch_done_;
        ck.iteration_done = iteration_;
        ck.iters_since_realloc = iters_since_realloc_;
        ck.compress_events_done = compress_events_done_;
        ck.rng_init = streams_.init.state();
        ck.rng_shuffle = streams_.shuffle.state();
        ck.rng_realloc = streams_.realloc.state();
        ck.rng_noise = streams_.noise.state();
        ck.realloc_state = rstate_;
        ck.params = model_.params;
        ck.velocity = opt_.velocity();
        ck.init_snapshot = init_snapshot_;
        ck.bn_running_mean = model_.bn_running_mean;
        ck.bn_running_var = model_.bn_running_var;
        if (cfg_.method == Method::deepr) ck.deepr_signs = deepr_state_.signs;
        if (cfg_.method == Method::hashed) {
            for (const auto& h : hashed_) ck.hashed_unique.push_back(h.unique);
            ck.hashed_velocity = hashed_velocity_;
        }
        const std::string tmp = (fs::path(run_dir) / "checkpoint.bin.tmp").string();
        ck.save(tmp);
        fs::rename(tmp, fs::path(run_dir) / "checkpoint.bin");
    }

    void write_summary(const std::string& run_dir, const RunResult& res) {
        nlohmann::json j;
        j["run_id"] = cfg_.effective_run_id();
        j["method"] = method_name(cfg_.method);
        j["net"] = cfg_.net;
        j["dataset"] = cfg_.dataset;
        j["seed"] = cfg_.seed;
        j["sparsity"] = cfg_.sparsity;
        j["epochs_run"] = total_epochs_;
        j["final_test_accuracy"] = res.final_test_accuracy;
        j["final_train_loss"] = res.final_train_loss;
        j["final_global_sparsity"] = res.final_global_sparsity;
        j["nonzero_param_count"] = res.nonzero_param_count;
        j["total_param_count"] = res.total_param_count;
        j["sparse_dense_count"] = res.sparse_dense_count;
        j["median_epoch_seconds"] = res.median_epoch_seconds;
        nlohmann::json pt = nlohmann::json::object();
        for (size_t i = 0; i < res.sparse_tensor_names.size(); ++i)
            pt[res.sparse_tensor_names[i]] = res.per_tensor_sparsity[i];
        j["per_tensor_sparsity"] = pt;
        std::ofstream f(fs::path(run_dir) / "summary.json");
        f << j.dump(2) << "\n";
    }

    RunConfig cfg_;
    int64_t total_epochs_ = 0;
    Model model_;
    SgdOptimizer opt_;
    RngStreams streams_;
    Dataset train_data_, test_data_;
    MetricLog log_;
    ReallocState rstate_;
    DeepRState deepr_state_;
    std::vector<HashedTensor> hashed_;
    std::vector<Tensor> hashed_velocity_;
    std::vector<Tensor> init_snapshot_;
    std::vector<int> sparse_indices_;
    int64_t epoch_done_ = 0;
    int64_t iteration_ = 0;
    int64_t iters_since_realloc_ = 0;
    int64_t compress_events_done_ = 0;
};

} // namespace

double evaluate(Model& m, const Dataset& test, int64_t batch_size) {
    const int64_t n = test.count();
    Tensor batch;
    std::vector<int> labels;
    int64_t correct = 0;
    for (int64_t start = 0; start < n; start += batch_size) {
        const int64_t count = std::min<int64_t>(batch_size, n - start);
        gather_batch(test, {}, start, count, batch, labels);
        const Tensor logits = forward(m, batch, nullptr, false);
        const int64_t classes = logits.dim(1);
        for (int64_t i = 0; i < count; ++i) {
            const double* row = logits.ptr() + i * classes;
            int64_t arg = 0;
            for (int64_t j = 1; j < classes; ++j)
                if (row[j] > row[arg]) arg = j;
            if (static_cast<int>(arg) == labels[static_cast<size_t>(i)]) ++correct;
        }
    }
    return double(correct) / double(n);
}

RunResult train(const RunConfig& cfg) {
    Trainer t(cfg);
    return t.run();
}

RunResult resume(const std::string& run_dir) {
    const Checkpoint ck = Checkpoint::load((fs::path(run_dir) / "checkpoint.bin").string());
    const RunConfig cfg = RunConfig::from_json_text(ck.config_json);
    Trainer t(cfg);
    t.restore(ck);
    return t.run();
}

RunResult run_ticket(const TicketOptions& opt) {
    const Checkpoint source =
        Checkpoint::load((fs::path(opt.source_run_dir) / "checkpoint.bin").string());
    RunConfig cfg = RunConfig::from_json_text(source.config_json);
    if (cfg.method != Method::dynamic_sparse && cfg.method != Method::set &&
        cfg.method != Method::static_sparse)
        fail(Error::Code::invalid_argument, "ticket source must be a masked training run");

    const std::string source_id = cfg.effective_run_id();
    cfg.method = Method::static_sparse;  // frozen mask, 2x epochs
    cfg.realloc.reset();
    cfg.seed = opt.seed;
    cfg.run_id = source_id + (opt.fresh_random_init ? "_ticket_fresh" : "_ticket_orig");
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;

    if (opt.epochs_override && *opt.epochs_override == 0) {
        // Evaluate the masked initialization without training.
        Trainer t(cfg);
        t.apply_ticket(source, opt.fresh_random_init);
        Dataset test = load_test_split(cfg);
        RunResult res;
        res.final_test_accuracy = evaluate(t.model(), test, cfg.batch_size);
        const SparsityReport rep = SparsityReport::compute(t.model().params);
        res.final_global_sparsity = rep.global_sparsity;
        res.nonzero_param_count = t.model().nonzero_param_count();
        return res;
    }

    Trainer t(cfg);
    t.apply_ticket(source, opt.fresh_random_init);
    return t.run();
}

double evaluate_checkpoint(const std::string& run_dir) {
    const Checkpoint ck = Checkpoint::load((fs::path(run_dir) / "checkpoint.bin").string());
    const RunConfig cfg = RunConfig::from_json_text(ck.config_json);
    Trainer t(cfg);
    t.restore(ck);
    Dataset test = load_test_split(cfg);
    return evaluate(t.model(), test, cfg.batch_size);
}

} // namespace sparsetrain
