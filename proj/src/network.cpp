// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "network.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "error.hpp"

namespace sparsetrain {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

} // namespace

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::linear: return "linear";
        case LayerKind::conv3x3: return "conv3x3";
        case LayerKind::relu: return "relu";
        case LayerKind::batchnorm: return "batchnorm";
        case LayerKind::global_avg_pool: return "global_avg_pool";
        case LayerKind::softmax_cross_entropy: return "softmax_cross_entropy";
    }
    return "?";
}

LayerSpec LayerSpec::linear(int64_t in, int64_t out, bool sparse) {
    LayerSpec s;
    s.kind = LayerKind::linear;
    s.in = in;
    s.out = out;
    s.sparse = sparse;
    return s;
}

LayerSpec LayerSpec::conv3x3(int64_t c_in, int64_t c_out, int64_t stride, bool sparse) {
    LayerSpec s;
    s.kind = LayerKind::conv3x3;
    s.in = c_in;
    s.out = c_out;
    s.stride = stride;
    s.sparse = sparse;
    return s;
}

LayerSpec LayerSpec::relu() {
    LayerSpec s;
    s.kind = LayerKind::relu;
    return s;
}

LayerSpec LayerSpec::batchnorm(int64_t channels) {
    LayerSpec s;
    s.kind = LayerKind::batchnorm;
    s.channels = channels;
    return s;
}

LayerSpec LayerSpec::global_avg_pool() {
    LayerSpec s;
    s.kind = LayerKind::global_avg_pool;
    return s;
}

LayerSpec LayerSpec::softmax_cross_entropy() {
    LayerSpec s;
    s.kind = LayerKind::softmax_cross_entropy;
    return s;
}

int64_t NetworkSpec::validate() const {
    if (layers.empty()) fail(Error::Code::config, "network has no layers");
    if (input_shape.empty()) fail(Error::Code::config, "network input shape is empty");

    std::vector<int64_t> cur = input_shape;
    auto shape_text = [](const std::vector<int64_t>& s) {
        std::ostringstream os;
        for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
        return os.str();
    };

    for (size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        const bool last = i + 1 == layers.size();
        switch (l.kind) {
            case LayerKind::linear:
                if (cur.size() != 1 || cur[0] != l.in)
                    fail(Error::Code::config, "layer " + std::to_string(i) + " (linear) expects " +
                                                  std::to_string(l.in) + " features, got " +
                                                  shape_text(cur));
                if (l.out <= 0) fail(Error::Code::config, "linear output size must be positive");
                cur = {l.out};
                break;
            case LayerKind::conv3x3: {
                if (cur.size() != 3 || cur[0] != l.in)
                    fail(Error::Code::config, "layer " + std::to_string(i) + " (conv3x3) expects " +
                                                  std::to_string(l.in) + " channels, got " +
                                                  shape_text(cur));
                if (l.stride < 1) fail(Error::Code::config, "conv stride must be >= 1");
                const int64_t ho = (cur[1] - 1) / l.stride + 1;
                const int64_t wo = (cur[2] - 1) / l.stride + 1;
                cur = {l.out, ho, wo};
                break;
            }
            case LayerKind::relu:
                break;
            case LayerKind::batchnorm:
                if ((cur.size() != 1 && cur.size() != 3) || cur[0] != l.channels)
                    fail(Error::Code::config, "layer " + std::to_string(i) + " (batchnorm) expects " +
                                                  std::to_string(l.channels) + " channels, got " +
                                                  shape_text(cur));
                break;
            case LayerKind::global_avg_pool:
                if (cur.size() != 3)
                    fail(Error::Code::config, "global_avg_pool needs a CxHxW input, got " +
                                                  shape_text(cur));
                cur = {cur[0]};
                break;
            case LayerKind::softmax_cross_entropy:
                if (!last) fail(Error::Code::config, "softmax_cross_entropy must be the last layer");
                if (cur.size() != 1 || cur[0] < 2)
                    fail(Error::Code::config, "softmax_cross_entropy needs >=2 logits, got " +
                                                  shape_text(cur));
                return cur[0];
        }
    }
    fail(Error::Code::config, "network must end in a softmax_cross_entropy layer");
}

NetworkSpec build_network(const std::string& name) {
    NetworkSpec spec;
    spec.name = name;
    if (name == "lenet300100") {
        spec.input_shape = {784};
        spec.layers = {
            LayerSpec::linear(784, 300, true),
            LayerSpec::relu(),
            LayerSpec::linear(300, 100, true),
            LayerSpec::relu(),
            LayerSpec::linear(100, 10, true),
            LayerSpec::softmax_cross_entropy(),
        };
    } else if (name.rfind("mlp:", 0) == 0) {
        std::vector<int64_t> dims;
        std::stringstream ss(name.substr(4));
        std::string part;
        while (std::getline(ss, part, '-')) {
            try {
                dims.push_back(std::stoll(part));
            } catch (const std::exception&) {
                fail(Error::Code::config, "bad mlp spec: " + name);
            }
        }
        if (dims.size() < 2) fail(Error::Code::config, "mlp spec needs at least in-out: " + name);
        spec.input_shape = {dims[0]};
        for (size_t i = 0; i + 1 < dims.size(); ++i) {
            spec.layers.push_back(LayerSpec::linear(dims[i], dims[i + 1], true));
            if (i + 2 < dims.size()) spec.layers.push_back(LayerSpec::relu());
        }
        spec.layers.push_back(LayerSpec::softmax_cross_entropy());
    } else if (name == "cnn8") {
        // First conv, downsampling convs and the classifier stay dense.
        spec.input_shape = {3, 32, 32};
        auto block = [&](int64_t cin, int64_t cout, int64_t stride, bool sparse) {
            spec.layers.push_back(LayerSpec::batchnorm(cin));
            spec.layers.push_back(LayerSpec::relu());
            spec.layers.push_back(LayerSpec::conv3x3(cin, cout, stride, sparse));
        };
        spec.layers.push_back(LayerSpec::conv3x3(3, 16, 1, false));
        block(16, 16, 1, true);
        block(16, 32, 2, false);
        block(32, 32, 1, true);
        block(32, 64, 2, false);
        block(64, 64, 1, true);
        spec.layers.push_back(LayerSpec::batchnorm(64));
        spec.layers.push_back(LayerSpec::relu());
        spec.layers.push_back(LayerSpec::global_avg_pool());
        spec.layers.push_back(LayerSpec::linear(64, 10, false));
        spec.layers.push_back(LayerSpec::softmax_cross_entropy());
    } else {
        fail(Error::Code::config, "unknown network: " + name);
    }
    spec.validate();
    return spec;
}

Model Model::build(const NetworkSpec& spec) {
    spec.validate();
    Model m;
    m.net = spec;
    m.refs.resize(spec.layers.size());
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const std::string prefix = "l" + std::to_string(i);
        switch (l.kind) {
            case LayerKind::linear:
                m.refs[i].weight = static_cast<int>(m.params.size());
                m.params.emplace_back(prefix + ".weight", std::vector<int64_t>{l.out, l.in}, l.sparse);
                m.refs[i].bias = static_cast<int>(m.params.size());
                m.params.emplace_back(prefix + ".bias", std::vector<int64_t>{l.out}, false);
                break;
            case LayerKind::conv3x3:
                m.refs[i].weight = static_cast<int>(m.params.size());
                m.params.emplace_back(prefix + ".weight",
                                      std::vector<int64_t>{l.out, l.in, 3, 3}, l.sparse);
                m.refs[i].bias = static_cast<int>(m.params.size());
                m.params.emplace_back(prefix + ".bias", std::vector<int64_t>{l.out}, false);
                break;
            case LayerKind::batchnorm:
                m.refs[i].gamma = static_cast<int>(m.params.size());
                m.params.emplace_back(prefix + ".gamma", std::vector<int64_t>{l.channels}, false);
                m.refs[i].beta = static_cast<int>(m.params.size());
                m.params.emplace_back(prefix + ".beta", std::vector<int64_t>{l.channels}, false);
                m.refs[i].bn_slot = static_cast<int>(m.bn_running_mean.size());
                m.bn_running_mean.emplace_back(std::vector<int64_t>{l.channels});
                m.bn_running_var.emplace_back(std::vector<int64_t>{l.channels});
                m.bn_running_var.back().fill(1.0);
                break;
            default:
                break;
        }
    }
    return m;
}

void Model::init_params(Rng& rng) {
    for (size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        const LayerRefs& r = refs[i];
        if (l.kind == LayerKind::linear || l.kind == LayerKind::conv3x3) {
            MaskedTensor& w = params[static_cast<size_t>(r.weight)];
            const double fan_in = l.kind == LayerKind::linear ? double(l.in) : double(l.in) * 9.0;
            const double fan_out = l.kind == LayerKind::linear ? double(l.out) : double(l.out) * 9.0;
            const double limit = std::sqrt(6.0 / (fan_in + fan_out));
            for (int64_t k = 0; k < w.numel(); ++k)
                w.values[k] = (2.0 * rng.next_uniform() - 1.0) * limit;
            params[static_cast<size_t>(r.bias)].values.fill(0.0);
        } else if (l.kind == LayerKind::batchnorm) {
            params[static_cast<size_t>(r.gamma)].values.fill(1.0);
            params[static_cast<size_t>(r.beta)].values.fill(0.0);
        }
    }
}

std::vector<int> Model::sparse_param_indices() const {
    std::vector<int> out;
    for (size_t i = 0; i < params.size(); ++i)
        if (params[i].sparse) out.push_back(static_cast<int>(i));
    return out;
}

int64_t Model::nonzero_param_count() const {
    int64_t n = 0;
    for (const auto& p : params) n += p.sparse ? p.active_count() : p.numel();
    return n;
}

int64_t Model::dense_param_count() const {
    int64_t n = 0;
    for (const auto& p : params) n += p.numel();
    return n;
}

namespace {

// im2col for 3x3 kernels with padding 1. cols is (cin*9) x (ho*wo).
void im2col3x3(const double* x, int64_t cin, int64_t h, int64_t w, int64_t stride,
               int64_t ho, int64_t wo, double* cols) {
    for (int64_t c = 0; c < cin; ++c) {
        const double* xc = x + c * h * w;
        for (int64_t kh = 0; kh < 3; ++kh) {
            for (int64_t kw = 0; kw < 3; ++kw) {
                double* row = cols + ((c * 3 + kh) * 3 + kw) * (ho * wo);
                for (int64_t oh = 0; oh < ho; ++oh) {
                    const int64_t ih = oh * stride + kh - 1;
                    for (int64_t ow = 0; ow < wo; ++ow) {
                        const int64_t iw = ow * stride + kw - 1;
                        row[oh * wo + ow] = (ih >= 0 && ih < h && iw >= 0 && iw < w)
                                                ? xc[ih * w + iw]
                                                : 0.0;
                    }
                }
            }
        }
    }
}

// Transpose of im2col: scatter-add cols back into the (padded) input grid.
void col2im3x3(const double* cols, int64_t cin, int64_t h, int64_t w, int64_t stride,
               int64_t ho, int64_t wo, double* dx) {
    for (int64_t c = 0; c < cin; ++c) {
        double* dc = dx + c * h * w;
        for (int64_t kh = 0; kh < 3; ++kh) {
            for (int64_t kw = 0; kw < 3; ++kw) {
                const double* row = cols + ((c * 3 + kh) * 3 + kw) * (ho * wo);
                for (int64_t oh = 0; oh < ho; ++oh) {
                    const int64_t ih = oh * stride + kh - 1;
                    if (ih < 0 || ih >= h) continue;
                    for (int64_t ow = 0; ow < wo; ++ow) {
                        const int64_t iw = ow * stride + kw - 1;
                        if (iw >= 0 && iw < w) dc[ih * w + iw] += row[oh * wo + ow];
                    }
                }
            }
        }
    }
}

struct Shape4 {
    int64_t b, c, h, w;
};

Shape4 as4(const Tensor& t) {
    if (t.ndim() == 4) return {t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
    if (t.ndim() == 2) return {t.dim(0), t.dim(1), 1, 1};
    fail(Error::Code::internal, "expected 2-D or 4-D activation, got " + t.shape_str());
}

} // namespace

Tensor forward(Model& m, const Tensor& batch, ForwardCache* cache, bool training) {
    if (batch.ndim() < 2)
        fail(Error::Code::invalid_argument, "batch must carry a leading batch dimension");
    {
        std::vector<int64_t> per_sample(batch.shape.begin() + 1, batch.shape.end());
        if (per_sample != m.net.input_shape)
            fail(Error::Code::invalid_argument,
                 "batch shape " + batch.shape_str() + " does not match network input");
    }

    if (cache) {
        cache->training = training;
        cache->inputs.assign(m.net.layers.size(), Tensor{});
        cache->bn.assign(m.bn_running_mean.size(), {});
    }

    Tensor cur = batch;
    for (size_t i = 0; i < m.net.layers.size(); ++i) {
        const LayerSpec& l = m.net.layers[i];
        if (l.kind == LayerKind::softmax_cross_entropy) break;
        if (cache) cache->inputs[i] = cur;
        const Model::LayerRefs& r = m.refs[i];

        switch (l.kind) {
            case LayerKind::linear: {
                const int64_t b = cur.dim(0);
                const Tensor& wt = m.params[static_cast<size_t>(r.weight)].values;
                const Tensor& bt = m.params[static_cast<size_t>(r.bias)].values;
                Tensor out({b, l.out});
                ConstMatMap x(cur.ptr(), b, l.in);
                ConstMatMap wmat(wt.ptr(), l.out, l.in);
                MatMap y(out.ptr(), b, l.out);
                y.noalias() = x * wmat.transpose();
                y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bt.ptr(), l.out);
                cur = std::move(out);
                break;
            }
            case LayerKind::conv3x3: {
                const Shape4 s = as4(cur);
                if (cur.ndim() != 4) fail(Error::Code::invalid_argument, "conv3x3 needs 4-D input");
                const int64_t ho = (s.h - 1) / l.stride + 1;
                const int64_t wo = (s.w - 1) / l.stride + 1;
                const Tensor& wt = m.params[static_cast<size_t>(r.weight)].values;
                const Tensor& bt = m.params[static_cast<size_t>(r.bias)].values;
                Tensor out({s.b, l.out, ho, wo});
                const int64_t k = l.in * 9;
                Tensor cols({k, ho * wo});
                ConstMatMap wmat(wt.ptr(), l.out, k);
                for (int64_t img = 0; img < s.b; ++img) {
                    im2col3x3(cur.ptr() + img * s.c * s.h * s.w, l.in, s.h, s.w, l.stride, ho, wo,
                              cols.ptr());
                    ConstMatMap cmat(cols.ptr(), k, ho * wo);
                    MatMap y(out.ptr() + img * l.out * ho * wo, l.out, ho * wo);
                    y.noalias() = wmat * cmat;
                    y.colwise() += Eigen::Map<const Eigen::VectorXd>(bt.ptr(), l.out);
                }
                cur = std::move(out);
                break;
            }
            case LayerKind::relu: {
                for (double& v : cur.data) v = v > 0.0 ? v : 0.0;
                break;
            }
            case LayerKind::batchnorm: {
                const Shape4 s = as4(cur);
                const int64_t per_channel = s.b * s.h * s.w;
                const int64_t plane = s.h * s.w;
                const Tensor& gamma = m.params[static_cast<size_t>(r.gamma)].values;
                const Tensor& beta = m.params[static_cast<size_t>(r.beta)].values;
                Tensor& rmean = m.bn_running_mean[static_cast<size_t>(r.bn_slot)];
                Tensor& rvar = m.bn_running_var[static_cast<size_t>(r.bn_slot)];

                ForwardCache::BnCache* bc = nullptr;
                if (cache && training) {
                    bc = &cache->bn[static_cast<size_t>(r.bn_slot)];
                    bc->xhat = Tensor(cur.shape);
                    bc->inv_std.assign(static_cast<size_t>(s.c), 0.0);
                }
                for (int64_t c = 0; c < s.c; ++c) {
                    double mean, inv;
                    if (training) {
                        double sum = 0.0, sq = 0.0;
                        for (int64_t b = 0; b < s.b; ++b) {
                            const double* p = cur.ptr() + (b * s.c + c) * plane;
                            for (int64_t j = 0; j < plane; ++j) {
                                sum += p[j];
                                sq += p[j] * p[j];
                            }
                        }
                        mean = sum / double(per_channel);
                        double var = sq / double(per_channel) - mean * mean;
                        var = std::max(var, 0.0);
                        inv = 1.0 / std::sqrt(var + kBnEps);
                        const double unbiased =
                            per_channel > 1 ? var * double(per_channel) / double(per_channel - 1)
                                            : var;
                        rmean[c] = (1.0 - kBnMomentum) * rmean[c] + kBnMomentum * mean;
                        rvar[c] = (1.0 - kBnMomentum) * rvar[c] + kBnMomentum * unbiased;
                    } else {
                        mean = rmean[c];
                        inv = 1.0 / std::sqrt(rvar[c] + kBnEps);
                    }
                    for (int64_t b = 0; b < s.b; ++b) {
                        double* p = cur.ptr() + (b * s.c + c) * plane;
                        double* xh = bc ? bc->xhat.ptr() + (b * s.c + c) * plane : nullptr;
                        for (int64_t j = 0; j < plane; ++j) {
                            const double xhat = (p[j] - mean) * inv;
                            if (xh) xh[j] = xhat;
                            p[j] = gamma[c] * xhat + beta[c];
                        }
                    }
                    if (bc) bc->inv_std[static_cast<size_t>(c)] = inv;
                }
                break;
            }
            case LayerKind::global_avg_pool: {
                const Shape4 s = as4(cur);
                if (cur.ndim() != 4)
                    fail(Error::Code::invalid_argument, "global_avg_pool needs 4-D input");
                Tensor out({s.b, s.c});
                const double scale = 1.0 / double(s.h * s.w);
                for (int64_t b = 0; b < s.b; ++b)
                    for (int64_t c = 0; c < s.c; ++c) {
                        const double* p = cur.ptr() + (b * s.c + c) * s.h * s.w;
                        double sum = 0.0;
                        for (int64_t j = 0; j < s.h * s.w; ++j) sum += p[j];
                        out[b * s.c + c] = sum * scale;
                    }
                cur = std::move(out);
                break;
            }
            case LayerKind::softmax_cross_entropy:
                break;
        }
    }
    check_finite(cur, "forward activations (logits)");
    return cur;
}

double softmax_cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels,
                                  Tensor* grad_logits) {
    const int64_t b = logits.dim(0);
    const int64_t c = logits.dim(1);
    if (static_cast<int64_t>(labels.size()) != b)
        fail(Error::Code::invalid_argument, "label count does not match batch size");
    if (grad_logits) *grad_logits = Tensor(logits.shape);

    double loss = 0.0;
    std::vector<double> p(static_cast<size_t>(c));
    for (int64_t i = 0; i < b; ++i) {
        const double* row = logits.ptr() + i * c;
        const int label = labels[static_cast<size_t>(i)];
        if (label < 0 || label >= c)
            fail(Error::Code::invalid_argument, "label out of range");
        double mx = row[0];
        for (int64_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (int64_t j = 0; j < c; ++j) {
            p[static_cast<size_t>(j)] = std::exp(row[j] - mx);
            z += p[static_cast<size_t>(j)];
        }
        loss -= std::log(p[static_cast<size_t>(label)] / z);
        if (grad_logits) {
            double* g = grad_logits->ptr() + i * c;
            for (int64_t j = 0; j < c; ++j)
                g[j] = (p[static_cast<size_t>(j)] / z - (j == label ? 1.0 : 0.0)) / double(b);
        }
    }
    loss /= double(b);
    if (!std::isfinite(loss)) fail(Error::Code::numeric, "non-finite loss");
    return loss;
}

std::vector<Tensor> backward(const Model& m, const ForwardCache& cache, const Tensor& grad_logits) {
    if (!cache.training)
        fail(Error::Code::internal, "backward requires a training-mode forward cache");

    std::vector<Tensor> grads;
    grads.reserve(m.params.size());
    for (const auto& p : m.params) grads.emplace_back(p.values.shape);

    Tensor dy = grad_logits;
    for (int64_t li = static_cast<int64_t>(m.net.layers.size()) - 1; li >= 0; --li) {
        const LayerSpec& l = m.net.layers[static_cast<size_t>(li)];
        if (l.kind == LayerKind::softmax_cross_entropy) continue;
        const Model::LayerRefs& r = m.refs[static_cast<size_t>(li)];
        const Tensor& x = cache.inputs[static_cast<size_t>(li)];

        switch (l.kind) {
            case LayerKind::linear: {
                const int64_t b = x.dim(0);
                const Tensor& wt = m.params[static_cast<size_t>(r.weight)].values;
                Tensor dx({b, l.in});
                ConstMatMap xm(x.ptr(), b, l.in);
                ConstMatMap wm(wt.ptr(), l.out, l.in);
                ConstMatMap dym(dy.ptr(), b, l.out);
                MatMap dwm(grads[static_cast<size_t>(r.weight)].ptr(), l.out, l.in);
                MatMap dxm(dx.ptr(), b, l.in);
                dwm.noalias() = dym.transpose() * xm;
                Eigen::Map<Eigen::RowVectorXd>(grads[static_cast<size_t>(r.bias)].ptr(), l.out) =
                    dym.colwise().sum();
                dxm.noalias() = dym * wm;
                dy = std::move(dx);
                break;
            }
            case LayerKind::conv3x3: {
                const Shape4 s = as4(x);
                const int64_t ho = (s.h - 1) / l.stride + 1;
                const int64_t wo = (s.w - 1) / l.stride + 1;
                const int64_t k = l.in * 9;
                const Tensor& wt = m.params[static_cast<size_t>(r.weight)].values;
                Tensor dx(x.shape);
                Tensor cols({k, ho * wo});
                Tensor dcols({k, ho * wo});
                ConstMatMap wm(wt.ptr(), l.out, k);
                MatMap dwm(grads[static_cast<size_t>(r.weight)].ptr(), l.out, k);
                Eigen::Map<Eigen::VectorXd> dbv(grads[static_cast<size_t>(r.bias)].ptr(), l.out);
                for (int64_t img = 0; img < s.b; ++img) {
                    im2col3x3(x.ptr() + img * s.c * s.h * s.w, l.in, s.h, s.w, l.stride, ho, wo,
                              cols.ptr());
                    ConstMatMap cm(cols.ptr(), k, ho * wo);
                    ConstMatMap dym(dy.ptr() + img * l.out * ho * wo, l.out, ho * wo);
                    dwm.noalias() += dym * cm.transpose();
                    dbv += dym.rowwise().sum();
                    MatMap dcm(dcols.ptr(), k, ho * wo);
                    dcm.noalias() = wm.transpose() * dym;
                    col2im3x3(dcols.ptr(), l.in, s.h, s.w, l.stride, ho, wo,
                              dx.ptr() + img * s.c * s.h * s.w);
                }
                dy = std::move(dx);
                break;
            }
            case LayerKind::relu: {
                for (int64_t j = 0; j < dy.numel(); ++j)
                    if (x[j] <= 0.0) dy[j] = 0.0;
                break;
            }
            case LayerKind::batchnorm: {
                const Shape4 s = as4(x);
                const int64_t plane = s.h * s.w;
                const int64_t per_channel = s.b * plane;
                const ForwardCache::BnCache& bc = cache.bn[static_cast<size_t>(r.bn_slot)];
                const Tensor& gamma = m.params[static_cast<size_t>(r.gamma)].values;
                Tensor dx(x.shape);
                double* dgamma = grads[static_cast<size_t>(r.gamma)].ptr();
                double* dbeta = grads[static_cast<size_t>(r.beta)].ptr();
                for (int64_t c = 0; c < s.c; ++c) {
                    double sum_dy = 0.0, sum_dy_xhat = 0.0;
                    for (int64_t b = 0; b < s.b; ++b) {
                        const double* dyp = dy.ptr() + (b * s.c + c) * plane;
                        const double* xh = bc.xhat.ptr() + (b * s.c + c) * plane;
                        for (int64_t j = 0; j < plane; ++j) {
                            sum_dy += dyp[j];
                            sum_dy_xhat += dyp[j] * xh[j];
                        }
                    }
                    dgamma[c] = sum_dy_xhat;
                    dbeta[c] = sum_dy;
                    const double inv = bc.inv_std[static_cast<size_t>(c)];
                    const double scale = gamma[c] * inv;
                    const double mean_dy = sum_dy / double(per_channel);
                    const double mean_dy_xhat = sum_dy_xhat / double(per_channel);
                    for (int64_t b = 0; b < s.b; ++b) {
                        const double* dyp = dy.ptr() + (b * s.c + c) * plane;
                        const double* xh = bc.xhat.ptr() + (b * s.c + c) * plane;
                        double* dxp = dx.ptr() + (b * s.c + c) * plane;
                        for (int64_t j = 0; j < plane; ++j)
                            dxp[j] = scale * (dyp[j] - mean_dy - xh[j] * mean_dy_xhat);
                    }
                }
                dy = std::move(dx);
                break;
            }
            case LayerKind::global_avg_pool: {
                const Shape4 s = as4(x);
                Tensor dx(x.shape);
                const double scale = 1.0 / double(s.h * s.w);
                for (int64_t b = 0; b < s.b; ++b)
                    for (int64_t c = 0; c < s.c; ++c) {
                        const double g = dy[b * s.c + c] * scale;
                        double* p = dx.ptr() + (b * s.c + c) * s.h * s.w;
                        for (int64_t j = 0; j < s.h * s.w; ++j) p[j] = g;
                    }
                dy = std::move(dx);
                break;
            }
            case LayerKind::softmax_cross_entropy:
                break;
        }
    }
    for (size_t i = 0; i < grads.size(); ++i) check_finite(grads[i], "gradient of " + m.params[i].name);
    return grads;
}

} // namespace sparsetrain
