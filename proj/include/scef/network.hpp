#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include "scef/config.hpp"
#include "scef/errors.hpp"
#include "scef/layers.hpp"
#include "scef/tensor.hpp"

namespace scef {

struct PoolParams {
    std::size_t stride = 2;
};

/// Global-average-pool followed by a linear map; the only layer with a bias.
struct DenseParams {
    std::size_t c_in = 0;
    std::size_t c_out = 0;
    std::vector<double> weight; // (c_out, c_in) row-major
    std::vector<double> bias;   // (c_out)
};

using LayerParams = std::variant<Conv2dParams, ScefParams, PoolParams, DenseParams>;

struct DenseGrads {
    std::vector<double> weight;
    std::vector<double> bias;
};

// monostate stands in for parameter-free layers (pool).
using LayerGradients = std::variant<std::monostate, Conv2dGrads, ScefGrads, DenseGrads>;

struct Network {
    NetworkConfig config; // resolved
    std::vector<LayerParams> layers;
};

struct NetGrads {
    std::vector<LayerGradients> layers;
};

/// Instantiates parameters for a validated topology. SCEF layers use the
/// SVD-of-Gaussian initialization; Conv2D and dense weights are normal with
/// standard deviation sqrt(2/fan_in). Layer seeds derive as seed + index.
inline Network build_network(const NetworkConfig& config, std::uint64_t seed) {
    Network net;
    net.config = resolve_config(config);
    if (net.config.layers.back().kind != LayerKind::dense)
        throw config_error("build_network: the final layer must be the dense classifier");
    for (std::size_t idx = 0; idx < net.config.layers.size(); ++idx) {
        const LayerSpec& l = net.config.layers[idx];
        const std::uint64_t layer_seed = seed + idx;
        switch (l.kind) {
            case LayerKind::conv2d: {
                Conv2dParams p;
                p.bank = FilterBank(l.c_out, l.c_in, l.h);
                p.stride = l.stride;
                p.padding = l.padding;
                std::mt19937_64 rng(layer_seed);
                std::normal_distribution<double> normal(
                    0.0, std::sqrt(2.0 / static_cast<double>(l.c_in * l.h * l.h)));
                for (double& v : p.bank.weights) v = normal(rng);
                net.layers.emplace_back(std::move(p));
                break;
            }
            case LayerKind::scef:
                net.layers.emplace_back(
                    init_scef(l.c_in, l.c_out, l.h, l.rank, layer_seed, l.frozen));
                break;
            case LayerKind::pool:
                net.layers.emplace_back(PoolParams{l.stride});
                break;
            case LayerKind::dense: {
                DenseParams p;
                p.c_in = l.c_in;
                p.c_out = l.c_out;
                p.weight.assign(l.c_in * l.c_out, 0.0);
                p.bias.assign(l.c_out, 0.0);
                std::mt19937_64 rng(layer_seed);
                std::normal_distribution<double> normal(
                    0.0, std::sqrt(2.0 / static_cast<double>(l.c_in)));
                for (double& v : p.weight) v = normal(rng);
                net.layers.emplace_back(std::move(p));
                break;
            }
        }
    }
    return net;
}

/// Activations recorded during a forward pass: entry 0 is the network input,
/// entry i+1 the post-ReLU output of layer i (pool/dense outputs verbatim).
/// Logits are (batch × classes), row-major.
struct ForwardTrace {
    std::vector<Tensor4> activations;
    std::vector<double> logits;
    std::size_t classes = 0;
};

namespace detail {

inline Tensor4 average_pool(const Tensor4& x, std::size_t stride) {
    const std::size_t oh = x.height / stride;
    const std::size_t ow = x.width / stride;
    if (oh == 0 || ow == 0) throw dimension_error("average_pool: input smaller than stride");
    Tensor4 out(x.batch, x.channels, oh, ow);
    const double inv = 1.0 / static_cast<double>(stride * stride);
    for (std::size_t b = 0; b < x.batch; ++b)
        for (std::size_t c = 0; c < x.channels; ++c) {
            const double* in = x.plane(b, c);
            double* o = out.plane(b, c);
            for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t xx = 0; xx < ow; ++xx) {
                    double acc = 0.0;
                    for (std::size_t p = 0; p < stride; ++p)
                        for (std::size_t q = 0; q < stride; ++q)
                            acc += in[(y * stride + p) * x.width + (xx * stride + q)];
                    o[y * ow + xx] = acc * inv;
                }
        }
    return out;
}

inline Tensor4 average_pool_backward(const Tensor4& upstream, std::size_t stride,
                                     std::size_t in_h, std::size_t in_w) {
    Tensor4 grad(upstream.batch, upstream.channels, in_h, in_w);
    const double inv = 1.0 / static_cast<double>(stride * stride);
    for (std::size_t b = 0; b < upstream.batch; ++b)
        for (std::size_t c = 0; c < upstream.channels; ++c) {
            const double* g = upstream.plane(b, c);
            double* out = grad.plane(b, c);
            for (std::size_t y = 0; y < upstream.height; ++y)
                for (std::size_t xx = 0; xx < upstream.width; ++xx) {
                    const double v = g[y * upstream.width + xx] * inv;
                    for (std::size_t p = 0; p < stride; ++p)
                        for (std::size_t q = 0; q < stride; ++q)
                            out[(y * stride + p) * in_w + (xx * stride + q)] += v;
                }
        }
    return grad;
}

} // namespace detail

inline ForwardTrace network_forward(const Network& net, const Tensor4& input) {
    ForwardTrace trace;
    trace.activations.reserve(net.layers.size() + 1);
    trace.activations.push_back(input);
    for (std::size_t idx = 0; idx < net.layers.size(); ++idx) {
        const Tensor4& x = trace.activations.back();
        const LayerSpec& spec = net.config.layers[idx];
        if (const auto* conv = std::get_if<Conv2dParams>(&net.layers[idx])) {
            Tensor4 y = conv2d_forward(*conv, x);
            for (double& v : y.data) v = v > 0.0 ? v : 0.0; // ReLU
            trace.activations.push_back(std::move(y));
        } else if (const auto* scef = std::get_if<ScefParams>(&net.layers[idx])) {
            Tensor4 y = scef_forward(*scef, x, spec.stride, spec.padding);
            for (double& v : y.data) v = v > 0.0 ? v : 0.0; // ReLU
            trace.activations.push_back(std::move(y));
        } else if (const auto* pool = std::get_if<PoolParams>(&net.layers[idx])) {
            trace.activations.push_back(detail::average_pool(x, pool->stride));
        } else {
            const auto& dense = std::get<DenseParams>(net.layers[idx]);
            if (x.channels != dense.c_in)
                throw dimension_error("network_forward: dense head expects " +
                                      std::to_string(dense.c_in) + " channels");
            trace.classes = dense.c_out;
            trace.logits.assign(x.batch * dense.c_out, 0.0);
            const double inv_plane = 1.0 / static_cast<double>(x.height * x.width);
            for (std::size_t b = 0; b < x.batch; ++b)
                for (std::size_t o = 0; o < dense.c_out; ++o) {
                    double acc = dense.bias[o];
                    for (std::size_t c = 0; c < dense.c_in; ++c) {
                        const double* plane = x.plane(b, c);
                        double mean = 0.0;
                        for (std::size_t t = 0; t < x.height * x.width; ++t) mean += plane[t];
                        acc += dense.weight[o * dense.c_in + c] * mean * inv_plane;
                    }
                    trace.logits[b * dense.c_out + o] = acc;
                }
        }
    }
    return trace;
}

/// Mean softmax cross-entropy over the batch and its gradient with respect
/// to the logits.
struct TaskLoss {
    double value = 0.0;
    std::vector<double> dlogits;
};

inline TaskLoss softmax_cross_entropy(const std::vector<double>& logits, std::size_t classes,
                                      const std::vector<int>& labels) {
    const std::size_t batch = labels.size();
    if (logits.size() != batch * classes)
        throw dimension_error("softmax_cross_entropy: logits/labels size mismatch");
    TaskLoss out;
    out.dlogits.assign(logits.size(), 0.0);
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* row = logits.data() + b * classes;
        double mx = row[0];
        for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
        double z = 0.0;
        for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
        const int label = labels[b];
        if (label < 0 || static_cast<std::size_t>(label) >= classes)
            throw parameter_error("softmax_cross_entropy: label out of range");
        out.value += -(row[label] - mx - std::log(z)) * inv_b;
        for (std::size_t c = 0; c < classes; ++c) {
            const double p = std::exp(row[c] - mx) / z;
            out.dlogits[b * classes + c] =
                (p - (static_cast<std::size_t>(label) == c ? 1.0 : 0.0)) * inv_b;
        }
    }
    return out;
}

/// Backpropagates dL/dlogits through the whole network, returning parameter
/// gradients per layer. Frozen SCEF layers get exactly-zero eigen-filter
/// gradient blocks (scef_backward's contract).
inline NetGrads network_backward(const Network& net, const ForwardTrace& trace,
                                 const std::vector<double>& dlogits) {
    NetGrads grads;
    grads.layers.resize(net.layers.size());
    Tensor4 upstream; // gradient w.r.t. the current layer's output
    for (std::size_t step = net.layers.size(); step-- > 0;) {
        const Tensor4& x = trace.activations[step];
        const LayerSpec& spec = net.config.layers[step];
        if (const auto* dense = std::get_if<DenseParams>(&net.layers[step])) {
            DenseGrads dg;
            dg.weight.assign(dense->weight.size(), 0.0);
            dg.bias.assign(dense->bias.size(), 0.0);
            upstream = Tensor4(x.batch, x.channels, x.height, x.width);
            const std::size_t plane = x.height * x.width;
            const double inv_plane = 1.0 / static_cast<double>(plane);
            for (std::size_t b = 0; b < x.batch; ++b)
                for (std::size_t o = 0; o < dense->c_out; ++o) {
                    const double g = dlogits[b * dense->c_out + o];
                    if (g == 0.0) continue;
                    dg.bias[o] += g;
                    for (std::size_t c = 0; c < dense->c_in; ++c) {
                        const double* in = x.plane(b, c);
                        double mean = 0.0;
                        for (std::size_t t = 0; t < plane; ++t) mean += in[t];
                        dg.weight[o * dense->c_in + c] += g * mean * inv_plane;
                        double* up = upstream.plane(b, c);
                        const double spread = g * dense->weight[o * dense->c_in + c] * inv_plane;
                        for (std::size_t t = 0; t < plane; ++t) up[t] += spread;
                    }
                }
            grads.layers[step] = std::move(dg);
        } else if (const auto* pool = std::get_if<PoolParams>(&net.layers[step])) {
            upstream = detail::average_pool_backward(upstream, pool->stride, x.height, x.width);
            grads.layers[step] = std::monostate{};
        } else {
            // ReLU mask from the post-activation output of this layer.
            const Tensor4& y = trace.activations[step + 1];
            Tensor4 masked = upstream;
            for (std::size_t t = 0; t < masked.data.size(); ++t)
                if (y.data[t] <= 0.0) masked.data[t] = 0.0;
            if (const auto* conv = std::get_if<Conv2dParams>(&net.layers[step])) {
                auto [g, input_grad] = conv2d_backward(*conv, x, masked);
                grads.layers[step] = std::move(g);
                upstream = std::move(input_grad);
            } else {
                const auto& scef = std::get<ScefParams>(net.layers[step]);
                auto [g, input_grad] = scef_backward(scef, x, masked, spec.stride, spec.padding);
                grads.layers[step] = std::move(g);
                upstream = std::move(input_grad);
            }
        }
    }
    return grads;
}

inline std::vector<int> predict(const Network& net, const Tensor4& input) {
    const ForwardTrace trace = network_forward(net, input);
    std::vector<int> labels(input.batch, 0);
    for (std::size_t b = 0; b < input.batch; ++b) {
        const double* row = trace.logits.data() + b * trace.classes;
        std::size_t best = 0;
        for (std::size_t c = 1; c < trace.classes; ++c)
            if (row[c] > row[best]) best = c;
        labels[b] = static_cast<int>(best);
    }
    return labels;
}

/// The dense filter bank a convolution-type layer realizes (SCEF layers are
/// composed); used by the rank analysis and the compressor.
inline FilterBank layer_bank(const Network& net, std::size_t idx) {
    if (const auto* conv = std::get_if<Conv2dParams>(&net.layers[idx])) return conv->bank;
    if (const auto* scef = std::get_if<ScefParams>(&net.layers[idx]))
        return compose_filters(*scef);
    throw parameter_error("layer_bank: layer " + std::to_string(idx) +
                          " is not a convolution layer");
}

} // namespace scef
