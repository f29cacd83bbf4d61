#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "scef/dataset.hpp"
#include "scef/errors.hpp"
#include "scef/network.hpp"
#include "scef/objective.hpp"
#include "scef/serialize.hpp"

namespace scef {

struct EpochMetrics {
    std::size_t epoch = 0;
    double task_loss = 0.0;
    double phi1 = 0.0;
    double phi2 = 0.0;
    double total = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
};

struct TrainResult {
    Network net;
    std::vector<EpochMetrics> log;
};

/// Invoked after each checkpointed epoch with the current parameters.
using EpochCallback = std::function<void(const Network&, const EpochMetrics&)>;

inline Dataset make_dataset(const DatasetSpec& spec, std::uint64_t seed) {
    if (spec.kind == DatasetSpec::Kind::synthetic_bars)
        return synthetic_bars(spec.n, spec.size, spec.classes, seed, spec.noise);
    return load_cifar10(spec.dir, spec.subset);
}

namespace detail {

struct VelocityBlock {
    std::vector<double> primary; // conv weights / eigen-filters / dense weights
    std::vector<double> secondary; // coefficients / dense bias
};

inline Tensor4 gather_batch(const Dataset& data, const std::vector<std::size_t>& indices,
                            std::size_t begin, std::size_t end, std::vector<int>& labels) {
    const std::size_t b = end - begin;
    Tensor4 batch(b, data.images.channels, data.images.height, data.images.width);
    const std::size_t sample = data.images.channels * data.images.height * data.images.width;
    labels.resize(b);
    for (std::size_t s = 0; s < b; ++s) {
        const std::size_t src = indices[begin + s];
        std::copy(data.images.data.begin() + src * sample,
                  data.images.data.begin() + (src + 1) * sample,
                  batch.data.begin() + s * sample);
        labels[s] = data.labels[src];
    }
    return batch;
}

inline double evaluate_accuracy(const Network& net, const Dataset& data,
                                const std::vector<std::size_t>& indices,
                                std::size_t batch_size) {
    if (indices.empty()) return 0.0;
    std::size_t correct = 0;
    std::vector<int> labels;
    for (std::size_t begin = 0; begin < indices.size(); begin += batch_size) {
        const std::size_t end = std::min(indices.size(), begin + batch_size);
        const Tensor4 batch = gather_batch(data, indices, begin, end, labels);
        const std::vector<int> pred = predict(net, batch);
        for (std::size_t s = 0; s < pred.size(); ++s)
            if (pred[s] == labels[s]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

inline void sgd_step(std::vector<double>& param, std::vector<double>& velocity,
                     const std::vector<double>& grad, double lr, double momentum) {
    for (std::size_t t = 0; t < param.size(); ++t) {
        velocity[t] = momentum * velocity[t] + grad[t];
        param[t] -= lr * velocity[t];
    }
}

} // namespace detail

/// Minibatch SGD with momentum on the Eq.-style objective (task loss plus
/// the enabled penalties with per-layer lambda1 = lambda1_base * r). Frozen
/// eigen-filters are never updated. Serial and deterministic for a fixed
/// seed; aborts with a diagnostic if the loss turns non-finite.
inline TrainResult train(Network net, const TrainConfig& cfg, const Dataset& data,
                         const EpochCallback& on_checkpoint = {}) {
    cfg.validate();
    if (data.size() == 0) throw parameter_error("train: empty dataset");
    if (data.images.channels != net.config.input.channels ||
        data.images.height != net.config.input.height ||
        data.images.width != net.config.input.width)
        throw dimension_error("train: dataset images " + data.images.shape_str() +
                              " do not match the network input");

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t val_n =
        static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(data.size())));
    std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(val_n),
                                     order.end());
    std::vector<std::size_t> train_idx(order.begin(),
                                       order.end() - static_cast<std::ptrdiff_t>(val_n));
    if (train_idx.empty()) throw parameter_error("train: no training samples after the split");

    std::vector<detail::VelocityBlock> velocity(net.layers.size());
    for (std::size_t idx = 0; idx < net.layers.size(); ++idx) {
        if (const auto* conv = std::get_if<Conv2dParams>(&net.layers[idx])) {
            velocity[idx].primary.assign(conv->bank.weights.size(), 0.0);
        } else if (const auto* scef = std::get_if<ScefParams>(&net.layers[idx])) {
            velocity[idx].primary.assign(scef->eigen_filters.weights.size(), 0.0);
            velocity[idx].secondary.assign(scef->coefficients.size(), 0.0);
        } else if (const auto* dense = std::get_if<DenseParams>(&net.layers[idx])) {
            velocity[idx].primary.assign(dense->weight.size(), 0.0);
            velocity[idx].secondary.assign(dense->bias.size(), 0.0);
        }
    }

    TrainResult result;
    std::vector<int> labels;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t begin = 0; begin < train_idx.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(train_idx.size(), begin + cfg.batch_size);
            const Tensor4 batch = detail::gather_batch(data, train_idx, begin, end, labels);
            const ForwardTrace trace = network_forward(net, batch);
            const TaskLoss task = softmax_cross_entropy(trace.logits, trace.classes, labels);
            if (!std::isfinite(task.value))
                throw numeric_error("train: loss diverged at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(begin / cfg.batch_size));
            loss_sum += task.value * static_cast<double>(end - begin);
            for (std::size_t s = 0; s < labels.size(); ++s) {
                const double* row = trace.logits.data() + s * trace.classes;
                std::size_t best = 0;
                for (std::size_t c = 1; c < trace.classes; ++c)
                    if (row[c] > row[best]) best = c;
                if (static_cast<int>(best) == labels[s]) ++correct;
            }

            NetGrads grads = network_backward(net, trace, task.dlogits);
            for (std::size_t idx = 0; idx < net.layers.size(); ++idx) {
                if (auto* conv = std::get_if<Conv2dParams>(&net.layers[idx])) {
                    auto& g = std::get<Conv2dGrads>(grads.layers[idx]);
                    detail::sgd_step(conv->bank.weights, velocity[idx].primary, g.bank.weights,
                                     cfg.learning_rate, cfg.momentum);
                } else if (auto* scef = std::get_if<ScefParams>(&net.layers[idx])) {
                    auto& g = std::get<ScefGrads>(grads.layers[idx]);
                    if (cfg.phi2_enabled) {
                        const Phi2Result p2 = phi2(*scef, cfg.reg.lambda2);
                        for (std::size_t t = 0; t < g.coefficients.size(); ++t)
                            g.coefficients[t] += p2.grad[t];
                    }
                    detail::sgd_step(scef->coefficients, velocity[idx].secondary,
                                     g.coefficients, cfg.learning_rate, cfg.momentum);
                    if (!scef->frozen) {
                        if (cfg.phi1_enabled) {
                            const double lambda1 =
                                cfg.reg.lambda1_base * static_cast<double>(scef->r);
                            const Phi1Result p1 = phi1(*scef, lambda1, cfg.reg.phi1_norm);
                            for (std::size_t t = 0; t < g.eigen_filters.weights.size(); ++t)
                                g.eigen_filters.weights[t] += p1.grad.weights[t];
                        }
                        detail::sgd_step(scef->eigen_filters.weights, velocity[idx].primary,
                                         g.eigen_filters.weights, cfg.learning_rate,
                                         cfg.momentum);
                    }
                } else if (auto* dense = std::get_if<DenseParams>(&net.layers[idx])) {
                    auto& g = std::get<DenseGrads>(grads.layers[idx]);
                    detail::sgd_step(dense->weight, velocity[idx].primary, g.weight,
                                     cfg.learning_rate, cfg.momentum);
                    detail::sgd_step(dense->bias, velocity[idx].secondary, g.bias,
                                     cfg.learning_rate, cfg.momentum);
                }
            }
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.task_loss = loss_sum / static_cast<double>(train_idx.size());
        for (std::size_t idx = 0; idx < net.layers.size(); ++idx) {
            const auto* scef = std::get_if<ScefParams>(&net.layers[idx]);
            if (!scef) continue;
            if (cfg.phi1_enabled)
                m.phi1 += phi1(*scef, cfg.reg.lambda1_base * static_cast<double>(scef->r),
                               cfg.reg.phi1_norm)
                              .value;
            if (cfg.phi2_enabled) m.phi2 += phi2(*scef, cfg.reg.lambda2).value;
        }
        m.total = m.task_loss + m.phi1 + m.phi2;
        m.train_acc = static_cast<double>(correct) / static_cast<double>(train_idx.size());
        m.val_acc = detail::evaluate_accuracy(net, data, val_idx, cfg.batch_size);
        result.log.push_back(m);
        if (on_checkpoint && (epoch % cfg.checkpoint_every == 0 || epoch == cfg.epochs))
            on_checkpoint(net, m);
    }
    result.net = std::move(net);
    return result;
}

/// CSV metrics with the fixed header epoch,task_loss,phi1,phi2,total,train_acc,val_acc.
inline std::string metrics_to_csv(const std::vector<EpochMetrics>& log) {
    std::string out = "epoch,task_loss,phi1,phi2,total,train_acc,val_acc\n";
    char line[256];
    for (const EpochMetrics& m : log) {
        std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", m.epoch,
                      m.task_loss, m.phi1, m.phi2, m.total, m.train_acc, m.val_acc);
        out += line;
    }
    return out;
}

} // namespace scef
