#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "scef/complexity.hpp"
#include "scef/errors.hpp"
#include "scef/layers.hpp"
#include "scef/linalg.hpp"
#include "scef/network.hpp"
#include "scef/rank_analysis.hpp"

namespace scef {

struct CompressionReport {
    std::size_t rank_used = 0;
    std::vector<double> per_channel_error; // Frobenius error per input channel
    double total_error = 0.0;              // sqrt of the summed squared errors
    double relative_error = 0.0;           // total_error / ||bank||_F
    std::int64_t params_before = 0;
    std::int64_t params_after = 0;
    std::int64_t flops_before = 0; // maccs per output spatial position
    std::int64_t flops_after = 0;
};

/// Frobenius reconstruction error of a SCEF approximation, per input channel
/// and in total.
inline CompressionReport reconstruction_error(const FilterBank& original,
                                              const ScefParams& compressed) {
    if (original.c_in != compressed.c_in || original.c_out != compressed.c_out ||
        original.h != compressed.h)
        throw dimension_error("reconstruction_error: bank and SCEF shapes disagree");
    const FilterBank composed = compose_filters(compressed);
    CompressionReport report;
    report.rank_used = compressed.r;
    double total_sq = 0.0;
    for (std::size_t i = 0; i < original.c_in; ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < original.c_out; ++j) {
            const double* a = original.filter(j, i);
            const double* b = composed.filter(j, i);
            for (std::size_t t = 0; t < original.K(); ++t) {
                const double d = a[t] - b[t];
                sq += d * d;
            }
        }
        report.per_channel_error.push_back(std::sqrt(sq));
        total_sq += sq;
    }
    report.total_error = std::sqrt(total_sq);
    double bank_sq = 0.0;
    for (double v : original.weights) bank_sq += v * v;
    report.relative_error = bank_sq > 0.0 ? report.total_error / std::sqrt(bank_sq) : 0.0;
    return report;
}

/// Rank-r SCEF approximation of a dense bank: per input channel, the top-r
/// left singular vectors of the stacked vectorized filters become the
/// eigen-filters and the coefficients are the rank-r projections
/// a_j^(i) = Ūᵀ vec(w_j^(i)). This is the Frobenius-optimal construction.
inline std::pair<ScefParams, CompressionReport> compress_conv_to_scef(const FilterBank& bank,
                                                                      std::size_t r) {
    const std::size_t p = std::min(bank.K(), bank.c_out);
    if (r < 1 || r > p)
        throw parameter_error("compress_conv_to_scef: rank " + std::to_string(r) +
                              " outside [1, " + std::to_string(p) + "]");
    ScefParams params;
    params.c_in = bank.c_in;
    params.c_out = bank.c_out;
    params.h = bank.h;
    params.r = r;
    params.frozen = false;
    params.eigen_filters = DepthwiseBank(bank.c_in, r, bank.h);
    params.coefficients.assign(bank.c_in * bank.c_out * r, 0.0);
    const std::size_t K = bank.K();
    std::vector<double> column(K);
    for (std::size_t i = 0; i < bank.c_in; ++i) {
        const Matrix m = channel_matrix(bank, i);
        const SvdResult svd = small_svd(m);
        for (std::size_t k = 0; k < r; ++k) {
            for (std::size_t row = 0; row < K; ++row) column[row] = svd.left(row, k);
            devectorize_filter(column.data(), bank.h, params.eigen_filters.filter(i, k));
            for (std::size_t j = 0; j < bank.c_out; ++j) {
                double dot = 0.0;
                for (std::size_t row = 0; row < K; ++row) dot += svd.left(row, k) * m(row, j);
                params.coef(i, j, k) = dot;
            }
        }
    }
    CompressionReport report = reconstruction_error(bank, params);
    report.params_before = count_params(LayerKind::conv2d, bank.c_in, bank.c_out, bank.h);
    report.params_after = count_params(LayerKind::scef, bank.c_in, bank.c_out, bank.h, r);
    report.flops_before =
        count_flops(LayerKind::conv2d, 1, 1, 1, bank.c_in, bank.c_out, bank.h);
    report.flops_after = count_flops(LayerKind::scef, 1, 1, 1, bank.c_in, bank.c_out, bank.h, r);
    return {std::move(params), std::move(report)};
}

/// Smallest rank whose total reconstruction error stays within
/// budget * ||bank||_F, from the per-channel singular value tails.
inline std::size_t smallest_rank_within_budget(const FilterBank& bank, double budget) {
    if (budget < 0.0) throw parameter_error("smallest_rank_within_budget: budget must be >= 0");
    const std::size_t p = std::min(bank.K(), bank.c_out);
    std::vector<std::vector<double>> spectra;
    double bank_sq = 0.0;
    for (double v : bank.weights) bank_sq += v * v;
    if (bank_sq == 0.0) return 1;
    for (std::size_t i = 0; i < bank.c_in; ++i)
        spectra.push_back(small_svd(channel_matrix(bank, i)).singular);
    for (std::size_t r = 1; r <= p; ++r) {
        double tail_sq = 0.0;
        for (const std::vector<double>& s : spectra)
            for (std::size_t k = r; k < s.size(); ++k) tail_sq += s[k] * s[k];
        if (std::sqrt(tail_sq) <= budget * std::sqrt(bank_sq)) return r;
    }
    return p;
}

enum class CompressionMode { fixed_rank, schedule, error_budget };

struct CompressionOptions {
    CompressionMode mode = CompressionMode::fixed_rank;
    std::size_t rank = 1;               // fixed_rank
    RankDecay decay = RankDecay::linear; // schedule
    double error_budget = 0.05;          // error_budget
};

struct LayerCompressionReport {
    std::size_t layer_index = 0;
    CompressionReport report;
};

/// Converts every dense convolution layer with h > 1 into a SCEF layer.
/// The returned network carries explicit per-layer ranks (rank_decay none)
/// so reloading cannot reassign them.
inline std::pair<Network, std::vector<LayerCompressionReport>> compress_network(
    const Network& net, const CompressionOptions& options) {
    std::vector<std::size_t> eligible;
    for (std::size_t idx = 0; idx < net.layers.size(); ++idx) {
        const LayerSpec& spec = net.config.layers[idx];
        if (spec.kind == LayerKind::conv2d && spec.h > 1) eligible.push_back(idx);
    }
    Network out = net;
    out.config.rank_decay = RankDecay::none;
    std::vector<LayerCompressionReport> reports;
    for (std::size_t d = 0; d < eligible.size(); ++d) {
        const std::size_t idx = eligible[d];
        const FilterBank bank = std::get<Conv2dParams>(net.layers[idx]).bank;
        const std::size_t p = std::min(bank.K(), bank.c_out);
        std::size_t r = p;
        switch (options.mode) {
            case CompressionMode::fixed_rank:
                r = std::min(options.rank, p);
                if (options.rank < 1)
                    throw parameter_error("compress_network: rank must be >= 1");
                break;
            case CompressionMode::schedule: {
                RankSchedule sched{options.decay, bank.K(), 0,
                                   eligible.empty() ? 0 : eligible.size() - 1};
                r = std::min(rank_at_depth(sched, d), p);
                break;
            }
            case CompressionMode::error_budget:
                r = smallest_rank_within_budget(bank, options.error_budget);
                break;
        }
        auto [params, report] = compress_conv_to_scef(bank, r);
        LayerSpec& spec = out.config.layers[idx];
        spec.kind = LayerKind::scef;
        spec.rank = r;
        spec.frozen = false;
        out.layers[idx] = std::move(params);
        reports.push_back(LayerCompressionReport{idx, std::move(report)});
    }
    return {std::move(out), std::move(reports)};
}

} // namespace scef
