#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "scef/errors.hpp"
#include "scef/layers.hpp"
#include "scef/linalg.hpp"
#include "scef/network.hpp"

namespace scef {

/// Effective-rank statistics of one layer: per-channel ranks r_i, the layer
/// rank r^l from the averaged normalized spectrum, and the per-channel rank
/// histogram densities (bins 1..min(K, c_out)).
struct EffRankReport {
    std::size_t layer_index = 0; // position in the network config
    std::size_t layer_depth = 0; // position among the analyzed (h > 1) layers
    LayerKind kind = LayerKind::conv2d;
    std::size_t c_in = 0, c_out = 0, h = 0;
    double gamma = 0.3;
    std::vector<std::size_t> per_channel_ranks;
    std::size_t layer_rank = 0;
    std::vector<double> normalized_spectrum; // empty when every channel is zero
    std::vector<double> histogram;
    bool all_channels_zero = false;
};

/// Count of singular values of the K×c_out per-channel filter matrix that
/// are at least gamma times the largest; 0 for an all-zero channel.
inline std::size_t channel_effective_rank(const Matrix& filters_for_channel, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw parameter_error("channel_effective_rank: gamma must be in [0, 1]");
    const SvdResult svd = small_svd(filters_for_channel);
    const double top = svd.singular[0];
    if (top == 0.0) return 0;
    std::size_t count = 0;
    for (double s : svd.singular)
        if (s >= gamma * top) ++count;
    return count;
}

/// Per-layer effective rank: s_k = mean over nonzero input channels of
/// sigma_k/sigma_1, and r^l counts the s_k at least gamma. Zero channels are
/// excluded from the mean and carry rank 0.
inline EffRankReport layer_effective_rank(const FilterBank& bank, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw parameter_error("layer_effective_rank: gamma must be in [0, 1]");
    EffRankReport report;
    report.gamma = gamma;
    report.c_in = bank.c_in;
    report.c_out = bank.c_out;
    report.h = bank.h;
    const std::size_t p = std::min(bank.K(), bank.c_out);
    std::vector<double> ratio_sum(p, 0.0);
    std::size_t nonzero_channels = 0;
    for (std::size_t i = 0; i < bank.c_in; ++i) {
        const Matrix m = channel_matrix(bank, i);
        const SvdResult svd = small_svd(m);
        const double top = svd.singular[0];
        if (top == 0.0) {
            report.per_channel_ranks.push_back(0);
            continue;
        }
        ++nonzero_channels;
        std::size_t r_i = 0;
        for (std::size_t k = 0; k < p; ++k) {
            const double ratio = svd.singular[k] / top;
            ratio_sum[k] += ratio;
            if (svd.singular[k] >= gamma * top) ++r_i;
        }
        report.per_channel_ranks.push_back(r_i);
    }
    if (nonzero_channels == 0) {
        report.all_channels_zero = true;
        report.layer_rank = 0;
        report.histogram.assign(p, 0.0);
        return report;
    }
    report.normalized_spectrum.resize(p);
    for (std::size_t k = 0; k < p; ++k) {
        report.normalized_spectrum[k] = ratio_sum[k] / static_cast<double>(nonzero_channels);
        if (report.normalized_spectrum[k] >= gamma) ++report.layer_rank;
    }
    // Density over channels with rank >= 1, bins 1..p.
    report.histogram.assign(p, 0.0);
    std::size_t counted = 0;
    for (std::size_t r_i : report.per_channel_ranks)
        if (r_i >= 1 && r_i <= p) {
            report.histogram[r_i - 1] += 1.0;
            ++counted;
        }
    if (counted > 0)
        for (double& d : report.histogram) d /= static_cast<double>(counted);
    return report;
}

/// One report per convolution-type layer with h > 1, ordered by depth.
inline std::vector<EffRankReport> analyze_network(const Network& net, double gamma) {
    std::vector<EffRankReport> reports;
    std::size_t depth = 0;
    for (std::size_t idx = 0; idx < net.layers.size(); ++idx) {
        const LayerSpec& spec = net.config.layers[idx];
        if (spec.kind != LayerKind::conv2d && spec.kind != LayerKind::scef) continue;
        if (spec.h <= 1) continue; // 1×1 filters span a one-dimensional space
        EffRankReport report = layer_effective_rank(layer_bank(net, idx), gamma);
        report.layer_index = idx;
        report.layer_depth = depth++;
        report.kind = spec.kind;
        reports.push_back(std::move(report));
    }
    return reports;
}

/// r^l per analyzed layer per checkpoint, plus the standard deviation of
/// each layer's rank over the final 20% of checkpoints.
struct RankTrajectory {
    std::vector<std::size_t> layer_indices;      // config indices of analyzed layers
    std::vector<std::vector<std::size_t>> ranks; // [checkpoint][layer]
    std::vector<double> final_window_std;        // per layer
    std::size_t window = 0;                      // checkpoints in the final window
};

inline RankTrajectory rank_trajectory(const std::vector<Network>& series, double gamma) {
    if (series.empty()) throw parameter_error("rank_trajectory: no checkpoints");
    RankTrajectory traj;
    for (std::size_t s = 0; s < series.size(); ++s) {
        const std::vector<EffRankReport> reports = analyze_network(series[s], gamma);
        if (s == 0) {
            for (const EffRankReport& r : reports) traj.layer_indices.push_back(r.layer_index);
        } else {
            if (reports.size() != traj.layer_indices.size())
                throw consistency_error("rank_trajectory: checkpoint " + std::to_string(s) +
                                        " has a different set of analyzable layers");
            for (std::size_t d = 0; d < reports.size(); ++d)
                if (reports[d].layer_index != traj.layer_indices[d] ||
                    reports[d].c_out != series[0].config.layers[traj.layer_indices[d]].c_out ||
                    reports[d].h != series[0].config.layers[traj.layer_indices[d]].h)
                    throw consistency_error("rank_trajectory: checkpoint " + std::to_string(s) +
                                            " topology mismatch at layer " +
                                            std::to_string(reports[d].layer_index));
        }
        std::vector<std::size_t> row;
        for (const EffRankReport& r : reports) row.push_back(r.layer_rank);
        traj.ranks.push_back(std::move(row));
    }
    const std::size_t n = traj.ranks.size();
    traj.window = std::max<std::size_t>(1, (n + 4) / 5); // ceil(n/5)
    traj.final_window_std.assign(traj.layer_indices.size(), 0.0);
    for (std::size_t d = 0; d < traj.layer_indices.size(); ++d) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t s = n - traj.window; s < n; ++s) {
            const double v = static_cast<double>(traj.ranks[s][d]);
            mean += v;
            sq += v * v;
        }
        mean /= static_cast<double>(traj.window);
        sq /= static_cast<double>(traj.window);
        const double var = sq - mean * mean;
        traj.final_window_std[d] = var > 0.0 ? std::sqrt(var) : 0.0;
    }
    return traj;
}

struct RobustnessCheckConfig {
    double epsilon = 1.0;             // coefficient-norm bound
    std::size_t trials = 1000;
    double perturbation_scale = 1.0;  // std of the Gaussian perturbation entries
    std::size_t image_size = 8;       // spatial size of each perturbation matrix
};

struct RobustnessReport {
    std::size_t trials = 0;
    std::size_t checks = 0; // trials × output channels
    std::size_t violations = 0;
    double max_ratio = 0.0;
};

/// Monte-Carlo check of the perturbation bound
/// ||sum_i dI_i * w_j^(i)||_inf <= eps*h*r*sum_i ||dI_i||_2. The lemma
/// hypotheses (orthonormal bases within 1e-6, coefficient norms within
/// epsilon) are verified up front; per-trial seeds derive as seed + trial.
inline RobustnessReport verify_robustness_bound(const ScefParams& params,
                                                const RobustnessCheckConfig& cfg,
                                                std::uint64_t seed) {
    if (cfg.epsilon <= 0.0) throw parameter_error("verify_robustness_bound: epsilon must be > 0");
    if (cfg.trials < 1) throw parameter_error("verify_robustness_bound: trials must be >= 1");
    if (cfg.image_size < params.h)
        throw dimension_error("verify_robustness_bound: image smaller than the filter");

    for (std::size_t i = 0; i < params.c_in; ++i) {
        const Matrix u = params.basis_matrix(i);
        const Matrix gram = matmul(transpose(u), u);
        for (std::size_t a = 0; a < params.r; ++a)
            for (std::size_t b = 0; b < params.r; ++b) {
                const double want = a == b ? 1.0 : 0.0;
                if (std::fabs(gram(a, b) - want) > 1e-6)
                    throw precondition_error(
                        "verify_robustness_bound: eigen-filters of channel " + std::to_string(i) +
                        " are not orthonormal within 1e-6");
            }
    }
    for (std::size_t i = 0; i < params.c_in; ++i)
        for (std::size_t j = 0; j < params.c_out; ++j) {
            double n2 = 0.0;
            for (std::size_t k = 0; k < params.r; ++k) {
                const double a = params.coef(i, j, k);
                n2 += a * a;
            }
            if (std::sqrt(n2) > cfg.epsilon * (1.0 + 1e-12))
                throw precondition_error("verify_robustness_bound: ||a_" + std::to_string(j) +
                                         "^(" + std::to_string(i) + ")||_2 = " +
                                         std::to_string(std::sqrt(n2)) + " exceeds epsilon = " +
                                         std::to_string(cfg.epsilon));
        }

    const FilterBank bank = compose_filters(params);
    const double factor = cfg.epsilon * static_cast<double>(params.h) *
                          static_cast<double>(params.r);
    RobustnessReport report;
    report.trials = cfg.trials;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        std::mt19937_64 rng(seed + t);
        std::normal_distribution<double> normal(0.0, cfg.perturbation_scale);
        Tensor4 perturb(1, params.c_in, cfg.image_size, cfg.image_size);
        for (double& v : perturb.data) v = normal(rng);

        double spectral_sum = 0.0;
        for (std::size_t i = 0; i < params.c_in; ++i) {
            Matrix m(cfg.image_size, cfg.image_size);
            const double* plane = perturb.plane(0, i);
            std::copy(plane, plane + m.a.size(), m.a.begin());
            spectral_sum += spectral_norm(m);
        }
        const double rhs = factor * spectral_sum;

        const Tensor4 response = conv2d(perturb, bank, 1, Padding::valid);
        for (std::size_t j = 0; j < params.c_out; ++j) {
            const double* plane = response.plane(0, j);
            double lhs = 0.0;
            const std::size_t n = response.height * response.width;
            for (std::size_t x = 0; x < n; ++x) lhs = std::max(lhs, std::fabs(plane[x]));
            ++report.checks;
            if (lhs > rhs) ++report.violations;
            if (rhs > 0.0) report.max_ratio = std::max(report.max_ratio, lhs / rhs);
        }
    }
    return report;
}

} // namespace scef
