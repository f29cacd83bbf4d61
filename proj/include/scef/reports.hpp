#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "scef/complexity.hpp"
#include "scef/compressor.hpp"
#include "scef/rank_analysis.hpp"
#include "scef/serialize.hpp"

namespace scef {

inline json analyze_report_json(const std::vector<EffRankReport>& reports, double gamma) {
    json j;
    j["schema"] = 1;
    j["gamma"] = gamma;
    j["layers"] = json::array();
    for (const EffRankReport& r : reports) {
        json lj;
        lj["index"] = r.layer_index;
        lj["depth"] = r.layer_depth;
        lj["kind"] = to_string(r.kind);
        lj["c_in"] = r.c_in;
        lj["c_out"] = r.c_out;
        lj["h"] = r.h;
        lj["layer_rank"] = r.layer_rank;
        lj["per_channel_ranks"] = r.per_channel_ranks;
        lj["normalized_spectrum"] = r.normalized_spectrum;
        lj["histogram"] = r.histogram;
        lj["all_channels_zero"] = r.all_channels_zero;
        j["layers"].push_back(std::move(lj));
    }
    return j;
}

/// One row per layer: depth, r^l, then the rank histogram densities (bins
/// 1..min(K, c_out)); rows are padded to the widest layer.
inline std::string analyze_report_csv(const std::vector<EffRankReport>& reports) {
    std::size_t max_bins = 0;
    for (const EffRankReport& r : reports) max_bins = std::max(max_bins, r.histogram.size());
    std::string out = "depth,layer_rank";
    for (std::size_t b = 1; b <= max_bins; ++b) out += ",density_" + std::to_string(b);
    out += "\n";
    char buf[64];
    for (const EffRankReport& r : reports) {
        out += std::to_string(r.layer_depth) + "," + std::to_string(r.layer_rank);
        for (std::size_t b = 0; b < max_bins; ++b) {
            out += ",";
            if (b < r.histogram.size()) {
                std::snprintf(buf, sizeof(buf), "%.17g", r.histogram[b]);
                out += buf;
            }
        }
        out += "\n";
    }
    return out;
}

inline json trajectory_json(const RankTrajectory& traj, const std::vector<std::size_t>& epochs,
                            double gamma) {
    json j;
    j["schema"] = 1;
    j["gamma"] = gamma;
    j["layer_indices"] = traj.layer_indices;
    j["epochs"] = epochs;
    j["ranks"] = traj.ranks;
    j["final_window_std"] = traj.final_window_std;
    j["final_window"] = traj.window;
    return j;
}

/// Table rows epoch,rank_layer{i}...; the final row carries the rank
/// standard deviation over the last 20% of checkpoints.
inline std::string trajectory_csv(const RankTrajectory& traj,
                                  const std::vector<std::size_t>& epochs) {
    std::string out = "epoch";
    for (std::size_t idx : traj.layer_indices) out += ",layer" + std::to_string(idx);
    out += "\n";
    for (std::size_t s = 0; s < traj.ranks.size(); ++s) {
        out += std::to_string(s < epochs.size() ? epochs[s] : s);
        for (std::size_t rank : traj.ranks[s]) out += "," + std::to_string(rank);
        out += "\n";
    }
    char buf[64];
    out += "final_window_std";
    for (double sd : traj.final_window_std) {
        std::snprintf(buf, sizeof(buf), ",%.17g", sd);
        out += buf;
    }
    out += "\n";
    return out;
}

inline json robustness_json(const RobustnessReport& report, const RobustnessCheckConfig& cfg,
                            std::uint64_t seed) {
    json j;
    j["schema"] = 1;
    j["trials"] = report.trials;
    j["checks"] = report.checks;
    j["violations"] = report.violations;
    j["max_ratio"] = report.max_ratio;
    j["epsilon"] = cfg.epsilon;
    j["perturbation_scale"] = cfg.perturbation_scale;
    j["image_size"] = cfg.image_size;
    j["seed"] = seed;
    return j;
}

inline json compression_json(const std::vector<LayerCompressionReport>& reports) {
    json j;
    j["schema"] = 1;
    j["layers"] = json::array();
    std::int64_t params_before = 0, params_after = 0, flops_before = 0, flops_after = 0;
    for (const LayerCompressionReport& lr : reports) {
        json lj;
        lj["index"] = lr.layer_index;
        lj["rank_used"] = lr.report.rank_used;
        lj["per_channel_error"] = lr.report.per_channel_error;
        lj["total_error"] = lr.report.total_error;
        lj["relative_error"] = lr.report.relative_error;
        lj["params_before"] = lr.report.params_before;
        lj["params_after"] = lr.report.params_after;
        lj["flops_per_position_before"] = lr.report.flops_before;
        lj["flops_per_position_after"] = lr.report.flops_after;
        j["layers"].push_back(std::move(lj));
        params_before += lr.report.params_before;
        params_after += lr.report.params_after;
        flops_before += lr.report.flops_before;
        flops_after += lr.report.flops_after;
    }
    j["totals"] = {{"params_before", params_before},
                   {"params_after", params_after},
                   {"flops_per_position_before", flops_before},
                   {"flops_per_position_after", flops_after}};
    return j;
}

inline json complexity_json(const NetworkComplexity& summary) {
    json j;
    j["schema"] = 1;
    j["layers"] = json::array();
    for (const LayerComplexity& row : summary.layers) {
        json lj;
        lj["index"] = row.index;
        lj["kind"] = to_string(row.kind);
        lj["c_in"] = row.c_in;
        lj["c_out"] = row.c_out;
        lj["h"] = row.h;
        lj["stride"] = row.stride;
        if (row.kind == LayerKind::scef) {
            lj["rank"] = row.rank;
            lj["frozen"] = row.frozen;
            lj["n_u"] = row.n_u;
            lj["n_a"] = row.n_a;
        }
        lj["t"] = row.t;
        lj["params"] = row.params;
        lj["flops"] = row.flops;
        j["layers"].push_back(std::move(lj));
    }
    j["totals"] = {{"params", summary.total_params}, {"flops", summary.total_flops}};
    return j;
}

inline std::string complexity_csv(const NetworkComplexity& summary) {
    std::string out = "index,kind,c_in,c_out,h,stride,rank,t,params,flops\n";
    for (const LayerComplexity& row : summary.layers) {
        out += std::to_string(row.index);
        out += std::string(",") + to_string(row.kind);
        out += "," + std::to_string(row.c_in) + "," + std::to_string(row.c_out);
        out += "," + std::to_string(row.h) + "," + std::to_string(row.stride);
        out += "," + (row.kind == LayerKind::scef ? std::to_string(row.rank) : std::string());
        out += "," + std::to_string(row.t);
        out += "," + std::to_string(row.params) + "," + std::to_string(row.flops);
        out += "\n";
    }
    out += "total,,,,,,,," + std::to_string(summary.total_params) + "," +
           std::to_string(summary.total_flops) + "\n";
    return out;
}

inline std::string complexity_table(const NetworkComplexity& summary) {
    char line[192];
    std::string out;
    std::snprintf(line, sizeof(line), "%-5s %-7s %6s %6s %3s %6s %5s %10s %12s %16s\n", "idx",
                  "kind", "c_in", "c_out", "h", "stride", "rank", "t", "params", "flops");
    out += line;
    for (const LayerComplexity& row : summary.layers) {
        char rank[16] = "-";
        if (row.kind == LayerKind::scef) std::snprintf(rank, sizeof(rank), "%zu", row.rank);
        std::snprintf(line, sizeof(line), "%-5zu %-7s %6zu %6zu %3zu %6zu %5s %10lld %12lld %16lld\n",
                      row.index, to_string(row.kind), row.c_in, row.c_out, row.h, row.stride,
                      rank, static_cast<long long>(row.t), static_cast<long long>(row.params),
                      static_cast<long long>(row.flops));
        out += line;
    }
    std::snprintf(line, sizeof(line), "%-5s %-7s %6s %6s %3s %6s %5s %10s %12lld %16lld\n",
                  "total", "", "", "", "", "", "", "", static_cast<long long>(summary.total_params),
                  static_cast<long long>(summary.total_flops));
    out += line;
    return out;
}

} // namespace scef
