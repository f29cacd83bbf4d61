#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "scef/config.hpp"
#include "scef/errors.hpp"

namespace scef {

/// Trainable-parameter and multiply-accumulate counts for one layer.
/// One macc is counted as one FLOP; bias terms are not counted.
struct LayerComplexity {
    std::size_t index = 0;
    LayerKind kind = LayerKind::conv2d;
    std::size_t c_in = 0, c_out = 0, h = 0, stride = 1, rank = 0;
    bool frozen = false;
    std::int64_t t = 0; // spatial positions floor(H/stride)*floor(W/stride)
    std::int64_t params = 0;
    std::int64_t n_u = 0; // SCEF eigen-filter parameters
    std::int64_t n_a = 0; // SCEF coefficient parameters
    std::int64_t flops = 0;
};

/// Trainable parameters: Conv2D has c_in*c_out*h²; SCEF has
/// N_u + N_a = c_in*h²*r + c_in*c_out*r, with N_u = 0 when the
/// eigen-filters are frozen or r = h² (a full basis needs no training).
inline std::int64_t count_params(LayerKind kind, std::size_t c_in, std::size_t c_out,
                                 std::size_t h, std::size_t r = 0, bool frozen = false) {
    if (c_in == 0 || c_out == 0 || h == 0)
        throw parameter_error("count_params: dimensions must be positive");
    const std::int64_t ci = static_cast<std::int64_t>(c_in);
    const std::int64_t co = static_cast<std::int64_t>(c_out);
    const std::int64_t K = static_cast<std::int64_t>(h) * static_cast<std::int64_t>(h);
    if (kind == LayerKind::conv2d) return ci * co * K;
    if (kind != LayerKind::scef) throw parameter_error("count_params: expected conv2d or scef");
    if (r < 1 || static_cast<std::int64_t>(r) > K)
        throw parameter_error("count_params: rank outside [1, h^2]");
    const std::int64_t rr = static_cast<std::int64_t>(r);
    const std::int64_t n_u = (frozen || rr == K) ? 0 : ci * K * rr;
    const std::int64_t n_a = ci * co * rr;
    return n_u + n_a;
}

/// Multiply-accumulates with t = floor(H/stride)*floor(W/stride):
/// Conv2D costs t*h²*c_in*c_out, SCEF costs t*c_in*r*(h² + c_out).
/// Set count_mult_add to count multiplies and adds separately (doubles).
inline std::int64_t count_flops(LayerKind kind, std::size_t H, std::size_t W, std::size_t stride,
                                std::size_t c_in, std::size_t c_out, std::size_t h,
                                std::size_t r = 0, bool count_mult_add = false) {
    if (H == 0 || W == 0 || stride == 0 || c_in == 0 || c_out == 0 || h == 0)
        throw parameter_error("count_flops: dimensions must be positive");
    const std::int64_t t = static_cast<std::int64_t>(H / stride) *
                           static_cast<std::int64_t>(W / stride);
    const std::int64_t ci = static_cast<std::int64_t>(c_in);
    const std::int64_t co = static_cast<std::int64_t>(c_out);
    const std::int64_t K = static_cast<std::int64_t>(h) * static_cast<std::int64_t>(h);
    std::int64_t macc = 0;
    if (kind == LayerKind::conv2d) {
        macc = t * K * ci * co;
    } else if (kind == LayerKind::scef) {
        if (r < 1 || static_cast<std::int64_t>(r) > K)
            throw parameter_error("count_flops: rank outside [1, h^2]");
        macc = t * ci * static_cast<std::int64_t>(r) * (K + co);
    } else {
        throw parameter_error("count_flops: expected conv2d or scef");
    }
    return count_mult_add ? 2 * macc : macc;
}

struct NetworkComplexity {
    std::vector<LayerComplexity> layers;
    std::int64_t total_params = 0;
    std::int64_t total_flops = 0;
};

/// Per-layer complexity rows in depth order plus totals. Spatial dimensions
/// follow the literal t formula (floor division by stride, no valid-padding
/// shrinkage). Pool layers contribute no maccs; the dense head counts
/// c_in*c_out weights plus c_out bias parameters and c_in*c_out maccs.
inline NetworkComplexity network_summary(const NetworkConfig& config,
                                         bool count_mult_add = false) {
    const NetworkConfig cfg = resolve_config(config);
    NetworkComplexity out;
    std::size_t H = cfg.input.height;
    std::size_t W = cfg.input.width;
    for (std::size_t idx = 0; idx < cfg.layers.size(); ++idx) {
        const LayerSpec& l = cfg.layers[idx];
        LayerComplexity row;
        row.index = idx;
        row.kind = l.kind;
        row.c_in = l.c_in;
        row.c_out = l.c_out;
        row.h = l.h;
        row.stride = l.stride;
        row.rank = l.rank;
        row.frozen = l.frozen;
        row.t = static_cast<std::int64_t>(H / l.stride) * static_cast<std::int64_t>(W / l.stride);
        switch (l.kind) {
            case LayerKind::conv2d:
                row.params = count_params(LayerKind::conv2d, l.c_in, l.c_out, l.h);
                row.flops =
                    count_flops(LayerKind::conv2d, H, W, l.stride, l.c_in, l.c_out, l.h, 0,
                                count_mult_add);
                H /= l.stride;
                W /= l.stride;
                break;
            case LayerKind::scef: {
                const std::int64_t K = static_cast<std::int64_t>(l.h * l.h);
                row.n_u = (l.frozen || static_cast<std::int64_t>(l.rank) == K)
                              ? 0
                              : static_cast<std::int64_t>(l.c_in) * K *
                                    static_cast<std::int64_t>(l.rank);
                row.n_a = static_cast<std::int64_t>(l.c_in) *
                          static_cast<std::int64_t>(l.c_out) *
                          static_cast<std::int64_t>(l.rank);
                row.params = row.n_u + row.n_a;
                row.flops = count_flops(LayerKind::scef, H, W, l.stride, l.c_in, l.c_out, l.h,
                                        l.rank, count_mult_add);
                H /= l.stride;
                W /= l.stride;
                break;
            }
            case LayerKind::pool:
                row.t = 0;
                H /= l.stride;
                W /= l.stride;
                break;
            case LayerKind::dense:
                row.t = 1;
                row.params = static_cast<std::int64_t>(l.c_in) *
                                 static_cast<std::int64_t>(l.c_out) +
                             static_cast<std::int64_t>(l.c_out);
                row.flops = static_cast<std::int64_t>(l.c_in) *
                            static_cast<std::int64_t>(l.c_out) *
                            (count_mult_add ? 2 : 1);
                break;
        }
        out.total_params += row.params;
        out.total_flops += row.flops;
        out.layers.push_back(row);
    }
    return out;
}

} // namespace scef
