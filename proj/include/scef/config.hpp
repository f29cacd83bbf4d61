#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "scef/conv.hpp"
#include "scef/errors.hpp"
#include "scef/schedules.hpp"

namespace scef {

enum class LayerKind { conv2d, scef, pool, dense };

inline const char* to_string(LayerKind k) {
    switch (k) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::scef: return "scef";
        case LayerKind::pool: return "pool";
        default: return "dense";
    }
}

struct LayerSpec {
    LayerKind kind = LayerKind::conv2d;
    std::size_t c_in = 0; // derived from the chain; if preset it must match
    std::size_t c_out = 0;
    std::size_t h = 3;        // conv2d/scef filter size
    std::size_t stride = 1;
    Padding padding = Padding::same;
    std::size_t rank = 0;     // scef only; 0 means "K or scheduled"
    bool frozen = false;      // scef only
};

struct InputSpec {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
};

/// Network topology. Convolution-type layers are followed by ReLU; pool is a
/// stride×stride average pool; dense global-average-pools its input and is
/// the softmax classifier head.
struct NetworkConfig {
    InputSpec input;
    std::vector<LayerSpec> layers;
    RankDecay rank_decay = RankDecay::none;
};

/// Checks the topology, derives the c_in chain and spatial dimensions, and
/// assigns scheduled ranks to SCEF layers. SCEF layers whose rank equals h²
/// are frozen: a full random orthonormal basis already spans the whole
/// filter space, so the eigen-filters carry no trainable information.
inline NetworkConfig resolve_config(const NetworkConfig& raw) {
    NetworkConfig cfg = raw;
    if (cfg.input.channels == 0 || cfg.input.height == 0 || cfg.input.width == 0)
        throw config_error("network config: input dimensions must be positive");
    if (cfg.layers.empty()) throw config_error("network config: no layers");

    // Eligible depths for the rank schedule: SCEF layers, in order.
    std::size_t eligible = 0;
    for (const LayerSpec& l : cfg.layers)
        if (l.kind == LayerKind::scef) ++eligible;

    std::size_t channels = cfg.input.channels;
    std::size_t H = cfg.input.height;
    std::size_t W = cfg.input.width;
    std::size_t depth = 0; // relative depth among SCEF layers
    for (std::size_t idx = 0; idx < cfg.layers.size(); ++idx) {
        LayerSpec& l = cfg.layers[idx];
        const std::string where = "layer " + std::to_string(idx) + " (" + to_string(l.kind) + ")";
        if (l.c_in != 0 && l.c_in != channels)
            throw config_error("network config: " + where + " declares c_in=" +
                               std::to_string(l.c_in) + " but the chain carries " +
                               std::to_string(channels) + " channels");
        l.c_in = channels;
        if (l.stride == 0) throw config_error("network config: " + where + " has stride 0");
        switch (l.kind) {
            case LayerKind::conv2d:
            case LayerKind::scef: {
                if (l.c_out == 0)
                    throw config_error("network config: " + where + " requires c_out");
                if (l.h == 0 || l.h % 2 == 0)
                    throw config_error("network config: " + where + " filter size must be odd");
                if (l.kind == LayerKind::scef) {
                    if (l.h <= 1)
                        throw config_error("network config: " + where +
                                           " SCEF layers require h > 1");
                    const std::size_t K = l.h * l.h;
                    if (cfg.rank_decay != RankDecay::none) {
                        RankSchedule sched{cfg.rank_decay, K, 0,
                                           eligible > 0 ? eligible - 1 : 0};
                        l.rank = rank_at_depth(sched, depth);
                    } else if (l.rank == 0) {
                        l.rank = K;
                    }
                    if (l.rank < 1 || l.rank > K)
                        throw config_error("network config: " + where + " rank " +
                                           std::to_string(l.rank) + " outside [1, " +
                                           std::to_string(K) + "]");
                    if (l.rank == K) l.frozen = true;
                    ++depth;
                }
                const ConvGeometry g = conv_geometry(H, W, l.h, l.stride, l.padding);
                H = g.out_h;
                W = g.out_w;
                channels = l.c_out;
                break;
            }
            case LayerKind::pool: {
                if (H < l.stride || W < l.stride)
                    throw config_error("network config: " + where + " input " +
                                       std::to_string(H) + "x" + std::to_string(W) +
                                       " smaller than pool stride");
                H = H / l.stride;
                W = W / l.stride;
                break;
            }
            case LayerKind::dense: {
                if (l.c_out == 0)
                    throw config_error("network config: " + where + " requires c_out");
                if (idx + 1 != cfg.layers.size())
                    throw config_error("network config: " + where +
                                       " must be the final layer");
                channels = l.c_out;
                H = 1;
                W = 1;
                break;
            }
        }
        if (H == 0 || W == 0)
            throw config_error("network config: " + where + " produces an empty feature map");
    }
    return cfg;
}

} // namespace scef
