#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "scef/errors.hpp"

namespace scef {

enum class RankDecay { none, linear, logarithmic };

inline const char* to_string(RankDecay d) {
    switch (d) {
        case RankDecay::linear: return "linear";
        case RankDecay::logarithmic: return "log";
        default: return "none";
    }
}

/// Per-depth rank assignment over the eligible (h > 1) layers of a network.
/// Depth indices are relative: the first eligible layer is l_min.
struct RankSchedule {
    RankDecay kind = RankDecay::none;
    std::size_t K = 9; // h^2 of the layer being scheduled
    std::size_t l_min = 0;
    std::size_t l_max = 0;
};

/// Rank at depth l. Linear decay walks from K at l_min down to 1 at l_max;
/// logarithmic decay is floor((K-1)/log2(l')) on the 1-based relative depth
/// l', with the log2(1) = 0 singularity resolved as K. Results are clamped
/// to [1, K].
inline std::size_t rank_at_depth(const RankSchedule& sched, std::size_t l) {
    if (sched.l_min > sched.l_max)
        throw parameter_error("rank_at_depth: l_min exceeds l_max");
    if (l < sched.l_min || l > sched.l_max)
        throw parameter_error("rank_at_depth: depth " + std::to_string(l) + " outside [" +
                              std::to_string(sched.l_min) + ", " + std::to_string(sched.l_max) +
                              "]");
    const std::size_t K = sched.K;
    if (K == 0) throw parameter_error("rank_at_depth: K must be positive");
    std::size_t r = K;
    switch (sched.kind) {
        case RankDecay::none:
            r = K;
            break;
        case RankDecay::linear: {
            const std::size_t span = sched.l_max - sched.l_min;
            if (span == 0) {
                r = K; // degenerate single-layer network
            } else {
                // floor(K - rel*(K-1)/span) computed exactly in integers
                const std::size_t rel = l - sched.l_min;
                const std::size_t num = rel * (K - 1);
                r = K - (num + span - 1) / span;
            }
            break;
        }
        case RankDecay::logarithmic: {
            const std::size_t rel1 = l - sched.l_min + 1;
            if (rel1 == 1) {
                r = K;
            } else {
                const double denom = std::log2(static_cast<double>(rel1));
                r = static_cast<std::size_t>(
                    std::floor(static_cast<double>(K - 1) / denom));
            }
            break;
        }
    }
    if (r < 1) r = 1;
    if (r > K) r = K;
    return r;
}

struct DefaultHyperparams {
    std::vector<double> lambda1_per_layer; // 0.0001 * r
    double lambda2 = 1e-4;
    double gamma = 0.3;
};

inline DefaultHyperparams default_hyperparams(const std::vector<std::size_t>& r_per_layer) {
    DefaultHyperparams h;
    h.lambda1_per_layer.reserve(r_per_layer.size());
    for (std::size_t r : r_per_layer) {
        if (r < 1) throw parameter_error("default_hyperparams: rank must be >= 1");
        h.lambda1_per_layer.push_back(1e-4 * static_cast<double>(r));
    }
    return h;
}

} // namespace scef
