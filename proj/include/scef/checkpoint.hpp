#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "scef/errors.hpp"
#include "scef/network.hpp"
#include "scef/npy.hpp"
#include "scef/serialize.hpp"

namespace scef {

struct CheckpointMeta {
    std::size_t epoch = 0;
    std::uint64_t seed = 0;
    json metrics = json::object();
    RankDecay rank_decay_applied = RankDecay::none;
};

/// Checkpoint container: a zip of NPY v1.0 entries named
/// layer{idx}.{param}.npy plus a manifest.json carrying the resolved
/// topology (explicit ranks; rank_decay recorded informationally so reload
/// cannot reassign them), epoch, seed and metrics.
inline void save_checkpoint(const std::string& path, const Network& net,
                            const CheckpointMeta& meta) {
    std::vector<ZipEntry> entries;
    for (std::size_t idx = 0; idx < net.layers.size(); ++idx) {
        const std::string prefix = "layer" + std::to_string(idx) + ".";
        if (const auto* conv = std::get_if<Conv2dParams>(&net.layers[idx])) {
            entries.push_back(
                {prefix + "weight.npy",
                 npy_encode({conv->bank.c_out, conv->bank.c_in, conv->bank.h, conv->bank.h},
                            conv->bank.weights)});
        } else if (const auto* scef = std::get_if<ScefParams>(&net.layers[idx])) {
            entries.push_back({prefix + "eigen_filters.npy",
                               npy_encode({scef->c_in, scef->r, scef->h, scef->h},
                                          scef->eigen_filters.weights)});
            entries.push_back({prefix + "coefficients.npy",
                               npy_encode({scef->c_in, scef->c_out, scef->r},
                                          scef->coefficients)});
        } else if (const auto* dense = std::get_if<DenseParams>(&net.layers[idx])) {
            entries.push_back(
                {prefix + "weight.npy", npy_encode({dense->c_out, dense->c_in}, dense->weight)});
            entries.push_back({prefix + "bias.npy", npy_encode({dense->c_out}, dense->bias)});
        }
    }
    NetworkConfig stored = net.config;
    stored.rank_decay = RankDecay::none; // ranks are already explicit
    json manifest;
    manifest["schema"] = 1;
    manifest["epoch"] = meta.epoch;
    manifest["seed"] = meta.seed;
    manifest["metrics"] = meta.metrics;
    manifest["rank_decay_applied"] = to_string(meta.rank_decay_applied);
    manifest["network"] = config_to_json(stored);
    entries.push_back({"manifest.json", manifest.dump(2)});
    zip_write(path, entries);
}

inline std::pair<Network, CheckpointMeta> load_checkpoint(const std::string& path) {
    const std::vector<ZipEntry> entries = zip_read(path);
    const ZipEntry* manifest_entry = nullptr;
    for (const ZipEntry& e : entries)
        if (e.name == "manifest.json") manifest_entry = &e;
    if (!manifest_entry) throw format_error("checkpoint " + path + ": missing manifest.json");

    json manifest;
    try {
        manifest = json::parse(manifest_entry->bytes);
    } catch (const json::exception& e) {
        throw format_error("checkpoint " + path + ": manifest.json does not parse: " + e.what());
    }
    if (manifest.value("schema", 0) != 1)
        throw format_error("checkpoint " + path + ": unsupported manifest schema");

    CheckpointMeta meta;
    meta.epoch = manifest.value("epoch", std::size_t{0});
    meta.seed = manifest.value("seed", std::uint64_t{0});
    meta.metrics = manifest.value("metrics", json::object());
    meta.rank_decay_applied =
        rank_decay_from_string(manifest.value("rank_decay_applied", "none"));

    Network net;
    net.config = resolve_config(config_from_json(manifest.at("network")));

    const auto find = [&](const std::string& name) -> const ZipEntry& {
        for (const ZipEntry& e : entries)
            if (e.name == name) return e;
        throw format_error("checkpoint " + path + ": missing entry " + name);
    };
    const auto expect_shape = [&](const NpyArray& arr, const std::vector<std::size_t>& shape,
                                  const std::string& name) {
        if (arr.shape != shape)
            throw format_error("checkpoint " + path + ": entry " + name +
                               " has an unexpected shape");
    };

    for (std::size_t idx = 0; idx < net.config.layers.size(); ++idx) {
        const LayerSpec& l = net.config.layers[idx];
        const std::string prefix = "layer" + std::to_string(idx) + ".";
        switch (l.kind) {
            case LayerKind::conv2d: {
                const std::string name = prefix + "weight.npy";
                NpyArray arr = npy_decode(find(name).bytes, name);
                expect_shape(arr, {l.c_out, l.c_in, l.h, l.h}, name);
                Conv2dParams p;
                p.bank = FilterBank(l.c_out, l.c_in, l.h);
                p.bank.weights = std::move(arr.data);
                p.stride = l.stride;
                p.padding = l.padding;
                net.layers.emplace_back(std::move(p));
                break;
            }
            case LayerKind::scef: {
                const std::string uname = prefix + "eigen_filters.npy";
                const std::string aname = prefix + "coefficients.npy";
                NpyArray u = npy_decode(find(uname).bytes, uname);
                NpyArray a = npy_decode(find(aname).bytes, aname);
                expect_shape(u, {l.c_in, l.rank, l.h, l.h}, uname);
                expect_shape(a, {l.c_in, l.c_out, l.rank}, aname);
                ScefParams p;
                p.c_in = l.c_in;
                p.c_out = l.c_out;
                p.h = l.h;
                p.r = l.rank;
                p.frozen = l.frozen;
                p.eigen_filters = DepthwiseBank(l.c_in, l.rank, l.h);
                p.eigen_filters.weights = std::move(u.data);
                p.coefficients = std::move(a.data);
                net.layers.emplace_back(std::move(p));
                break;
            }
            case LayerKind::pool:
                net.layers.emplace_back(PoolParams{l.stride});
                break;
            case LayerKind::dense: {
                const std::string wname = prefix + "weight.npy";
                const std::string bname = prefix + "bias.npy";
                NpyArray w = npy_decode(find(wname).bytes, wname);
                NpyArray b = npy_decode(find(bname).bytes, bname);
                expect_shape(w, {l.c_out, l.c_in}, wname);
                expect_shape(b, {l.c_out}, bname);
                DenseParams p;
                p.c_in = l.c_in;
                p.c_out = l.c_out;
                p.weight = std::move(w.data);
                p.bias = std::move(b.data);
                net.layers.emplace_back(std::move(p));
                break;
            }
        }
    }
    return {std::move(net), std::move(meta)};
}

} // namespace scef
