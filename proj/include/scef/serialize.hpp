#pragma once

#include <cstddef>
#include <string>

#include "json.hpp"
#include "scef/config.hpp"
#include "scef/errors.hpp"
#include "scef/objective.hpp"

namespace scef {

using json = nlohmann::json;

inline Padding padding_from_string(const std::string& s) {
    if (s == "valid") return Padding::valid;
    if (s == "same") return Padding::same;
    throw config_error("unknown padding '" + s + "' (expected valid|same)");
}

inline LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "conv2d") return LayerKind::conv2d;
    if (s == "scef") return LayerKind::scef;
    if (s == "pool") return LayerKind::pool;
    if (s == "dense") return LayerKind::dense;
    throw config_error("unknown layer kind '" + s + "'");
}

inline RankDecay rank_decay_from_string(const std::string& s) {
    if (s == "none") return RankDecay::none;
    if (s == "linear") return RankDecay::linear;
    if (s == "log" || s == "logarithmic") return RankDecay::logarithmic;
    throw config_error("unknown rank decay '" + s + "' (expected none|linear|log)");
}

inline json config_to_json(const NetworkConfig& cfg) {
    json j;
    j["input"] = {{"channels", cfg.input.channels},
                  {"height", cfg.input.height},
                  {"width", cfg.input.width}};
    j["rank_decay"] = to_string(cfg.rank_decay);
    j["layers"] = json::array();
    for (const LayerSpec& l : cfg.layers) {
        json lj;
        lj["kind"] = to_string(l.kind);
        if (l.c_in != 0) lj["c_in"] = l.c_in;
        switch (l.kind) {
            case LayerKind::conv2d:
                lj["c_out"] = l.c_out;
                lj["h"] = l.h;
                lj["stride"] = l.stride;
                lj["padding"] = to_string(l.padding);
                break;
            case LayerKind::scef:
                lj["c_out"] = l.c_out;
                lj["h"] = l.h;
                lj["stride"] = l.stride;
                lj["padding"] = to_string(l.padding);
                lj["rank"] = l.rank;
                lj["frozen"] = l.frozen;
                break;
            case LayerKind::pool:
                lj["stride"] = l.stride;
                break;
            case LayerKind::dense:
                lj["c_out"] = l.c_out;
                break;
        }
        j["layers"].push_back(std::move(lj));
    }
    return j;
}

inline NetworkConfig config_from_json(const json& j) {
    try {
        NetworkConfig cfg;
        const json& in = j.at("input");
        cfg.input.channels = in.at("channels").get<std::size_t>();
        cfg.input.height = in.at("height").get<std::size_t>();
        cfg.input.width = in.at("width").get<std::size_t>();
        cfg.rank_decay = rank_decay_from_string(j.value("rank_decay", "none"));
        for (const json& lj : j.at("layers")) {
            LayerSpec l;
            l.kind = layer_kind_from_string(lj.at("kind").get<std::string>());
            l.c_in = lj.value("c_in", std::size_t{0});
            l.c_out = lj.value("c_out", std::size_t{0});
            l.h = lj.value("h", std::size_t{3});
            l.stride = lj.value("stride", std::size_t{1});
            l.padding = padding_from_string(lj.value("padding", "same"));
            l.rank = lj.value("rank", std::size_t{0});
            l.frozen = lj.value("frozen", false);
            cfg.layers.push_back(l);
        }
        return cfg;
    } catch (const json::exception& e) {
        throw config_error(std::string("network config JSON: ") + e.what());
    }
}

/// Everything the training loop needs besides the topology.
struct DatasetSpec {
    enum class Kind { synthetic_bars, cifar10 };
    Kind kind = Kind::synthetic_bars;
    std::size_t n = 4000;       // bars: sample count
    std::size_t size = 16;      // bars: image side
    std::size_t classes = 4;    // bars: class count
    double noise = 0.1;         // bars: Gaussian noise sigma
    std::string dir;            // cifar10: batch directory
    std::size_t subset = 2000;  // cifar10: stratified subset size (0 = all)
};

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::size_t batch_size = 32;
    std::size_t epochs = 30;
    std::uint64_t seed = 1;
    RegWeights reg;
    bool phi1_enabled = true;
    bool phi2_enabled = true;
    double val_fraction = 0.2;
    std::size_t checkpoint_every = 1;
    DatasetSpec dataset;

    void validate() const {
        if (learning_rate < 0.0) throw config_error("train config: learning_rate must be >= 0");
        if (momentum < 0.0 || momentum >= 1.0)
            throw config_error("train config: momentum must be in [0, 1)");
        if (batch_size == 0) throw config_error("train config: batch_size must be positive");
        if (epochs == 0) throw config_error("train config: epochs must be positive");
        if (val_fraction < 0.0 || val_fraction >= 1.0)
            throw config_error("train config: val_fraction must be in [0, 1)");
        if (checkpoint_every == 0)
            throw config_error("train config: checkpoint_every must be positive");
        if (reg.lambda1_base < 0.0 || reg.lambda2 < 0.0)
            throw config_error("train config: regularization weights must be >= 0");
    }
};

inline json train_config_to_json(const TrainConfig& t) {
    json j;
    j["learning_rate"] = t.learning_rate;
    j["momentum"] = t.momentum;
    j["batch_size"] = t.batch_size;
    j["epochs"] = t.epochs;
    j["seed"] = t.seed;
    j["lambda1_base"] = t.reg.lambda1_base;
    j["lambda2"] = t.reg.lambda2;
    j["phi1_norm"] = t.reg.phi1_norm == Phi1Norm::spectral ? "spectral" : "frobenius";
    j["phi1_enabled"] = t.phi1_enabled;
    j["phi2_enabled"] = t.phi2_enabled;
    j["val_fraction"] = t.val_fraction;
    j["checkpoint_every"] = t.checkpoint_every;
    json d;
    if (t.dataset.kind == DatasetSpec::Kind::synthetic_bars) {
        d["kind"] = "synthetic_bars";
        d["n"] = t.dataset.n;
        d["size"] = t.dataset.size;
        d["classes"] = t.dataset.classes;
        d["noise"] = t.dataset.noise;
    } else {
        d["kind"] = "cifar10";
        d["dir"] = t.dataset.dir;
        d["subset"] = t.dataset.subset;
    }
    j["dataset"] = std::move(d);
    return j;
}

inline TrainConfig train_config_from_json(const json& j) {
    try {
        TrainConfig t;
        t.learning_rate = j.value("learning_rate", t.learning_rate);
        t.momentum = j.value("momentum", t.momentum);
        t.batch_size = j.value("batch_size", t.batch_size);
        t.epochs = j.value("epochs", t.epochs);
        t.seed = j.value("seed", t.seed);
        t.reg.lambda1_base = j.value("lambda1_base", t.reg.lambda1_base);
        t.reg.lambda2 = j.value("lambda2", t.reg.lambda2);
        const std::string norm = j.value("phi1_norm", "spectral");
        if (norm == "spectral") {
            t.reg.phi1_norm = Phi1Norm::spectral;
        } else if (norm == "frobenius") {
            t.reg.phi1_norm = Phi1Norm::frobenius;
        } else {
            throw config_error("train config: unknown phi1_norm '" + norm + "'");
        }
        t.phi1_enabled = j.value("phi1_enabled", true);
        t.phi2_enabled = j.value("phi2_enabled", true);
        t.val_fraction = j.value("val_fraction", t.val_fraction);
        t.checkpoint_every = j.value("checkpoint_every", t.checkpoint_every);
        if (j.contains("dataset")) {
            const json& d = j.at("dataset");
            const std::string kind = d.value("kind", "synthetic_bars");
            if (kind == "synthetic_bars") {
                t.dataset.kind = DatasetSpec::Kind::synthetic_bars;
                t.dataset.n = d.value("n", t.dataset.n);
                t.dataset.size = d.value("size", t.dataset.size);
                t.dataset.classes = d.value("classes", t.dataset.classes);
                t.dataset.noise = d.value("noise", t.dataset.noise);
            } else if (kind == "cifar10") {
                t.dataset.kind = DatasetSpec::Kind::cifar10;
                t.dataset.dir = d.value("dir", std::string());
                t.dataset.subset = d.value("subset", t.dataset.subset);
            } else {
                throw config_error("train config: unknown dataset kind '" + kind + "'");
            }
        }
        t.validate();
        return t;
    } catch (const json::exception& e) {
        throw config_error(std::string("train config JSON: ") + e.what());
    }
}

} // namespace scef
