// Command-line front end: analysis, training, compression, complexity
// accounting, robustness-bound verification and rank trajectories.
//
// Exit codes: 0 success, 1 usage, 2 data/format error, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scef/scef.hpp"

namespace fs = std::filesystem;
using scef::json;

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw scef::format_error("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
    if (!f) throw scef::format_error("cannot write " + out_path);
    f << text;
}

json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw scef::format_error(path + ": " + e.what());
    }
}

scef::json metrics_json(const scef::EpochMetrics& m) {
    return json{{"epoch", m.epoch},        {"task_loss", m.task_loss}, {"phi1", m.phi1},
                {"phi2", m.phi2},          {"total", m.total},         {"train_acc", m.train_acc},
                {"val_acc", m.val_acc}};
}

int cmd_analyze(const std::string& weights, double gamma, const std::string& format,
                const std::string& out) {
    auto [net, meta] = scef::load_checkpoint(weights);
    const std::vector<scef::EffRankReport> reports = scef::analyze_network(net, gamma);
    if (reports.empty())
        throw scef::format_error(weights + ": no analyzable layers (need conv2d/scef with h > 1)");
    if (format == "csv") {
        write_output(out, scef::analyze_report_csv(reports));
    } else {
        write_output(out, scef::analyze_report_json(reports, gamma).dump(2));
    }
    return 0;
}

int cmd_complexity(const std::string& config_path, const std::string& format,
                   const std::string& out) {
    const json j = parse_json_file(config_path);
    const scef::NetworkConfig cfg =
        scef::config_from_json(j.contains("network") ? j.at("network") : j);
    const scef::NetworkComplexity summary = scef::network_summary(cfg);
    if (format == "json") {
        write_output(out, scef::complexity_json(summary).dump(2));
    } else if (format == "csv") {
        write_output(out, scef::complexity_csv(summary));
    } else {
        write_output(out, scef::complexity_table(summary));
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir, long long seed_flag,
              const std::string& decay_flag, long long epochs_flag) {
    const json j = parse_json_file(config_path);
    if (!j.contains("network"))
        throw scef::config_error(config_path + ": missing \"network\" section");
    scef::NetworkConfig net_cfg = scef::config_from_json(j.at("network"));
    scef::TrainConfig train_cfg = j.contains("train")
                                      ? scef::train_config_from_json(j.at("train"))
                                      : scef::TrainConfig{};
    if (seed_flag >= 0) train_cfg.seed = static_cast<std::uint64_t>(seed_flag);
    if (!decay_flag.empty()) net_cfg.rank_decay = scef::rank_decay_from_string(decay_flag);
    if (epochs_flag > 0) train_cfg.epochs = static_cast<std::size_t>(epochs_flag);
    train_cfg.validate();

    fs::create_directories(out_dir);
    const scef::Dataset data = scef::make_dataset(train_cfg.dataset, train_cfg.seed);
    scef::Network net = scef::build_network(net_cfg, train_cfg.seed);

    const scef::RankDecay decay_applied = net_cfg.rank_decay;
    const auto on_checkpoint = [&](const scef::Network& n, const scef::EpochMetrics& m) {
        char name[64];
        std::snprintf(name, sizeof(name), "checkpoint-epoch%04zu.zip", m.epoch);
        scef::CheckpointMeta meta;
        meta.epoch = m.epoch;
        meta.seed = train_cfg.seed;
        meta.metrics = metrics_json(m);
        meta.rank_decay_applied = decay_applied;
        scef::save_checkpoint((fs::path(out_dir) / name).string(), n, meta);
        std::fprintf(stderr, "epoch %zu/%zu task=%.4f phi1=%.6f phi2=%.6f train=%.3f val=%.3f\n",
                     m.epoch, train_cfg.epochs, m.task_loss, m.phi1, m.phi2, m.train_acc,
                     m.val_acc);
    };
    scef::TrainResult result = scef::train(std::move(net), train_cfg, data, on_checkpoint);

    {
        std::ofstream f(fs::path(out_dir) / "metrics.csv", std::ios::binary | std::ios::trunc);
        if (!f) throw scef::format_error("cannot write metrics.csv under " + out_dir);
        f << scef::metrics_to_csv(result.log);
    }
    json summary;
    summary["schema"] = 1;
    summary["epochs"] = train_cfg.epochs;
    summary["seed"] = train_cfg.seed;
    summary["trainable_params"] = scef::network_summary(result.net.config).total_params;
    summary["final"] = result.log.empty() ? json::object() : metrics_json(result.log.back());
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int cmd_compress(const std::string& weights, const std::string& out_path, long long rank,
                 const std::string& decay, double error_budget, const std::string& report_path) {
    auto [net, meta] = scef::load_checkpoint(weights);
    scef::CompressionOptions options;
    const int picked = (rank > 0 ? 1 : 0) + (!decay.empty() ? 1 : 0) + (error_budget >= 0 ? 1 : 0);
    if (picked != 1)
        throw scef::config_error(
            "compress: choose exactly one of --rank, --rank-decay, --error-budget");
    if (rank > 0) {
        options.mode = scef::CompressionMode::fixed_rank;
        options.rank = static_cast<std::size_t>(rank);
    } else if (!decay.empty()) {
        options.mode = scef::CompressionMode::schedule;
        options.decay = scef::rank_decay_from_string(decay);
        if (options.decay == scef::RankDecay::none)
            throw scef::config_error("compress: --rank-decay must be linear or log");
    } else {
        options.mode = scef::CompressionMode::error_budget;
        options.error_budget = error_budget;
    }
    auto [compressed, reports] = scef::compress_network(net, options);
    if (reports.empty())
        throw scef::format_error(weights + ": no dense conv2d layers with h > 1 to compress");
    scef::CheckpointMeta out_meta = meta;
    out_meta.rank_decay_applied =
        options.mode == scef::CompressionMode::schedule ? options.decay : scef::RankDecay::none;
    scef::save_checkpoint(out_path, compressed, out_meta);
    const std::string text = scef::compression_json(reports).dump(2);
    if (report_path.empty()) {
        std::cout << text << "\n";
    } else {
        write_output(report_path, text);
    }
    return 0;
}

int cmd_verify_bound(const std::string& weights, long long layer, bool synthetic,
                     std::size_t c_in, std::size_t c_out, std::size_t h, std::size_t rank,
                     std::size_t trials, const std::string& epsilon_str, double scale,
                     std::size_t image_size, std::uint64_t seed, const std::string& out) {
    scef::RobustnessCheckConfig cfg;
    cfg.trials = trials;
    cfg.perturbation_scale = scale;
    cfg.image_size = image_size;

    std::vector<std::pair<std::size_t, scef::ScefParams>> targets;
    if (synthetic) {
        scef::ScefParams params = scef::init_scef(c_in, c_out, h, rank, seed);
        double eps = 1.0;
        if (epsilon_str != "auto") eps = std::stod(epsilon_str);
        // Enforce the hypothesis by rescaling each coefficient vector to eps.
        for (std::size_t i = 0; i < params.c_in; ++i)
            for (std::size_t j = 0; j < params.c_out; ++j) {
                double n2 = 0.0;
                for (std::size_t k = 0; k < params.r; ++k)
                    n2 += params.coef(i, j, k) * params.coef(i, j, k);
                if (n2 > 0.0) {
                    const double s = eps / std::sqrt(n2);
                    for (std::size_t k = 0; k < params.r; ++k) params.coef(i, j, k) *= s;
                }
            }
        cfg.epsilon = eps;
        targets.emplace_back(0, std::move(params));
    } else {
        if (weights.empty())
            throw scef::config_error("verify-bound: need --weights or --synthetic");
        auto [net, meta] = scef::load_checkpoint(weights);
        for (std::size_t idx = 0; idx < net.layers.size(); ++idx) {
            if (layer >= 0 && static_cast<std::size_t>(layer) != idx) continue;
            if (const auto* p = std::get_if<scef::ScefParams>(&net.layers[idx]))
                targets.emplace_back(idx, *p);
        }
        if (targets.empty())
            throw scef::format_error(weights + ": no SCEF layers selected for verification");
    }

    json out_json;
    out_json["schema"] = 1;
    out_json["layers"] = json::array();
    std::size_t total_violations = 0;
    for (auto& [idx, params] : targets) {
        scef::RobustnessCheckConfig layer_cfg = cfg;
        if (!synthetic) {
            if (epsilon_str == "auto") {
                double max_norm = 0.0;
                for (std::size_t i = 0; i < params.c_in; ++i)
                    for (std::size_t j = 0; j < params.c_out; ++j) {
                        double n2 = 0.0;
                        for (std::size_t k = 0; k < params.r; ++k)
                            n2 += params.coef(i, j, k) * params.coef(i, j, k);
                        max_norm = std::max(max_norm, std::sqrt(n2));
                    }
                layer_cfg.epsilon = max_norm > 0.0 ? max_norm : 1.0;
            } else {
                layer_cfg.epsilon = std::stod(epsilon_str);
            }
        } else {
            layer_cfg.epsilon = cfg.epsilon;
        }
        const scef::RobustnessReport report =
            scef::verify_robustness_bound(params, layer_cfg, seed);
        json lj = scef::robustness_json(report, layer_cfg, seed);
        lj["layer"] = idx;
        out_json["layers"].push_back(std::move(lj));
        total_violations += report.violations;
    }
    out_json["total_violations"] = total_violations;
    write_output(out, out_json.dump(2));
    return 0;
}

int cmd_trajectory(const std::vector<std::string>& paths, double gamma,
                   const std::string& format, const std::string& out) {
    if (paths.empty()) throw scef::config_error("trajectory: no checkpoints given");
    std::vector<std::pair<std::size_t, std::string>> ordered;
    for (const std::string& p : paths) {
        auto [net, meta] = scef::load_checkpoint(p);
        (void)net;
        ordered.emplace_back(meta.epoch, p);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<scef::Network> series;
    std::vector<std::size_t> epochs;
    for (const auto& [epoch, path] : ordered) {
        auto [net, meta] = scef::load_checkpoint(path);
        series.push_back(std::move(net));
        epochs.push_back(epoch);
    }
    const scef::RankTrajectory traj = scef::rank_trajectory(series, gamma);
    if (format == "csv") {
        write_output(out, scef::trajectory_csv(traj, epochs));
    } else {
        write_output(out, scef::trajectory_json(traj, epochs, gamma).dump(2));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Separable convolutional eigen-filter toolkit"};
    app.require_subcommand(1);

    std::string weights, config_path, out, format = "json", out_dir = "run";
    std::string decay, epsilon_str = "auto", report_path;
    double gamma = 0.3, error_budget = -1.0, scale = 1.0;
    long long seed_flag = -1, rank = 0, layer = -1, epochs_flag = 0;
    std::uint64_t seed = 1;
    std::size_t trials = 1000, image_size = 8, c_in = 2, c_out = 4, h = 3, srank = 3;
    bool synthetic = false;
    std::vector<std::string> ckpt_paths;

    CLI::App* analyze = app.add_subcommand("analyze", "Effective-rank analysis of a checkpoint");
    analyze->add_option("--weights", weights, "checkpoint zip")->required();
    analyze->add_option("--gamma", gamma, "effective-rank threshold (default 0.3)");
    analyze->add_option("--format", format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    analyze->add_option("--out", out, "output file (default stdout)");

    CLI::App* train = app.add_subcommand("train", "Train a network from a JSON config");
    train->add_option("--config", config_path, "config JSON with network/train sections")
        ->required();
    train->add_option("--out", out_dir, "output directory for checkpoints and metrics.csv");
    train->add_option("--seed", seed_flag, "override the training seed");
    train->add_option("--rank-decay", decay, "none|linear|log override")
        ->check(CLI::IsMember({"none", "linear", "log"}));
    train->add_option("--epochs", epochs_flag, "override the epoch count");

    CLI::App* compress = app.add_subcommand("compress", "SVD-compress conv2d layers to SCEF");
    compress->add_option("--weights", weights, "input checkpoint")->required();
    compress->add_option("--out", out, "output checkpoint")->required();
    compress->add_option("--rank", rank, "fixed rank for every layer");
    compress->add_option("--rank-decay", decay, "linear|log schedule")
        ->check(CLI::IsMember({"linear", "log"}));
    compress->add_option("--error-budget", error_budget,
                         "relative Frobenius error budget per layer");
    compress->add_option("--report", report_path, "report JSON file (default stdout)");

    CLI::App* complexity = app.add_subcommand("complexity", "Parameter/FLOP accounting");
    complexity->add_option("--config", config_path, "network config JSON")->required();
    complexity->add_option("--format", format, "table|json|csv")
        ->check(CLI::IsMember({"table", "json", "csv"}));
    complexity->add_option("--out", out, "output file (default stdout)");

    CLI::App* verify = app.add_subcommand("verify-bound", "Monte-Carlo check of the "
                                                          "perturbation bound");
    verify->add_option("--weights", weights, "checkpoint with SCEF layers");
    verify->add_option("--layer", layer, "restrict to one layer index");
    verify->add_flag("--synthetic", synthetic, "verify a freshly initialized layer instead");
    verify->add_option("--c-in", c_in, "synthetic: input channels");
    verify->add_option("--c-out", c_out, "synthetic: output channels");
    verify->add_option("--h", h, "synthetic: filter size");
    verify->add_option("--rank", srank, "synthetic: rank");
    verify->add_option("--trials", trials, "perturbation trials");
    verify->add_option("--epsilon", epsilon_str, "coefficient bound or 'auto'");
    verify->add_option("--scale", scale, "perturbation standard deviation");
    verify->add_option("--image-size", image_size, "perturbation matrix side");
    verify->add_option("--seed", seed, "base seed (per-trial seeds are seed + trial)");
    verify->add_option("--out", out, "output file (default stdout)");

    CLI::App* trajectory = app.add_subcommand("trajectory", "Effective ranks across checkpoints");
    trajectory->add_option("checkpoints", ckpt_paths, "checkpoint files")->required();
    trajectory->add_option("--gamma", gamma, "effective-rank threshold (default 0.3)");
    trajectory->add_option("--format", format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    trajectory->add_option("--out", out, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    const auto guarded = [](const std::function<int()>& fn) -> int {
        try {
            return fn();
        } catch (const scef::numeric_error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 3;
        } catch (const scef::precondition_error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 3;
        } catch (const scef::format_error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        } catch (const scef::config_error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        } catch (const scef::consistency_error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        } catch (const std::invalid_argument& e) { // dimension/parameter errors
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 3;
        }
    };

    if (analyze->parsed())
        return guarded([&] { return cmd_analyze(weights, gamma, format, out); });
    if (train->parsed())
        return guarded(
            [&] { return cmd_train(config_path, out_dir, seed_flag, decay, epochs_flag); });
    if (compress->parsed())
        return guarded(
            [&] { return cmd_compress(weights, out, rank, decay, error_budget, report_path); });
    if (complexity->parsed()) {
        if (format == "json" && !complexity->get_option("--format")->count()) format = "table";
        return guarded([&] { return cmd_complexity(config_path, format, out); });
    }
    if (verify->parsed())
        return guarded([&] {
            return cmd_verify_bound(weights, layer, synthetic, c_in, c_out, h, srank, trials,
                                    epsilon_str, scale, image_size, seed, out);
        });
    if (trajectory->parsed())
        return guarded([&] { return cmd_trajectory(ckpt_paths, gamma, format, out); });
    return 1;
}
