#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "scef/errors.hpp"
#include "scef/tensor.hpp"

namespace scef {

struct Dataset {
    Tensor4 images; // (n, channels, size, size)
    std::vector<int> labels;
    std::size_t classes = 0;

    std::size_t size() const { return labels.size(); }
};

/// Single-channel images of an oriented bar at a class-specific angle
/// (angle = pi*label/classes) with a random perpendicular offset, plus
/// Gaussian pixel noise. Labels are balanced and everything is a pure
/// function of the seed.
inline Dataset synthetic_bars(std::size_t n, std::size_t size, std::size_t classes,
                              std::uint64_t seed, double noise = 0.1) {
    if (classes < 2 || classes > 8)
        throw parameter_error("synthetic_bars: classes must be in [2, 8]");
    if (n == 0 || size < 4) throw parameter_error("synthetic_bars: need n >= 1 and size >= 4");
    Dataset ds;
    ds.classes = classes;
    ds.images = Tensor4(n, 1, size, size);
    ds.labels.resize(n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> offset_dist(-static_cast<double>(size) / 4.0,
                                                       static_cast<double>(size) / 4.0);
    std::normal_distribution<double> noise_dist(0.0, noise > 0.0 ? noise : 1.0);
    const double center = (static_cast<double>(size) - 1.0) / 2.0;
    const double width = 0.75; // bar thickness profile
    for (std::size_t s = 0; s < n; ++s) {
        const int label = static_cast<int>(s % classes);
        ds.labels[s] = label;
        const double angle = M_PI * static_cast<double>(label) / static_cast<double>(classes);
        const double dir_x = std::cos(angle), dir_y = std::sin(angle);
        const double offset = offset_dist(rng);
        const double cx = center - dir_y * offset;
        const double cy = center + dir_x * offset;
        double* img = ds.images.plane(s, 0);
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x) {
                const double d = -dir_y * (static_cast<double>(x) - cx) +
                                 dir_x * (static_cast<double>(y) - cy);
                double v = std::exp(-d * d / (2.0 * width * width));
                if (noise > 0.0) v += noise_dist(rng);
                img[y * size + x] = v;
            }
    }
    return ds;
}

/// Reads the standard CIFAR-10 binary batches (1 label byte + 3072 pixel
/// bytes per record, CHW, RGB) from data_batch_*.bin under dir, takes a
/// stratified subset, scales to [0,1] and normalizes per channel with
/// constants computed from that subset. subset_size 0 keeps everything.
inline Dataset load_cifar10(const std::string& dir, std::size_t subset_size) {
    namespace fs = std::filesystem;
    constexpr std::size_t kRecord = 3073;
    constexpr std::size_t kRecordsPerFile = 10000;
    constexpr std::size_t kBatchBytes = kRecord * kRecordsPerFile; // 30,730,000

    std::vector<std::string> files;
    for (int b = 1; b <= 5; ++b) {
        const fs::path p = fs::path(dir) / ("data_batch_" + std::to_string(b) + ".bin");
        if (fs::exists(p)) files.push_back(p.string());
    }
    if (files.empty())
        throw format_error("load_cifar10: no data_batch_*.bin files under " + dir);

    std::vector<std::uint8_t> raw;
    std::vector<int> labels;
    for (const std::string& file : files) {
        std::ifstream f(file, std::ios::binary);
        if (!f) throw format_error("load_cifar10: cannot open " + file);
        std::vector<char> bytes((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
        if (bytes.size() != kBatchBytes)
            throw format_error("load_cifar10: " + file + " has " +
                               std::to_string(bytes.size()) +
                               " bytes; expected 30,730,000 bytes per batch file");
        for (std::size_t rec = 0; rec < kRecordsPerFile; ++rec) {
            const std::uint8_t label = static_cast<std::uint8_t>(bytes[rec * kRecord]);
            if (label > 9)
                throw format_error("load_cifar10: " + file + " record " + std::to_string(rec) +
                                   " has label " + std::to_string(label));
            labels.push_back(label);
            const char* px = bytes.data() + rec * kRecord + 1;
            raw.insert(raw.end(), reinterpret_cast<const std::uint8_t*>(px),
                       reinterpret_cast<const std::uint8_t*>(px) + 3072);
        }
    }

    // Stratified subset with a fixed internal seed.
    const std::size_t total = labels.size();
    std::vector<std::size_t> chosen;
    if (subset_size == 0 || subset_size >= total) {
        chosen.resize(total);
        for (std::size_t i = 0; i < total; ++i) chosen[i] = i;
    } else {
        std::vector<std::vector<std::size_t>> by_class(10);
        for (std::size_t i = 0; i < total; ++i) by_class[labels[i]].push_back(i);
        std::mt19937_64 rng(0x5cef0u);
        const std::size_t base = subset_size / 10;
        const std::size_t rem = subset_size % 10;
        for (std::size_t c = 0; c < 10; ++c) {
            std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
            const std::size_t want = base + (c < rem ? 1 : 0);
            const std::size_t take = std::min(want, by_class[c].size());
            chosen.insert(chosen.end(), by_class[c].begin(), by_class[c].begin() + take);
        }
        std::sort(chosen.begin(), chosen.end());
    }

    Dataset ds;
    ds.classes = 10;
    ds.images = Tensor4(chosen.size(), 3, 32, 32);
    ds.labels.resize(chosen.size());
    for (std::size_t s = 0; s < chosen.size(); ++s) {
        ds.labels[s] = labels[chosen[s]];
        const std::uint8_t* px = raw.data() + chosen[s] * 3072;
        for (std::size_t t = 0; t < 3072; ++t)
            ds.images.data[s * 3072 + t] = static_cast<double>(px[t]) / 255.0;
    }

    // Per-channel normalization from the loaded subset.
    const std::size_t plane = 32 * 32;
    for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0, sq = 0.0;
        const std::size_t count = ds.size() * plane;
        for (std::size_t s = 0; s < ds.size(); ++s) {
            const double* p = ds.images.plane(s, c);
            for (std::size_t t = 0; t < plane; ++t) {
                mean += p[t];
                sq += p[t] * p[t];
            }
        }
        mean /= static_cast<double>(count);
        const double var = sq / static_cast<double>(count) - mean * mean;
        const double sd = var > 1e-24 ? std::sqrt(var) : 1.0;
        for (std::size_t s = 0; s < ds.size(); ++s) {
            double* p = ds.images.plane(s, c);
            for (std::size_t t = 0; t < plane; ++t) p[t] = (p[t] - mean) / sd;
        }
    }
    return ds;
}

} // namespace scef
